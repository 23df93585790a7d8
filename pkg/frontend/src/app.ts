/**
 * Application controller: loads the workbook through the HTTP API, renders
 * the grid, and turns clicks into audit marks.
 *
 * Interaction model, audit overlay: a click selects a cell and, when the
 * cell is unchecked, also marks it checked; shift-click on a checked cell
 * unmarks it. The classes overlay is read-only, clicks only select. Every
 * selection or mutation is followed by a fresh audit snapshot fetch, so
 * displayed colors always come from the server.
 */

import {
  fetchAudit,
  fetchGraph,
  fetchWorkbook,
  postMark,
  StaleSessionError,
} from "./api.js";
import { renderGrid, updateGrid } from "./grid.js";
import {
  applyAudit,
  applyOptimisticMark,
  createViewModel,
  dependentsOf,
  precedentsOf,
  type Overlay,
  type ViewModel,
} from "./state.js";

const SHELL = `
<header class="topbar">
  <h1>gridaudit</h1>
  <span id="sheet-name" class="sheet-name"></span>
  <nav class="overlay-toggle" aria-label="overlay">
    <button type="button" data-overlay="audit" class="active">audit</button>
    <button type="button" data-overlay="classes">classes</button>
  </nav>
  <label class="auditor-box">auditor
    <input id="auditor" type="text" value="anonymous" spellcheck="false">
  </label>
  <output id="progress" class="progress"></output>
</header>
<div id="banner" class="banner" hidden></div>
<div id="celebration" class="celebration" hidden>
  Audit complete: every cell in scope is green.
</div>
<main id="gridbox" class="gridbox"></main>
<footer id="detail" class="detail" hidden></footer>
<aside id="legend" class="legend"></aside>
<div id="toasts" class="toasts"></div>
<div id="modal" class="modal" hidden>
  <div class="modal-card">
    <p id="modal-text"></p>
    <button type="button" id="reload">Reload</button>
  </div>
</div>
`;

const AUDIT_LEGEND: ReadonlyArray<[string, string]> = [
  ["audit-green", "checked"],
  ["audit-yellow", "ready"],
  ["audit-dark-yellow", "ready, same formula as focus"],
  ["audit-red", "not ready"],
];

const CLASS_LEGEND: ReadonlyArray<[string, string]> = [
  ["cls-input", "input"],
  ["cls-formula", "formula"],
  ["cls-copy-right", "copy-right"],
  ["cls-copy-down", "copy-down"],
  ["cls-copy-both", "copy-both"],
];

export interface App {
  vm: ViewModel;
  root: HTMLElement;
  /** Resolves when the most recently started interaction has settled. */
  whenIdle(): Promise<void>;
}

export async function initApp(root: HTMLElement): Promise<App> {
  root.innerHTML = SHELL;
  let loaded;
  try {
    loaded = await Promise.all([fetchWorkbook(), fetchGraph(), fetchAudit()]);
  } catch (err) {
    showBanner(root, `failed to load workbook: ${describe(err)}`);
    throw err;
  }
  const vm = createViewModel(...loaded);

  const gridbox = query(root, "#gridbox");
  query(root, "#sheet-name").textContent = vm.sheet;
  renderGrid(gridbox, vm);
  renderProgress(root, vm);
  renderLegend(root, vm);

  let marking = false;
  let inflight: Promise<void> = Promise.resolve();

  async function refreshAudit(): Promise<void> {
    const focus =
      vm.overlay === "audit" && vm.selected ? vm.selected : undefined;
    try {
      applyAudit(vm, await fetchAudit(focus));
      clearBanner(root);
    } catch (err) {
      vm.stale = true;
      showBanner(
        root,
        `could not refresh audit colors: ${describe(err)}; ` +
          "showing the last known state",
      );
    }
    updateGrid(gridbox, vm);
    renderProgress(root, vm);
  }

  async function mark(address: string, checked: boolean): Promise<void> {
    marking = true;
    const undo = applyOptimisticMark(vm, address, checked);
    updateGrid(gridbox, vm);
    try {
      const result = await postMark({
        cell: address,
        checked,
        auditor: auditorName(root),
        fingerprint: vm.fingerprint,
      });
      if (result.out_of_order) {
        showToast(
          root,
          `${address} was not ready (its precedents are unchecked)`,
          "warn",
        );
      }
      vm.progress = result.progress;
      renderProgress(root, vm);
      await refreshAudit();
    } catch (err) {
      undo();
      updateGrid(gridbox, vm);
      if (err instanceof StaleSessionError) {
        showModal(
          root,
          "The workbook changed after this session started. " +
            "Reload to audit the current version.",
        );
      } else {
        showToast(root, `mark ${address} failed: ${describe(err)}`, "error");
      }
    } finally {
      marking = false;
    }
  }

  async function onCellClick(address: string, shift: boolean): Promise<void> {
    if (!vm.cells.has(address)) {
      vm.selected = null;
      renderDetail(root, vm);
      updateGrid(gridbox, vm);
      return;
    }
    vm.selected = address;
    renderDetail(root, vm);
    updateGrid(gridbox, vm);
    if (vm.overlay !== "audit") return;
    const checked = vm.colors[address] === "green";
    if (!marking && !shift && !checked) {
      await mark(address, true);
    } else if (!marking && shift && checked) {
      await mark(address, false);
    } else {
      await refreshAudit();
    }
  }

  gridbox.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const td = target.closest<HTMLTableCellElement>("td[data-addr]");
    if (!td || !td.dataset.addr) return;
    inflight = onCellClick(td.dataset.addr, event.shiftKey);
  });

  for (const button of root.querySelectorAll<HTMLButtonElement>(
    "[data-overlay]",
  )) {
    button.addEventListener("click", () => {
      const overlay = button.dataset.overlay as Overlay;
      if (overlay === vm.overlay) return;
      vm.overlay = overlay;
      for (const other of root.querySelectorAll("[data-overlay]")) {
        other.classList.toggle("active", other === button);
      }
      updateGrid(gridbox, vm);
      renderLegend(root, vm);
      if (overlay === "audit") {
        inflight = refreshAudit();
      }
    });
  }

  query(root, "#reload").addEventListener("click", () => {
    window.location.reload();
  });

  return { vm, root, whenIdle: () => inflight };
}

function renderProgress(root: HTMLElement, vm: ViewModel): void {
  const p = vm.progress;
  query(root, "#progress").innerHTML =
    `<span class="chip chip-green">${p.green}</span>` +
    `<span class="chip chip-yellow">${p.yellow}</span>` +
    `<span class="chip chip-red">${p.red}</span>` +
    `<span class="tally">${p.green} of ${p.total} checked</span>`;
  query(root, "#celebration").hidden = !p.complete;
}

function renderDetail(root: HTMLElement, vm: ViewModel): void {
  const detail = query(root, "#detail");
  const cell = vm.selected ? vm.cells.get(vm.selected) : undefined;
  if (!vm.selected || !cell) {
    detail.hidden = true;
    detail.textContent = "";
    return;
  }
  const pre = precedentsOf(vm, vm.selected);
  const dep = dependentsOf(vm, vm.selected);
  const formula = cell.formula
    ? ` <code>${escapeHtml(cell.formula)}</code>`
    : "";
  detail.hidden = false;
  detail.innerHTML =
    `<strong>${vm.selected}</strong>${formula}` +
    ` = ${escapeHtml(cell.display)}` +
    `<span class="trace">precedents &#8592; ${pre.join(", ") || "none"}` +
    ` | dependents &#8594; ${dep.join(", ") || "none"}</span>`;
}

function renderLegend(root: HTMLElement, vm: ViewModel): void {
  const entries = vm.overlay === "audit" ? AUDIT_LEGEND : CLASS_LEGEND;
  query(root, "#legend").innerHTML = entries
    .map(
      ([cls, label]) =>
        `<span class="swatch ${cls}"></span><span>${label}</span>`,
    )
    .join(" ");
}

function auditorName(root: HTMLElement): string {
  const value = query<HTMLInputElement>(root, "#auditor").value.trim();
  return value === "" ? "anonymous" : value;
}

function showBanner(root: HTMLElement, text: string): void {
  const banner = query(root, "#banner");
  banner.textContent = text;
  banner.hidden = false;
}

function clearBanner(root: HTMLElement): void {
  const banner = query(root, "#banner");
  banner.textContent = "";
  banner.hidden = true;
}

function showToast(
  root: HTMLElement,
  text: string,
  kind: "warn" | "error",
): void {
  const toast = document.createElement("div");
  toast.className = `toast toast-${kind}`;
  toast.textContent = text;
  query(root, "#toasts").appendChild(toast);
  setTimeout(() => toast.remove(), 6000);
}

function showModal(root: HTMLElement, text: string): void {
  query(root, "#modal-text").textContent = text;
  query(root, "#modal").hidden = false;
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;");
}

function query<T extends HTMLElement = HTMLElement>(
  root: ParentNode,
  selector: string,
): T {
  const el = root.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
}
