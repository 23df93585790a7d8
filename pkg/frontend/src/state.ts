/**
 * View model for the audit grid.
 *
 * Everything here is derived from API payloads; the server stays the only
 * authority on colors and classes. The one local write is the provisional
 * color applied while a mark request is in flight, and it is always
 * replaced by the next audit snapshot or rolled back on failure.
 */

import type {
  AuditColor,
  AuditPayload,
  CellPayload,
  GraphPayload,
  Progress,
  WorkbookPayload,
} from "./types.js";

export type Overlay = "audit" | "classes";

export interface ViewModel {
  fingerprint: string;
  sheet: string;
  maxRow: number;
  maxCol: number;
  cells: Map<string, CellPayload>;
  precedents: Map<string, string[]>;
  dependents: Map<string, string[]>;
  colors: Record<string, AuditColor>;
  progress: Progress;
  overlay: Overlay;
  selected: string | null;
  stale: boolean;
}

export function createViewModel(
  workbook: WorkbookPayload,
  graph: GraphPayload,
  audit: AuditPayload,
): ViewModel {
  const cells = new Map<string, CellPayload>();
  for (const cell of workbook.cells) {
    cells.set(cell.address, cell);
  }
  const precedents = new Map<string, string[]>();
  const dependents = new Map<string, string[]>();
  for (const edge of graph.edges) {
    push(precedents, edge.to, edge.from);
    push(dependents, edge.from, edge.to);
  }
  return {
    fingerprint: workbook.fingerprint,
    sheet: workbook.sheet,
    maxRow: workbook.max_row,
    maxCol: workbook.max_col,
    cells,
    precedents,
    dependents,
    colors: { ...audit.colors },
    progress: audit.progress,
    overlay: "audit",
    selected: null,
    stale: false,
  };
}

function push(map: Map<string, string[]>, key: string, value: string): void {
  const existing = map.get(key);
  if (existing) {
    existing.push(value);
  } else {
    map.set(key, [value]);
  }
}

export function precedentsOf(vm: ViewModel, address: string): string[] {
  return vm.precedents.get(address) ?? [];
}

export function dependentsOf(vm: ViewModel, address: string): string[] {
  return vm.dependents.get(address) ?? [];
}

/** Replace colors and progress wholesale with a fresh audit snapshot. */
export function applyAudit(vm: ViewModel, audit: AuditPayload): void {
  vm.colors = { ...audit.colors };
  vm.progress = audit.progress;
  vm.stale = false;
}

/**
 * Paint the clicked cell with the direct meaning of the action (checked
 * means green) before the server answers. Returns an undo closure for
 * the failure path; the success path overwrites the guess with the next
 * audit snapshot anyway.
 */
export function applyOptimisticMark(
  vm: ViewModel,
  address: string,
  checked: boolean,
): () => void {
  const previous = vm.colors[address];
  vm.colors[address] = checked ? "green" : "yellow";
  return () => {
    if (previous === undefined) {
      delete vm.colors[address];
    } else {
      vm.colors[address] = previous;
    }
  };
}

/**
 * CSS classes for one cell under the current overlay and selection.
 * The input marker rides along in both overlays so entered values stay
 * distinguishable from computed ones.
 */
export function cellClasses(vm: ViewModel, address: string): string[] {
  const cell = vm.cells.get(address);
  if (!cell) return ["cell", "blank"];
  const classes = ["cell"];
  if (vm.overlay === "classes") {
    classes.push(`cls-${cell.cls}`);
  } else {
    const color = vm.colors[address];
    if (color) classes.push(`audit-${color}`);
  }
  if (cell.input) classes.push("input");
  if (vm.selected) {
    if (address === vm.selected) {
      classes.push("selected");
    } else if (precedentsOf(vm, vm.selected).includes(address)) {
      classes.push("precedent");
    } else if (dependentsOf(vm, vm.selected).includes(address)) {
      classes.push("dependent");
    }
  }
  return classes;
}
