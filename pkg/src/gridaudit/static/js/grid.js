/**
 * DOM rendering of the workbook grid.
 *
 * The table is built once from the workbook payload; later state changes
 * only rewrite class lists, so recoloring the frontier after a mark never
 * rebuilds or reloads anything.
 */
import { cellClasses } from "./state.js";
export function renderGrid(container, vm) {
    const table = document.createElement("table");
    table.className = "grid";
    const head = document.createElement("tr");
    head.appendChild(document.createElement("th"));
    for (let c = 1; c <= vm.maxCol; c++) {
        const th = document.createElement("th");
        th.textContent = `C${c}`;
        head.appendChild(th);
    }
    const thead = document.createElement("thead");
    thead.appendChild(head);
    table.appendChild(thead);
    const body = document.createElement("tbody");
    table.appendChild(body);
    for (let r = 1; r <= vm.maxRow; r++) {
        const row = document.createElement("tr");
        const label = document.createElement("th");
        label.textContent = `R${r}`;
        row.appendChild(label);
        for (let c = 1; c <= vm.maxCol; c++) {
            const address = `R${r}C${c}`;
            const td = document.createElement("td");
            td.dataset.addr = address;
            const cell = vm.cells.get(address);
            if (cell) {
                td.textContent = cell.display;
                td.title = cell.formula ? `${address} ${cell.formula}` : address;
            }
            row.appendChild(td);
        }
        body.appendChild(row);
    }
    container.replaceChildren(table);
    updateGrid(container, vm);
}
export function updateGrid(container, vm) {
    container.classList.toggle("stale", vm.stale);
    const tds = container.querySelectorAll("td[data-addr]");
    for (const td of tds) {
        td.className = cellClasses(vm, td.dataset.addr ?? "").join(" ");
    }
}
export function cellAt(container, address) {
    return container.querySelector(`td[data-addr="${address}"]`);
}
