/**
 * View model for the audit grid.
 *
 * Everything here is derived from API payloads; the server stays the only
 * authority on colors and classes. The one local write is the provisional
 * color applied while a mark request is in flight, and it is always
 * replaced by the next audit snapshot or rolled back on failure.
 */
export function createViewModel(workbook, graph, audit) {
    const cells = new Map();
    for (const cell of workbook.cells) {
        cells.set(cell.address, cell);
    }
    const precedents = new Map();
    const dependents = new Map();
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
function push(map, key, value) {
    const existing = map.get(key);
    if (existing) {
        existing.push(value);
    }
    else {
        map.set(key, [value]);
    }
}
export function precedentsOf(vm, address) {
    return vm.precedents.get(address) ?? [];
}
export function dependentsOf(vm, address) {
    return vm.dependents.get(address) ?? [];
}
/** Replace colors and progress wholesale with a fresh audit snapshot. */
export function applyAudit(vm, audit) {
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
export function applyOptimisticMark(vm, address, checked) {
    const previous = vm.colors[address];
    vm.colors[address] = checked ? "green" : "yellow";
    return () => {
        if (previous === undefined) {
            delete vm.colors[address];
        }
        else {
            vm.colors[address] = previous;
        }
    };
}
/**
 * CSS classes for one cell under the current overlay and selection.
 * The input marker rides along in both overlays so entered values stay
 * distinguishable from computed ones.
 */
export function cellClasses(vm, address) {
    const cell = vm.cells.get(address);
    if (!cell)
        return ["cell", "blank"];
    const classes = ["cell"];
    if (vm.overlay === "classes") {
        classes.push(`cls-${cell.cls}`);
    }
    else {
        const color = vm.colors[address];
        if (color)
            classes.push(`audit-${color}`);
    }
    if (cell.input)
        classes.push("input");
    if (vm.selected) {
        if (address === vm.selected) {
            classes.push("selected");
        }
        else if (precedentsOf(vm, vm.selected).includes(address)) {
            classes.push("precedent");
        }
        else if (dependentsOf(vm, vm.selected).includes(address)) {
            classes.push("dependent");
        }
    }
    return classes;
}
