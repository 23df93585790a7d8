/**
 * Shared test fixtures: a five-cell workbook in a 3x2 grid, its dependency
 * edges, audit snapshots at a few stages, and a recording fake fetch.
 *
 * Layout: column 1 holds labels, R1C2 is the only input, R2C2 and R3C2
 * derive from it, R3C1 stays blank.
 */

import type {
  AuditPayload,
  GraphPayload,
  WorkbookPayload,
} from "../src/types.js";

export const FP = "0123456789abcdef".repeat(4);

export function workbookPayload(): WorkbookPayload {
  return {
    fingerprint: FP,
    sheet: "Mini",
    max_row: 3,
    max_col: 2,
    cells: [
      {
        address: "R1C1",
        row: 1,
        col: 1,
        display: "Sales",
        cls: "label",
        input: false,
        formula: null,
      },
      {
        address: "R1C2",
        row: 1,
        col: 2,
        display: "100",
        cls: "input",
        input: true,
        formula: null,
      },
      {
        address: "R2C1",
        row: 2,
        col: 1,
        display: "Cost",
        cls: "label",
        input: false,
        formula: null,
      },
      {
        address: "R2C2",
        row: 2,
        col: 2,
        display: "40",
        cls: "formula",
        input: false,
        formula: "=R1C2*0.4",
      },
      {
        address: "R3C2",
        row: 3,
        col: 2,
        display: "60",
        cls: "formula",
        input: false,
        formula: "=R1C2-R2C2",
      },
    ],
  };
}

export function graphPayload(): GraphPayload {
  return {
    nodes: ["R1C2", "R2C2", "R3C2"],
    edges: [
      { from: "R1C2", to: "R2C2", kind: "precise" },
      { from: "R1C2", to: "R3C2", kind: "precise" },
      { from: "R2C2", to: "R3C2", kind: "precise" },
    ],
  };
}

export function freshAudit(): AuditPayload {
  return {
    fingerprint: FP,
    colors: {
      R1C1: "yellow",
      R1C2: "yellow",
      R2C1: "yellow",
      R2C2: "red",
      R3C2: "red",
    },
    progress: { green: 0, yellow: 3, red: 2, total: 5, complete: false },
  };
}

/** Snapshot after R1C2 is checked: R2C2 becomes ready. */
export function afterFirstMark(): AuditPayload {
  return {
    fingerprint: FP,
    colors: {
      R1C1: "yellow",
      R1C2: "green",
      R2C1: "yellow",
      R2C2: "yellow",
      R3C2: "red",
    },
    progress: { green: 1, yellow: 3, red: 1, total: 5, complete: false },
  };
}

export function completeAudit(): AuditPayload {
  return {
    fingerprint: FP,
    colors: {
      R1C1: "green",
      R1C2: "green",
      R2C1: "green",
      R2C2: "green",
      R3C2: "green",
    },
    progress: { green: 5, yellow: 0, red: 0, total: 5, complete: true },
  };
}

export interface RecordedCall {
  method: string;
  url: string;
  body?: unknown;
}

export type Handler = (
  call: RecordedCall,
) => Response | object | Promise<Response | object>;

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/**
 * Replace global fetch with a router keyed by "METHOD path" (query string
 * stripped). Handlers may return plain objects, which become 200 JSON
 * responses, or a Response for other statuses. Returns the call log.
 */
export function installFetch(
  handlers: Record<string, Handler>,
): RecordedCall[] {
  const calls: RecordedCall[] = [];
  const fake = async (
    input: RequestInfo | URL,
    init?: RequestInit,
  ): Promise<Response> => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const call: RecordedCall = { method, url };
    if (init?.body) call.body = JSON.parse(String(init.body));
    calls.push(call);
    const handler = handlers[`${method} ${url.split("?")[0]}`];
    if (!handler) {
      throw new TypeError(`no handler for ${method} ${url}`);
    }
    const result = await handler(call);
    return result instanceof Response ? result : jsonResponse(result);
  };
  globalThis.fetch = fake as typeof fetch;
  return calls;
}
