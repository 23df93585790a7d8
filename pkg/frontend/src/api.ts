/**
 * Thin fetch client for the gridaudit service.
 *
 * All URLs are relative, so the UI works wherever the service mounts it.
 * Error responses carry a JSON body of the form {"detail": "..."}; a 409
 * on mark means the workbook changed under the session and is surfaced
 * as its own error type so the caller can prompt for a reload.
 */

import type {
  AuditPayload,
  GraphPayload,
  MarkRequest,
  MarkResult,
  WorkbookPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class StaleSessionError extends ApiError {
  constructor(message: string) {
    super(409, message);
    this.name = "StaleSessionError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with status ${response.status}`;
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) {
    throw new ApiError(response.status, await errorDetail(response));
  }
  return (await response.json()) as T;
}

export function fetchWorkbook(): Promise<WorkbookPayload> {
  return getJson<WorkbookPayload>("api/workbook");
}

export function fetchGraph(): Promise<GraphPayload> {
  return getJson<GraphPayload>("api/graph");
}

export function fetchAudit(focus?: string): Promise<AuditPayload> {
  const url = focus
    ? `api/audit?focus=${encodeURIComponent(focus)}`
    : "api/audit";
  return getJson<AuditPayload>(url);
}

export async function postMark(request: MarkRequest): Promise<MarkResult> {
  const response = await fetch("api/audit/mark", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(request),
  });
  if (response.status === 409) {
    throw new StaleSessionError(await errorDetail(response));
  }
  if (!response.ok) {
    throw new ApiError(response.status, await errorDetail(response));
  }
  return (await response.json()) as MarkResult;
}
