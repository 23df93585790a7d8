/**
 * Thin fetch client for the gridaudit service.
 *
 * All URLs are relative, so the UI works wherever the service mounts it.
 * Error responses carry a JSON body of the form {"detail": "..."}; a 409
 * on mark means the workbook changed under the session and is surfaced
 * as its own error type so the caller can prompt for a reload.
 */
export class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
export class StaleSessionError extends ApiError {
    constructor(message) {
        super(409, message);
        this.name = "StaleSessionError";
    }
}
async function errorDetail(response) {
    try {
        const body = (await response.json());
        if (typeof body.detail === "string")
            return body.detail;
    }
    catch {
        // non-JSON error body; fall through to the status line
    }
    return `request failed with status ${response.status}`;
}
async function getJson(url) {
    const response = await fetch(url);
    if (!response.ok) {
        throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json());
}
export function fetchWorkbook() {
    return getJson("api/workbook");
}
export function fetchGraph() {
    return getJson("api/graph");
}
export function fetchAudit(focus) {
    const url = focus
        ? `api/audit?focus=${encodeURIComponent(focus)}`
        : "api/audit";
    return getJson(url);
}
export async function postMark(request) {
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
    return (await response.json());
}
