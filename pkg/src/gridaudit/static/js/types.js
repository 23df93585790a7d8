/** Payload shapes of the gridaudit HTTP API, mirrored field for field. */
export {};
