/** Payload shapes of the gridaudit HTTP API, mirrored field for field. */

export type CellClass =
  | "blank"
  | "label"
  | "input"
  | "formula"
  | "copy-right"
  | "copy-down"
  | "copy-both";

export type AuditColor = "green" | "yellow" | "dark-yellow" | "red";

export interface CellPayload {
  address: string;
  row: number;
  col: number;
  display: string;
  cls: CellClass;
  input: boolean;
  formula: string | null;
}

export interface WorkbookPayload {
  fingerprint: string;
  sheet: string;
  max_row: number;
  max_col: number;
  cells: CellPayload[];
}

export interface GraphEdge {
  from: string;
  to: string;
  kind: string;
}

export interface GraphPayload {
  nodes: string[];
  edges: GraphEdge[];
}

export interface Progress {
  green: number;
  yellow: number;
  red: number;
  total: number;
  complete: boolean;
}

export interface AuditPayload {
  fingerprint: string;
  colors: Record<string, AuditColor>;
  progress: Progress;
}

export interface MarkRequest {
  cell: string;
  checked: boolean;
  auditor: string;
  fingerprint: string;
}

export interface MarkResult {
  cell: string;
  checked: boolean;
  out_of_order: boolean;
  progress: Progress;
}
