import type { ResponseEnvelope, ResultEntry } from "./types.js";

export interface TableModel {
  requestedSql: string;
  executedSql: string;
  columns: string[];
  rows: (string | null)[][];
}

export interface FeedbackBanner {
  ok: boolean;
  code: string;
  detail: string;
}

/** One table per result entry, columns in server order. */
export function resultTables(envelope: ResponseEnvelope): TableModel[] {
  return envelope.Results.map(entryTable);
}

export function entryTable(entry: ResultEntry): TableModel {
  const columns = entry.Rows.length > 0 ? entry.Rows[0].map((cell) => cell.Name) : [];
  const rows = entry.Rows.map((row) => row.map((cell) => cell.Value));
  return {
    requestedSql: entry.RequestedSQL,
    executedSql: entry.ExecutedSQL,
    columns,
    rows,
  };
}

/** Feedback is "<code>: <detail>"; split it for banner display. */
export function feedbackBanner(envelope: ResponseEnvelope): FeedbackBanner {
  const feedback = envelope.Feedback;
  const colon = feedback.indexOf(":");
  if (colon < 0) {
    return { ok: envelope.OK, code: feedback.trim(), detail: "" };
  }
  return {
    ok: envelope.OK,
    code: feedback.slice(0, colon).trim(),
    detail: feedback.slice(colon + 1).trim(),
  };
}

/** Plain-text rendering for the console view. */
export function textTable(model: TableModel): string {
  if (model.columns.length === 0) {
    return "(no rows)";
  }
  const cells = [model.columns, ...model.rows.map((r) => r.map((v) => v ?? "NULL"))];
  const widths = model.columns.map((_, i) =>
    Math.max(...cells.map((row) => row[i].length)),
  );
  const line = (row: string[]) =>
    row.map((value, i) => value.padEnd(widths[i])).join(" | ");
  const separator = widths.map((w) => "-".repeat(w)).join("-+-");
  return [line(cells[0]), separator, ...cells.slice(1).map(line)].join("\n");
}
