import { consoleRequest } from "./envelope.js";

export type UiActionKind =
  | "place-child"
  | "remove-child"
  | "move-child"
  | "give-toy"
  | "return-toy"
  | "raw-sql";

export interface UiAction {
  kind: UiActionKind;
  ninu?: string;
  item?: number;
  posx?: number;
  posy?: number;
  sql?: string;
}

function quote(value: string): string {
  return "'" + value.replace(/'/g, "''") + "'";
}

function requireField<T>(value: T | undefined, kind: string, field: string): T {
  if (value === undefined) {
    throw new Error(`${kind} action needs ${field}`);
  }
  return value;
}

/** Deterministic SQL templates: one per GUI action kind. */
export function actionToSql(action: UiAction): string {
  switch (action.kind) {
    case "place-child": {
      const ninu = requireField(action.ninu, action.kind, "ninu");
      const posx = requireField(action.posx, action.kind, "posx");
      const posy = requireField(action.posy, action.kind, "posy");
      return `INSERT INTO sandbox (ninu, posx, posy) VALUES (${quote(ninu)}, ${posx}, ${posy});`;
    }
    case "remove-child": {
      const ninu = requireField(action.ninu, action.kind, "ninu");
      return `DELETE FROM sandbox WHERE ninu = ${quote(ninu)};`;
    }
    case "move-child": {
      const ninu = requireField(action.ninu, action.kind, "ninu");
      const posx = requireField(action.posx, action.kind, "posx");
      const posy = requireField(action.posy, action.kind, "posy");
      return `UPDATE sandbox SET posx = ${posx}, posy = ${posy} WHERE ninu = ${quote(ninu)};`;
    }
    case "give-toy": {
      const ninu = requireField(action.ninu, action.kind, "ninu");
      const item = requireField(action.item, action.kind, "item");
      return `UPDATE sandbox SET item = ${item} WHERE ninu = ${quote(ninu)};`;
    }
    case "return-toy": {
      const ninu = requireField(action.ninu, action.kind, "ninu");
      return `UPDATE sandbox SET item = NULL WHERE ninu = ${quote(ninu)};`;
    }
    case "raw-sql":
      return requireField(action.sql, action.kind, "sql");
  }
}

/** GUI-path request body; byte-identical to the console path by design. */
export function actionRequest(
  action: UiAction,
  pkcs7?: string | null,
  comment?: string | null,
): string {
  return consoleRequest(actionToSql(action), pkcs7, comment);
}
