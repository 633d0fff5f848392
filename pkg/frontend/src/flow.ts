import { actionToSql, type UiAction } from "./actions.js";
import { GatewayClient } from "./api.js";
import { consoleRequest } from "./envelope.js";
import { OptimisticPlayground } from "./optimistic.js";
import type { ResponseEnvelope } from "./types.js";

export interface FlowDeps {
  client: GatewayClient;
  playground: OptimisticPlayground;
  /** What-you-see-is-what-you-sign dialog; resolves false on cancel. */
  confirmSql(sql: string): Promise<boolean>;
  /** Detached signer for the exact displayed bytes; null submits as anon. */
  sign?: (sql: string) => Promise<string | null>;
  comment?: string;
}

export interface FlowResult {
  sent: boolean;
  displayedSql: string;
  requestBody?: string;
  response?: ResponseEnvelope;
  reversed: boolean;
  error?: string;
}

/**
 * The full GUI action flow: generate SQL, show it for signing, apply the
 * optimistic view change, submit, and reverse the view on a negative
 * response or a transport failure.
 */
export async function performAction(action: UiAction, deps: FlowDeps): Promise<FlowResult> {
  const sql = actionToSql(action);
  const confirmed = await deps.confirmSql(sql);
  if (!confirmed) {
    return { sent: false, displayedSql: sql, reversed: false };
  }
  const prior = deps.playground.apply(action);
  let pkcs7: string | null = null;
  try {
    if (deps.sign) {
      pkcs7 = await deps.sign(sql);
    }
    const body = consoleRequest(sql, pkcs7, deps.comment ?? null);
    const response = await deps.client.query(body);
    if (!response.OK) {
      deps.playground.restore(prior);
      return { sent: true, displayedSql: sql, requestBody: body, response, reversed: true };
    }
    return { sent: true, displayedSql: sql, requestBody: body, response, reversed: false };
  } catch (error) {
    deps.playground.restore(prior);
    return {
      sent: true,
      displayedSql: sql,
      reversed: true,
      error: error instanceof Error ? error.message : String(error),
    };
  }
}

/** Console path: free-form SQL through the identical pipeline. */
export async function submitConsole(sql: string, deps: FlowDeps): Promise<FlowResult> {
  return performAction({ kind: "raw-sql", sql }, deps);
}
