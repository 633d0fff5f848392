import type { RequestEnvelope } from "./types.js";

/**
 * Canonical request serialization.
 *
 * Key order and formatting are fixed (SQL, then Pkcs7, then Comment, no
 * extra whitespace) so that any two paths producing the same logical
 * request produce byte-identical bodies: the console and GUI paths are
 * required to be indistinguishable on the wire.
 */
export function serializeRequest(envelope: RequestEnvelope): string {
  const ordered: Record<string, string> = { SQL: envelope.SQL };
  if (envelope.Pkcs7 != null) ordered.Pkcs7 = envelope.Pkcs7;
  if (envelope.Comment != null) ordered.Comment = envelope.Comment;
  return JSON.stringify(ordered);
}

export function consoleRequest(
  sql: string,
  pkcs7?: string | null,
  comment?: string | null,
): string {
  return serializeRequest({ SQL: sql, Pkcs7: pkcs7 ?? null, Comment: comment ?? null });
}
