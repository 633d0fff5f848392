import type { ResponseEnvelope } from "./types.js";

export interface FetchResponse {
  status: number;
  text(): Promise<string>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<FetchResponse>;

export class GatewayError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

/** Thin client for the three gateway endpoints the browser may touch. */
export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (globalThis.fetch as unknown as FetchLike),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  /** POST the exact, already-serialized request body to /query. */
  async query(body: string): Promise<ResponseEnvelope> {
    const response = await this.fetchImpl(this.url("/query"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    const text = await response.text();
    if (response.status === 400) {
      throw new GatewayError(`gateway rejected the request body: ${text}`, 400);
    }
    if (response.status !== 200) {
      throw new GatewayError(`unexpected gateway status ${response.status}`, response.status);
    }
    return JSON.parse(text) as ResponseEnvelope;
  }

  /** The public rule document, verbatim XML. */
  async ela(): Promise<string> {
    const response = await this.fetchImpl(this.url("/ela"));
    if (response.status !== 200) {
      throw new GatewayError(`cannot fetch the rule document (${response.status})`, response.status);
    }
    return response.text();
  }

  /** Dev-mode detached signature over exactly the given SQL text. */
  async devSign(sql: string): Promise<string> {
    const response = await this.fetchImpl(this.url("/dev/sign"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ SQL: sql }),
    });
    if (response.status !== 200) {
      throw new GatewayError(`dev signer unavailable (${response.status})`, response.status);
    }
    const parsed = JSON.parse(await response.text()) as { Pkcs7: string };
    return parsed.Pkcs7;
  }
}
