/** Wire types matching the gateway's request and response envelopes. */

export interface RequestEnvelope {
  SQL: string;
  Pkcs7?: string | null;
  Comment?: string | null;
}

export interface ResultCell {
  Name: string;
  Value: string | null;
}

export interface ResultEntry {
  ExecutedSQL: string;
  RequestedSQL: string;
  Rows: ResultCell[][];
}

export interface ResponseEnvelope {
  Results: ResultEntry[];
  Feedback: string;
  GenerationDate: string;
  OK: boolean;
}
