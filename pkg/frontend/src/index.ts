export { actionRequest, actionToSql } from "./actions.js";
export type { UiAction, UiActionKind } from "./actions.js";
export { GatewayClient, GatewayError } from "./api.js";
export type { FetchLike, FetchResponse } from "./api.js";
export { consoleRequest, serializeRequest } from "./envelope.js";
export { performAction, submitConsole } from "./flow.js";
export type { FlowDeps, FlowResult } from "./flow.js";
export { OptimisticPlayground } from "./optimistic.js";
export type { Occupant, PlaygroundView, Snapshot } from "./optimistic.js";
export { entryTable, feedbackBanner, resultTables, textTable } from "./render.js";
export type { FeedbackBanner, TableModel } from "./render.js";
export type {
  RequestEnvelope,
  ResponseEnvelope,
  ResultCell,
  ResultEntry,
} from "./types.js";
