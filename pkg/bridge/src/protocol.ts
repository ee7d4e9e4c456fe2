export const PROTO_VERSION = 'v1';

export const OPS = [
  'title',
  'hier_titles',
  'embed',
  'paraphrase',
  'classify_definition',
  'tts',
] as const;

export type Op = (typeof OPS)[number];

export interface BridgeRequest {
  op: Op;
  payload: Record<string, unknown>;
  request_id: string;
  proto: string;
}

export interface OkResponse {
  request_id: string;
  ok: true;
  payload: Record<string, unknown>;
}

export interface ErrResponse {
  request_id: string;
  ok: false;
  error: string;
}

export type BridgeResponse = OkResponse | ErrResponse;

export class RequestError extends Error {
  readonly requestId: string;

  constructor(message: string, requestId = '') {
    super(message);
    this.requestId = requestId;
  }
}

function isPlainObject(value: unknown): value is Record<string, unknown> {
  return typeof value === 'object' && value !== null && !Array.isArray(value);
}

/** Parse and validate one JSON-line request; throws RequestError on any defect. */
export function parseRequest(line: string): BridgeRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    throw new RequestError(`request line is not valid JSON: ${(err as Error).message}`);
  }
  if (!isPlainObject(raw)) {
    throw new RequestError('request must be a JSON object');
  }
  const requestId = typeof raw.request_id === 'string' ? raw.request_id : '';
  if (!requestId) {
    throw new RequestError('request is missing a string request_id');
  }
  if (raw.proto !== PROTO_VERSION) {
    throw new RequestError(`unsupported proto ${JSON.stringify(raw.proto)}`, requestId);
  }
  const op = raw.op;
  if (typeof op !== 'string' || !(OPS as readonly string[]).includes(op)) {
    throw new RequestError(`unknown op ${JSON.stringify(op)}`, requestId);
  }
  if (!isPlainObject(raw.payload)) {
    throw new RequestError('request payload must be an object', requestId);
  }
  return { op: op as Op, payload: raw.payload, request_id: requestId, proto: PROTO_VERSION };
}

export function requireString(payload: Record<string, unknown>, field: string): string {
  const value = payload[field];
  if (typeof value !== 'string') {
    throw new RequestError(`payload field '${field}' must be a string`);
  }
  return value;
}

export function requireStringList(payload: Record<string, unknown>, field: string): string[] {
  const value = payload[field];
  if (!Array.isArray(value) || value.some((item) => typeof item !== 'string')) {
    throw new RequestError(`payload field '${field}' must be a list of strings`);
  }
  return value as string[];
}

export function requireNumber(payload: Record<string, unknown>, field: string): number {
  const value = payload[field];
  if (typeof value !== 'number' || !Number.isFinite(value)) {
    throw new RequestError(`payload field '${field}' must be a finite number`);
  }
  return value;
}
