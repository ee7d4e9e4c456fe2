import * as readline from 'node:readline';

import { BridgeConfig, loadConfig } from './config';
import {
  classifyDefinition,
  DEFAULT_SPEAKING_RATE_WPM,
  embedTexts,
  generateHierTitles,
  generateTitle,
  paraphrase,
  synthesize,
} from './models';
import {
  BridgeRequest,
  BridgeResponse,
  parseRequest,
  RequestError,
  requireNumber,
  requireString,
  requireStringList,
} from './protocol';

export function dispatch(request: BridgeRequest, config: BridgeConfig): Record<string, unknown> {
  if (!config.ops.has(request.op)) {
    throw new RequestError(`capability '${request.op}' not served by this bridge`, request.request_id);
  }
  const payload = request.payload;
  switch (request.op) {
    case 'title':
      return { title: generateTitle(requireString(payload, 'text')) };
    case 'hier_titles':
      return { titles: generateHierTitles(requireStringList(payload, 'texts')) };
    case 'embed':
      return embedTexts(requireStringList(payload, 'texts'));
    case 'paraphrase':
      return {
        text: paraphrase(
          requireString(payload, 'text'),
          Math.trunc(requireNumber(payload, 'max_chars')),
        ),
      };
    case 'classify_definition':
      return classifyDefinition(requireString(payload, 'text'));
    case 'tts': {
      const rate =
        payload.speaking_rate_wpm === undefined
          ? DEFAULT_SPEAKING_RATE_WPM
          : requireNumber(payload, 'speaking_rate_wpm');
      return { ...synthesize(requireString(payload, 'text'), rate, config.cacheDir) };
    }
  }
}

/** One request line in, one response line out; a bad line never kills the stream. */
export function handleLine(line: string, config: BridgeConfig): BridgeResponse {
  if (!line.trim()) {
    return { request_id: '', ok: false, error: 'empty request line' };
  }
  let request: BridgeRequest;
  try {
    request = parseRequest(line);
  } catch (err) {
    const requestId = err instanceof RequestError ? err.requestId : '';
    return { request_id: requestId, ok: false, error: (err as Error).message };
  }
  try {
    return { request_id: request.request_id, ok: true, payload: dispatch(request, config) };
  } catch (err) {
    return { request_id: request.request_id, ok: false, error: (err as Error).message };
  }
}

export function serve(config: BridgeConfig = loadConfig()): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line) => {
    const response = handleLine(line, config);
    process.stdout.write(`${JSON.stringify(response)}\n`);
  });
}

if (require.main === module) {
  serve();
}
