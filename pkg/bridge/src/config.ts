import * as os from 'node:os';
import * as path from 'node:path';

import { Op, OPS } from './protocol';

export interface BridgeConfig {
  /** Identifier of the backing model per capability, for audit/reporting. */
  models: Record<Op, string>;
  /** Device preference; the built-in backends are pure CPU. */
  device: 'cpu';
  /** Directory for synthesized audio assets. */
  cacheDir: string;
  /**
   * Capabilities this process serves.  A capability left out of the caller's
   * adapters config falls back to the compiler's built-in stubs; requests for
   * an op not listed here are refused with ok:false.
   */
  ops: ReadonlySet<Op>;
}

const BUILTIN_MODELS: Record<Op, string> = {
  title: 'builtin/first-sentence',
  hier_titles: 'builtin/first-paragraph-rollup',
  embed: 'builtin/hashing-vectorizer-64',
  paraphrase: 'builtin/word-boundary',
  classify_definition: 'builtin/copula-cues',
  tts: 'builtin/tone-synth-16k',
};

/** Configuration from the environment; every knob has a working default. */
export function loadConfig(env: NodeJS.ProcessEnv = process.env): BridgeConfig {
  const cacheDir =
    env.TRAILERFORGE_BRIDGE_CACHE ?? path.join(os.tmpdir(), 'trailerforge-bridge');
  let ops: Set<Op> = new Set(OPS);
  if (env.TRAILERFORGE_BRIDGE_OPS) {
    ops = new Set<Op>();
    for (const name of env.TRAILERFORGE_BRIDGE_OPS.split(',')) {
      const trimmed = name.trim();
      if ((OPS as readonly string[]).includes(trimmed)) {
        ops.add(trimmed as Op);
      }
    }
  }
  return { models: BUILTIN_MODELS, device: 'cpu', cacheDir, ops };
}
