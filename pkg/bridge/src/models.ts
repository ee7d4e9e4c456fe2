import { createHash } from 'node:crypto';
import * as fs from 'node:fs';
import * as path from 'node:path';

export const EMBED_DIM = 64;
export const SAMPLE_RATE_HZ = 16000;
export const DEFAULT_SPEAKING_RATE_WPM = 150;

const DEFINITION_CUES = ['is a', 'is an', 'is the', 'refers to', 'is defined as'];

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(/[\p{L}\p{N}_]+/gu) ?? [];
}

function titleCase(tokens: string[]): string {
  return tokens.map((tok) => tok.charAt(0).toUpperCase() + tok.slice(1)).join(' ');
}

/** Title from the opening sentence: compact, deterministic, no model weights. */
export function generateTitle(text: string): string {
  const firstSentence = text.split(/[.!?]/, 1)[0] ?? '';
  const tokens = tokenize(firstSentence).slice(0, 8);
  if (tokens.length === 0) {
    const any = tokenize(text).slice(0, 8);
    return any.length > 0 ? titleCase(any) : 'Untitled';
  }
  return titleCase(tokens);
}

/** One roll-up title for a document group, from the leading paragraphs. */
export function generateHierTitles(texts: string[]): string[] {
  const leads = texts.map((text) => text.split('\n\n', 1)[0] ?? '');
  return [generateTitle(leads.join(' '))];
}

function fnv1a(token: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < token.length; i++) {
    hash ^= token.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** Hashing vectorizer: signed token counts folded into EMBED_DIM buckets, L2-normalized. */
export function embedTexts(texts: string[]): { vectors: number[][]; dim: number } {
  const vectors = texts.map((text) => {
    const vec = new Array<number>(EMBED_DIM).fill(0);
    for (const token of tokenize(text)) {
      const hash = fnv1a(token);
      const bucket = hash % EMBED_DIM;
      const sign = (hash >>> 16) & 1 ? 1 : -1;
      vec[bucket] = (vec[bucket] ?? 0) + sign;
    }
    const norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0));
    return norm > 0 ? vec.map((x) => x / norm) : vec;
  });
  return { vectors, dim: EMBED_DIM };
}

/** Word-boundary compression to maxChars, always ending with an ellipsis when cut. */
export function paraphrase(text: string, maxChars: number): string {
  if (text.length <= maxChars) {
    return text;
  }
  let out = '';
  for (const word of text.split(/\s+/).filter(Boolean)) {
    const candidate = out ? `${out} ${word}` : word;
    if (candidate.length + 1 > maxChars) {
      break;
    }
    out = candidate;
  }
  if (!out) {
    out = text.slice(0, Math.max(0, maxChars - 1));
  }
  return `${out}…`;
}

/** Copula-cue classifier: subject within the first 4 tokens, 8-60 tokens total. */
export function classifyDefinition(text: string): { label: string; score: number } {
  const tokens = tokenize(text);
  if (tokens.length < 8 || tokens.length > 60) {
    return { label: 'non_definition', score: 0.02 };
  }
  for (let start = 1; start <= 4; start++) {
    for (const cue of DEFINITION_CUES) {
      const cueTokens = cue.split(' ');
      const end = start + cueTokens.length;
      if (
        end < tokens.length &&
        cueTokens.every((tok, i) => tokens[start + i] === tok)
      ) {
        return { label: 'definition', score: 0.98 };
      }
    }
  }
  return { label: 'non_definition', score: 0.08 };
}

function wavBytes(samples: Int16Array): Buffer {
  const dataSize = samples.length * 2;
  const header = Buffer.alloc(44);
  header.write('RIFF', 0, 'ascii');
  header.writeUInt32LE(36 + dataSize, 4);
  header.write('WAVE', 8, 'ascii');
  header.write('fmt ', 12, 'ascii');
  header.writeUInt32LE(16, 16); // PCM chunk size
  header.writeUInt16LE(1, 20); // PCM format
  header.writeUInt16LE(1, 22); // mono
  header.writeUInt32LE(SAMPLE_RATE_HZ, 24);
  header.writeUInt32LE(SAMPLE_RATE_HZ * 2, 28); // byte rate
  header.writeUInt16LE(2, 32); // block align
  header.writeUInt16LE(16, 34); // bits per sample
  header.write('data', 36, 'ascii');
  header.writeUInt32LE(dataSize, 40);
  return Buffer.concat([header, Buffer.from(samples.buffer, 0, dataSize)]);
}

export interface TtsResult {
  audio_path: string | null;
  duration_s: number;
}

/**
 * Placeholder voice: a quiet tone sized to the estimated speech duration.
 * The returned duration is measured from the samples actually written, so it
 * matches the audio file exactly.
 */
export function synthesize(text: string, speakingRateWpm: number, cacheDir: string): TtsResult {
  const words = text.split(/\s+/).filter(Boolean).length;
  if (words === 0) {
    return { audio_path: null, duration_s: 0 };
  }
  const estimated = Math.max(0.5, (words / speakingRateWpm) * 60);
  const sampleCount = Math.round(estimated * SAMPLE_RATE_HZ);
  const samples = new Int16Array(sampleCount);
  for (let i = 0; i < sampleCount; i++) {
    samples[i] = Math.round(Math.sin((2 * Math.PI * 220 * i) / SAMPLE_RATE_HZ) * 3000);
  }
  const digest = createHash('sha256')
    .update(`${speakingRateWpm}:${text}`)
    .digest('hex')
    .slice(0, 16);
  fs.mkdirSync(cacheDir, { recursive: true });
  const audioPath = path.join(cacheDir, `vo-${digest}.wav`);
  if (!fs.existsSync(audioPath)) {
    fs.writeFileSync(audioPath, wavBytes(samples));
  }
  return { audio_path: audioPath, duration_s: sampleCount / SAMPLE_RATE_HZ };
}
