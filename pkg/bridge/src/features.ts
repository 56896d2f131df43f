/**
 * Text featurization for the relevance model: lowercase alphanumeric tokens,
 * hashed into a fixed-size sparse vector. Three feature families carry the
 * signal: context unigrams, gloss unigrams, and context/gloss overlap
 * interactions (tokens present on both sides).
 */

export const FEATURE_DIM = 1 << 15;

const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function tokenize(text: string, maxTokens = Infinity): string[] {
  const tokens = text.toLowerCase().match(TOKEN_RE) ?? [];
  return tokens.length > maxTokens ? tokens.slice(0, maxTokens) : tokens;
}

/** FNV-1a 32-bit. */
export function hashToken(token: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < token.length; i++) {
    hash ^= token.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

export type SparseVector = Map<number, number>;

function bump(vector: SparseVector, key: string, dim: number): void {
  const index = hashToken(key) % dim;
  vector.set(index, (vector.get(index) ?? 0) + 1);
}

export function featurize(
  context: string,
  gloss: string,
  dim: number = FEATURE_DIM,
  maxTokens = Infinity,
): SparseVector {
  const contextTokens = tokenize(context, maxTokens);
  const glossTokens = tokenize(gloss, maxTokens);
  const vector: SparseVector = new Map();
  for (const token of contextTokens) bump(vector, `c:${token}`, dim);
  for (const token of glossTokens) bump(vector, `g:${token}`, dim);
  const glossSet = new Set(glossTokens);
  for (const token of new Set(contextTokens)) {
    if (glossSet.has(token)) bump(vector, `b:${token}`, dim);
  }
  // Bias-adjacent scale feature keeps logits stable across lengths.
  vector.set(hashToken("len") % dim, Math.log1p(contextTokens.length + glossTokens.length));
  return vector;
}
