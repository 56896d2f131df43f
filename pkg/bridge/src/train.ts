/**
 * Fine-tuning entry point: trains the relevance model on generated
 * sentence/definition pairs under the hyperparameters of the emitted
 * manifest (AdamW, cosine-annealed learning rate, gradient accumulation,
 * global-norm clipping, binary cross-entropy on logits).
 */

import { createReadStream, readFileSync } from "node:fs";
import { createInterface } from "node:readline";

import { z } from "zod";

import { RelevanceModel, sigmoid } from "./model.js";
import { SparseVector } from "./features.js";

export const manifestSchema = z.object({
  optimizer: z.string().default("adamw"),
  learning_rate: z.number().positive(),
  batch_size: z.number().int().positive(),
  epochs: z.number().int().positive(),
  scheduler: z.string().default("cosine_annealing"),
  weight_decay: z.number().min(0),
  max_grad_norm: z.number().positive(),
  gradient_accumulation_steps: z.number().int().positive(),
  max_tokens: z.number().int().positive().default(512),
  loss: z.string().default("bce_with_logits"),
  seed: z.number().int().default(0),
});

export type Manifest = z.infer<typeof manifestSchema>;

export interface TrainingPair {
  context_marked: string;
  gloss: string;
  label: 0 | 1;
}

export interface TrainResult {
  pairs: number;
  optimizerSteps: number;
  initialLoss: number;
  finalLoss: number;
  epochLosses: number[];
}

/** mulberry32: deterministic seeded RNG. */
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export async function readPairs(path: string): Promise<TrainingPair[]> {
  const pairs: TrainingPair[] = [];
  const lines = createInterface({
    input: createReadStream(path, { encoding: "utf-8" }),
    crlfDelay: Infinity,
  });
  let lineno = 0;
  for await (const line of lines) {
    lineno += 1;
    if (!line.trim()) continue;
    let record: unknown;
    try {
      record = JSON.parse(line);
    } catch {
      throw new Error(`${path}:${lineno}: not valid JSON`);
    }
    const pair = record as Partial<TrainingPair>;
    if (
      typeof pair.context_marked !== "string" ||
      typeof pair.gloss !== "string" ||
      (pair.label !== 0 && pair.label !== 1)
    ) {
      throw new Error(`${path}:${lineno}: pair needs context_marked/gloss/label`);
    }
    pairs.push({ context_marked: pair.context_marked, gloss: pair.gloss, label: pair.label });
  }
  return pairs;
}

export function loadManifest(path: string): Manifest {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  const result = manifestSchema.safeParse(raw);
  if (!result.success) {
    throw new Error(`manifest ${path} invalid: ${result.error.message}`);
  }
  return result.data;
}

/** Numerically stable BCE with logits: max(z,0) - z*y + log(1 + exp(-|z|)). */
export function bceWithLogits(logit: number, label: number): number {
  return Math.max(logit, 0) - logit * label + Math.log1p(Math.exp(-Math.abs(logit)));
}

function meanLoss(model: RelevanceModel, dataset: { features: SparseVector; label: number }[]): number {
  let total = 0;
  for (const example of dataset) {
    total += bceWithLogits(model.logitFromFeatures(example.features), example.label);
  }
  return total / dataset.length;
}

export function trainModel(
  pairs: TrainingPair[],
  manifest: Manifest,
  log: (line: string) => void = () => {},
): { model: RelevanceModel; result: TrainResult } {
  if (pairs.length === 0) throw new Error("no training pairs");
  const model = new RelevanceModel(undefined, manifest.max_tokens);
  const dataset = pairs.map((pair) => ({
    features: model.features(pair.context_marked, pair.gloss),
    label: pair.label,
  }));

  const rng = seededRng(manifest.seed);
  const microBatchesPerEpoch = Math.ceil(dataset.length / manifest.batch_size);
  const stepsPerEpoch = Math.max(
    1,
    Math.ceil(microBatchesPerEpoch / manifest.gradient_accumulation_steps),
  );
  const totalSteps = stepsPerEpoch * manifest.epochs;

  // Adam state (decoupled weight decay applied after the update).
  const m = new Float64Array(model.dim + 1);
  const v = new Float64Array(model.dim + 1);
  const beta1 = 0.9;
  const beta2 = 0.999;
  const eps = 1e-8;
  let adamStep = 0;

  const gradAccum: SparseVector = new Map();
  let biasGradAccum = 0;
  let accumulated = 0;

  const initialLoss = meanLoss(model, dataset);
  log(`initial loss ${initialLoss.toFixed(6)} over ${dataset.length} pairs`);

  const applyStep = () => {
    if (accumulated === 0) return;
    adamStep += 1;
    const progress = (adamStep - 1) / Math.max(1, totalSteps);
    const lr = 0.5 * manifest.learning_rate * (1 + Math.cos(Math.PI * progress));

    // Global-norm clip over the accumulated gradient.
    let squaredNorm = biasGradAccum * biasGradAccum;
    for (const value of gradAccum.values()) squaredNorm += value * value;
    const norm = Math.sqrt(squaredNorm);
    const scale = norm > manifest.max_grad_norm ? manifest.max_grad_norm / norm : 1;

    const biasCorrection1 = 1 - Math.pow(beta1, adamStep);
    const biasCorrection2 = 1 - Math.pow(beta2, adamStep);
    for (const [index, rawGrad] of gradAccum) {
      const grad = rawGrad * scale;
      m[index] = beta1 * m[index] + (1 - beta1) * grad;
      v[index] = beta2 * v[index] + (1 - beta2) * grad * grad;
      const mHat = m[index] / biasCorrection1;
      const vHat = v[index] / biasCorrection2;
      model.weights[index] -=
        lr * (mHat / (Math.sqrt(vHat) + eps) + manifest.weight_decay * model.weights[index]);
    }
    const biasIndex = model.dim;
    const biasGrad = biasGradAccum * scale;
    m[biasIndex] = beta1 * m[biasIndex] + (1 - beta1) * biasGrad;
    v[biasIndex] = beta2 * v[biasIndex] + (1 - beta2) * biasGrad * biasGrad;
    model.bias -=
      lr * (m[biasIndex] / biasCorrection1 / (Math.sqrt(v[biasIndex] / biasCorrection2) + eps));

    gradAccum.clear();
    biasGradAccum = 0;
    accumulated = 0;
  };

  const epochLosses: number[] = [];
  const order = dataset.map((_, i) => i);
  for (let epoch = 0; epoch < manifest.epochs; epoch++) {
    // Fisher-Yates with the seeded generator.
    for (let i = order.length - 1; i > 0; i--) {
      const j = Math.floor(rng() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    let epochLoss = 0;
    for (let start = 0; start < order.length; start += manifest.batch_size) {
      const batch = order.slice(start, start + manifest.batch_size);
      for (const index of batch) {
        const example = dataset[index];
        const logit = model.logitFromFeatures(example.features);
        epochLoss += bceWithLogits(logit, example.label);
        const dz = (sigmoid(logit) - example.label) / batch.length;
        for (const [featureIndex, value] of example.features) {
          gradAccum.set(featureIndex, (gradAccum.get(featureIndex) ?? 0) + dz * value);
        }
        biasGradAccum += dz;
      }
      accumulated += 1;
      if (accumulated >= manifest.gradient_accumulation_steps) applyStep();
    }
    applyStep(); // flush a partial accumulation window at epoch end
    epochLosses.push(epochLoss / dataset.length);
    log(`epoch ${epoch + 1}/${manifest.epochs} mean loss ${epochLosses[epoch].toFixed(6)}`);
  }

  const finalLoss = meanLoss(model, dataset);
  log(`final loss ${finalLoss.toFixed(6)} after ${adamStep} optimizer steps`);
  return {
    model,
    result: {
      pairs: dataset.length,
      optimizerSteps: adamStep,
      initialLoss,
      finalLoss,
      epochLosses,
    },
  };
}

export async function finetune(
  pairsPath: string,
  manifestPath: string,
  outPath: string,
  log: (line: string) => void = console.error,
): Promise<TrainResult> {
  const manifest = loadManifest(manifestPath);
  log(`manifest: ${JSON.stringify(manifest)}`);
  const pairs = await readPairs(pairsPath);
  const { model, result } = trainModel(pairs, manifest, log);
  model.save(outPath);
  log(`saved model to ${outPath}`);
  return result;
}
