/**
 * Linear relevance model over hashed context/gloss features.
 *
 * The artifact is a single JSON file carrying the weight vector, so a model
 * trained by `finetune` can be served anywhere node runs. Scores are
 * sigmoid-mapped logits, always in [0, 1].
 */

import { readFileSync, writeFileSync } from "node:fs";

import { FEATURE_DIM, featurize, SparseVector } from "./features.js";

export const ARTIFACT_FORMAT = "sensecluster-bridge/linear-v1";

export interface ModelArtifact {
  format: string;
  dim: number;
  max_tokens: number;
  bias: number;
  weights_b64: string;
}

export function sigmoid(z: number): number {
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

export class RelevanceModel {
  readonly dim: number;
  maxTokens: number;
  weights: Float64Array;
  bias: number;

  constructor(dim: number = FEATURE_DIM, maxTokens = 512) {
    this.dim = dim;
    this.maxTokens = maxTokens;
    this.weights = new Float64Array(dim);
    this.bias = 0;
  }

  features(context: string, gloss: string): SparseVector {
    return featurize(context, gloss, this.dim, this.maxTokens);
  }

  logitFromFeatures(features: SparseVector): number {
    let z = this.bias;
    for (const [index, value] of features) z += this.weights[index] * value;
    return z;
  }

  logit(context: string, gloss: string): number {
    return this.logitFromFeatures(this.features(context, gloss));
  }

  score(context: string, gloss: string): number {
    return sigmoid(this.logit(context, gloss));
  }

  save(path: string): void {
    const artifact: ModelArtifact = {
      format: ARTIFACT_FORMAT,
      dim: this.dim,
      max_tokens: this.maxTokens,
      bias: this.bias,
      weights_b64: Buffer.from(new Float32Array(this.weights).buffer).toString("base64"),
    };
    writeFileSync(path, JSON.stringify(artifact));
  }

  static load(path: string): RelevanceModel {
    let artifact: ModelArtifact;
    try {
      artifact = JSON.parse(readFileSync(path, "utf-8")) as ModelArtifact;
    } catch (err) {
      throw new Error(`cannot load model from ${path}: ${(err as Error).message}`);
    }
    if (artifact.format !== ARTIFACT_FORMAT) {
      throw new Error(`unsupported artifact format: ${artifact.format}`);
    }
    const model = new RelevanceModel(artifact.dim, artifact.max_tokens);
    const packed = new Float32Array(
      new Uint8Array(Buffer.from(artifact.weights_b64, "base64")).buffer,
    );
    if (packed.length !== artifact.dim) {
      throw new Error(
        `artifact weight count ${packed.length} does not match dim ${artifact.dim}`,
      );
    }
    model.weights = Float64Array.from(packed);
    model.bias = artifact.bias;
    return model;
  }
}
