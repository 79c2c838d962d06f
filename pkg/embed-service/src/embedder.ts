import { createHash } from "node:crypto";

export interface ModelRegistryEntry {
  id: string;
  dimension: number;
  weightSource: string;
}

export interface EmbeddingBackend {
  readonly entry: ModelRegistryEntry;
  embedTexts(texts: string[]): number[][];
  embedImage(image: Buffer): number[];
}

/**
 * Deterministic stand-in checkpoint: embeds any payload to a unit vector
 * derived from a SHA-256 counter stream over (model id, kind, content hash).
 * Serves the full wire protocol when real model weights are not resolvable;
 * real backends implement the same EmbeddingBackend interface.
 */
export class HashEmbedderBackend implements EmbeddingBackend {
  readonly entry: ModelRegistryEntry;

  constructor(id: string, dimension: number) {
    this.entry = { id, dimension, weightSource: "deterministic-hash" };
  }

  private vector(key: string): number[] {
    const dim = this.entry.dimension;
    const values = new Float64Array(dim);
    let filled = 0;
    for (let block = 0; filled < dim; block++) {
      const digest = createHash("sha256").update(`${this.entry.id}|${key}|${block}`).digest();
      for (let offset = 0; offset + 8 <= digest.length && filled < dim; offset += 8) {
        const word = digest.readBigUInt64BE(offset);
        values[filled++] = (Number(word >> 11n) / 2 ** 53) * 2 - 1;
      }
    }
    let norm = 0;
    for (const v of values) norm += v * v;
    norm = Math.sqrt(norm);
    return Array.from(values, (v) => v / norm);
  }

  embedTexts(texts: string[]): number[][] {
    return texts.map((text) => this.vector(`text|${text}`));
  }

  embedImage(image: Buffer): number[] {
    const contentHash = createHash("sha256").update(image).digest("hex");
    return this.vector(`image|${contentHash}`);
  }
}

export interface RegistryConfig {
  models: { id: string; dimension: number }[];
  warmupMs: number;
}

export const DEFAULT_MODELS = [
  { id: "hash-64", dimension: 64 },
  { id: "clip-hash-512", dimension: 512 },
  { id: "siglip-hash-768", dimension: 768 },
];

/** Models load asynchronously; every route answers 503 until warm-up ends. */
export class ModelRegistry {
  private backends = new Map<string, EmbeddingBackend>();
  private loaded = false;

  constructor(private readonly config: RegistryConfig) {}

  async load(): Promise<void> {
    if (this.config.warmupMs > 0) {
      await new Promise((resolve) => setTimeout(resolve, this.config.warmupMs));
    }
    for (const model of this.config.models) {
      this.backends.set(model.id, new HashEmbedderBackend(model.id, model.dimension));
    }
    this.loaded = true;
  }

  get ready(): boolean {
    return this.loaded;
  }

  ids(): string[] {
    return [...this.backends.keys()].sort();
  }

  get(id: string): EmbeddingBackend | undefined {
    return this.backends.get(id);
  }
}
