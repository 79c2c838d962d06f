import express, { Express, NextFunction, Request, Response } from "express";

import { ModelRegistry } from "./embedder";

const MAX_IMAGE_BYTES = 8 * 1024 * 1024;

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47]);
const JPEG_MAGIC = Buffer.from([0xff, 0xd8, 0xff]);

function looksLikeImage(bytes: Buffer): boolean {
  return (
    bytes.subarray(0, 4).equals(PNG_MAGIC) || bytes.subarray(0, 3).equals(JPEG_MAGIC)
  );
}

export function createApp(registry: ModelRegistry): Express {
  const app = express();
  app.use(express.json({ limit: "16mb" }));

  // Malformed JSON bodies are client errors, not crashes.
  app.use((err: Error, _req: Request, res: Response, next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: "request body is not valid JSON" });
      return;
    }
    next(err);
  });

  const requireReady = (_req: Request, res: Response, next: NextFunction) => {
    if (!registry.ready) {
      res.status(503).json({ error: "models are still loading" });
      return;
    }
    next();
  };

  app.get("/v1/health", requireReady, (_req, res) => {
    res.json({ status: "ok", models: registry.ids() });
  });

  app.post("/v1/embed/text", requireReady, (req, res) => {
    const { model, texts } = req.body ?? {};
    const backend = typeof model === "string" ? registry.get(model) : undefined;
    if (!backend) {
      res.status(400).json({ error: "unknown model" });
      return;
    }
    if (!Array.isArray(texts) || !texts.every((t) => typeof t === "string")) {
      res.status(400).json({ error: "texts must be a list of strings" });
      return;
    }
    res.json({
      model: backend.entry.id,
      dim: backend.entry.dimension,
      embeddings: backend.embedTexts(texts),
    });
  });

  app.post("/v1/embed/image", requireReady, (req, res) => {
    const { model, image_b64 } = req.body ?? {};
    const backend = typeof model === "string" ? registry.get(model) : undefined;
    if (!backend) {
      res.status(400).json({ error: "unknown model" });
      return;
    }
    if (typeof image_b64 !== "string" || image_b64.length === 0) {
      res.status(400).json({ error: "image_b64 must be a base64 string" });
      return;
    }
    if (image_b64.length * 0.75 > MAX_IMAGE_BYTES) {
      res.status(400).json({ error: "image exceeds the 8 MB payload cap" });
      return;
    }
    const bytes = Buffer.from(image_b64, "base64");
    if (bytes.length === 0 || !looksLikeImage(bytes)) {
      res.status(400).json({ error: "image_b64 must decode to a PNG or JPEG" });
      return;
    }
    res.json({
      model: backend.entry.id,
      dim: backend.entry.dimension,
      embeddings: [backend.embedImage(bytes)],
    });
  });

  app.use((_req, res) => {
    res.status(404).json({ error: "not found" });
  });

  return app;
}
