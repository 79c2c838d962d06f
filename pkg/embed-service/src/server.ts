import { readFileSync } from "node:fs";

import { createApp } from "./app";
import { DEFAULT_MODELS, ModelRegistry, RegistryConfig } from "./embedder";

interface ServerConfig extends RegistryConfig {
  port: number;
}

function loadConfig(argv: string[]): ServerConfig {
  const config: ServerConfig = { port: 8791, warmupMs: 150, models: DEFAULT_MODELS };
  const flagIndex = argv.indexOf("--config");
  if (flagIndex >= 0 && argv[flagIndex + 1]) {
    const fromFile = JSON.parse(readFileSync(argv[flagIndex + 1], "utf-8"));
    if (typeof fromFile.port === "number") config.port = fromFile.port;
    if (typeof fromFile.warmup_ms === "number") config.warmupMs = fromFile.warmup_ms;
    if (Array.isArray(fromFile.models)) {
      config.models = fromFile.models.map((m: { id: string; dimension: number }) => ({
        id: String(m.id),
        dimension: Number(m.dimension),
      }));
    }
  }
  if (process.env.PORT) config.port = Number(process.env.PORT);
  if (process.env.WARMUP_MS) config.warmupMs = Number(process.env.WARMUP_MS);
  return config;
}

function main(): void {
  const config = loadConfig(process.argv.slice(2));
  const registry = new ModelRegistry(config);
  const app = createApp(registry);
  const server = app.listen(config.port, () => {
    console.log(`embed-service listening on :${config.port} (warming up ${config.warmupMs} ms)`);
  });
  void registry.load().then(() => {
    console.log(`models ready: ${registry.ids().join(", ")}`);
  });
  const shutdown = () => server.close(() => process.exit(0));
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main();
