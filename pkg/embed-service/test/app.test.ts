import { readFileSync, readdirSync } from "node:fs";
import { Server } from "node:http";
import { AddressInfo } from "node:net";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createApp } from "../src/app";
import { DEFAULT_MODELS, ModelRegistry } from "../src/embedder";

const CONTRACT_DIR = join(__dirname, "..", "..", "contract");

interface ContractCase {
  name: string;
  method: "GET" | "POST";
  route: string;
  request: Record<string, unknown> | null;
  status: number;
  response: Record<string, unknown>;
}

type Structure =
  | string
  | null
  | Structure[]
  | { [key: string]: Structure };

function structureOf(value: unknown): Structure {
  if (Array.isArray(value)) {
    return ["list", String(value.length), value.length ? structureOf(value[0]) : null];
  }
  if (value !== null && typeof value === "object") {
    const out: { [key: string]: Structure } = {};
    for (const key of Object.keys(value).sort()) {
      out[key] = structureOf((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  if (typeof value === "boolean") return "bool";
  if (typeof value === "number") return "number";
  if (typeof value === "string") return "string";
  return null;
}

let server: Server;
let base: string;

beforeAll(async () => {
  const registry = new ModelRegistry({ models: DEFAULT_MODELS, warmupMs: 0 });
  await registry.load();
  server = createApp(registry).listen(0);
  const { port } = server.address() as AddressInfo;
  base = `http://127.0.0.1:${port}`;
});

afterAll(() => {
  server.close();
});

async function call(method: string, route: string, body?: unknown) {
  return fetch(base + route, {
    method,
    headers: { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
}

describe("wire-protocol contract", () => {
  const cases: ContractCase[] = readdirSync(CONTRACT_DIR)
    .filter((f) => f.endsWith(".json"))
    .sort()
    .map((f) => JSON.parse(readFileSync(join(CONTRACT_DIR, f), "utf-8")));

  for (const contract of cases) {
    it(`matches ${contract.name}`, async () => {
      const response =
        contract.method === "GET"
          ? await call("GET", contract.route)
          : await call("POST", contract.route, contract.request);
      expect(response.status).toBe(contract.status);
      const body = await response.json();
      if (contract.status !== 200) {
        expect(typeof body.error).toBe("string");
      } else if (contract.name.startsWith("embed_")) {
        expect(structureOf(body)).toEqual(structureOf(contract.response));
      } else {
        expect(body.status).toBe("ok");
        expect(Array.isArray(body.models)).toBe(true);
        expect(body.models.length).toBeGreaterThan(0);
      }
    });
  }
});

describe("embedding responses", () => {
  it("returns unit-norm embeddings in request order", async () => {
    const texts = ["chopping carrots", "a saucepan", "chopping carrots"];
    const response = await call("POST", "/v1/embed/text", { model: "hash-64", texts });
    expect(response.status).toBe(200);
    const body = await response.json();
    expect(body.embeddings).toHaveLength(3);
    expect(body.embeddings[0]).toEqual(body.embeddings[2]);
    expect(body.embeddings[0]).not.toEqual(body.embeddings[1]);
    for (const vector of body.embeddings) {
      const norm = Math.sqrt(vector.reduce((acc: number, x: number) => acc + x * x, 0));
      expect(Math.abs(norm - 1)).toBeLessThan(1e-5);
    }
  });

  it("serves identical vectors across calls", async () => {
    const payload = { model: "siglip-hash-768", texts: ["washed cucumber"] };
    const first = await (await call("POST", "/v1/embed/text", payload)).json();
    const second = await (await call("POST", "/v1/embed/text", payload)).json();
    expect(first.embeddings).toEqual(second.embeddings);
    expect(first.dim).toBe(768);
  });

  it("rejects oversized image payloads", async () => {
    const oversized = "A".repeat(12 * 1024 * 1024);
    const response = await call("POST", "/v1/embed/image", {
      model: "hash-64",
      image_b64: oversized,
    });
    expect(response.status).toBe(400);
    expect((await response.json()).error).toMatch(/8 MB/);
  });

  it("rejects payloads that are not PNG or JPEG", async () => {
    const response = await call("POST", "/v1/embed/image", {
      model: "hash-64",
      image_b64: Buffer.from("plain text, not an image").toString("base64"),
    });
    expect(response.status).toBe(400);
  });

  it("rejects malformed JSON bodies", async () => {
    const response = await fetch(`${base}/v1/embed/text`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: "{not json",
    });
    expect(response.status).toBe(400);
  });

  it("answers 404 on unknown routes", async () => {
    const response = await call("GET", "/v2/nothing");
    expect(response.status).toBe(404);
  });
});

describe("warm-up", () => {
  it("returns 503 everywhere until models load", async () => {
    const registry = new ModelRegistry({ models: DEFAULT_MODELS, warmupMs: 60_000 });
    const coldServer = createApp(registry).listen(0);
    const { port } = coldServer.address() as AddressInfo;
    try {
      const health = await fetch(`http://127.0.0.1:${port}/v1/health`);
      expect(health.status).toBe(503);
      const embed = await fetch(`http://127.0.0.1:${port}/v1/embed/text`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ model: "hash-64", texts: ["x"] }),
      });
      expect(embed.status).toBe(503);
      expect((await embed.json()).error).toMatch(/loading/);
    } finally {
      coldServer.close();
    }
  });
});
