import net from "node:net";
import { PassThrough, Readable } from "node:stream";
import { describe, expect, it } from "vitest";

import { PairModel } from "../src/model.js";
import { formatResponse, parseRequestLine } from "../src/protocol.js";
import { handleStream, serveTcp } from "../src/server.js";

function collect(stream: PassThrough): Promise<string> {
  return new Promise((resolve) => {
    let data = "";
    stream.on("data", (chunk) => (data += chunk.toString()));
    stream.on("end", () => resolve(data));
  });
}

async function answer(payload: string, batchSize = 64): Promise<string[]> {
  const output = new PassThrough();
  const done = collect(output);
  await handleStream(PairModel.untrained(), Readable.from([payload]), output, batchSize);
  output.end();
  return (await done).split("\n").filter((line) => line.length > 0);
}

// Seeded PRNG so the fuzz corpus is the same on every run.
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    return state / 4294967296;
  };
}

const ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789 äöüßéàç漢字()\"\\";

function randomText(rand: () => number): string {
  const length = Math.floor(rand() * 40);
  let out = "";
  for (let i = 0; i < length; i++) {
    out += ALPHABET[Math.floor(rand() * ALPHABET.length)];
  }
  return out;
}

describe("request parsing", () => {
  it("accepts a valid request", () => {
    const parsed = parseRequestLine('{"id": 3, "a": "x", "la": "en", "b": "y", "lb": "xx"}');
    expect(parsed.ok).toBe(true);
    if (parsed.ok) {
      expect(parsed.request).toEqual({ id: 3, a: "x", la: "en", b: "y", lb: "xx" });
    }
  });

  it("ignores unknown fields", () => {
    const parsed = parseRequestLine('{"id": 1, "a": "", "la": "", "b": "", "lb": "", "extra": 9}');
    expect(parsed.ok).toBe(true);
  });

  it("keeps the id in error responses when it is salvageable", () => {
    const parsed = parseRequestLine('{"id": 7, "a": 12, "la": "en", "b": "y", "lb": "xx"}');
    expect(parsed.ok).toBe(false);
    if (!parsed.ok) {
      expect(parsed.response.id).toBe(7);
      expect(parsed.response.error).toMatch(/field a/);
    }
  });

  it("flags non-JSON, non-objects, and missing ids", () => {
    for (const line of ["not json {", "[1, 2]", '"str"', '{"a": "x"}', '{"id": 1.5, "a": ""}']) {
      const parsed = parseRequestLine(line);
      expect(parsed.ok).toBe(false);
      if (!parsed.ok) {
        expect(typeof parsed.response.error).toBe("string");
      }
    }
  });

  it("emits one line of JSON per response", () => {
    const line = formatResponse({ id: 4, score: 0.25 });
    expect(line.endsWith("\n")).toBe(true);
    expect(JSON.parse(line)).toEqual({ id: 4, score: 0.25 });
  });
});

describe("stream conformance", () => {
  it("answers 1000 fuzzed requests with 1000 well-formed responses", async () => {
    const rand = lcg(2024);
    const ids: number[] = [];
    let payload = "";
    for (let i = 0; i < 1000; i++) {
      // Non-contiguous ids; order scrambled by interleaving two ranges.
      const id = i % 2 === 0 ? i * 3 : 100000 - i;
      ids.push(id);
      payload +=
        JSON.stringify({
          id,
          a: randomText(rand),
          la: "en",
          b: randomText(rand),
          lb: "xx",
        }) + "\n";
    }
    const lines = await answer(payload, 32);
    expect(lines).toHaveLength(1000);
    const seen: number[] = [];
    for (const line of lines) {
      const obj = JSON.parse(line);
      expect(Object.keys(obj).sort()).toEqual(["id", "score"]);
      expect(obj.score).toBeGreaterThanOrEqual(0);
      expect(obj.score).toBeLessThanOrEqual(1);
      seen.push(obj.id);
    }
    expect(seen.slice().sort((x, y) => x - y)).toEqual(ids.slice().sort((x, y) => x - y));
  });

  it("answers a malformed line with an error and keeps going", async () => {
    const payload =
      '{"id": 1, "a": "x", "la": "en", "b": "y", "lb": "xx"}\n' +
      "this is not json\n" +
      '{"id": 2, "a": "x", "la": "en", "b": "y", "lb": "xx"}\n';
    const lines = await answer(payload);
    expect(lines).toHaveLength(3);
    const objs = lines.map((line) => JSON.parse(line));
    const errors = objs.filter((o) => "error" in o);
    const scores = objs.filter((o) => "score" in o);
    expect(errors).toHaveLength(1);
    expect(scores.map((o) => o.id).sort()).toEqual([1, 2]);
  });

  it("skips blank lines without responding to them", async () => {
    const payload = '\n\n{"id": 9, "a": "", "la": "", "b": "", "lb": ""}\n\n';
    const lines = await answer(payload);
    expect(lines).toHaveLength(1);
    expect(JSON.parse(lines[0]).id).toBe(9);
  });

  it("flushes a partial batch at end of input", async () => {
    const payload = '{"id": 5, "a": "x", "la": "en", "b": "y", "lb": "xx"}\n';
    const lines = await answer(payload, 1000);
    expect(lines).toHaveLength(1);
  });
});

function roundTrip(port: number, payload: string): Promise<string> {
  return new Promise((resolve, reject) => {
    const sock = net.createConnection({ host: "127.0.0.1", port }, () => {
      sock.write(payload);
      sock.end(); // half-close; responses still flow back
    });
    let data = "";
    sock.on("data", (chunk) => (data += chunk.toString()));
    sock.on("end", () => resolve(data));
    sock.on("error", reject);
  });
}

describe("tcp transport", () => {
  it("serves multiple connections and survives garbage", async () => {
    const tcp = await serveTcp(PairModel.untrained(), "127.0.0.1", 0, 8);
    try {
      const first = await roundTrip(
        tcp.port,
        '{"id": 0, "a": "word1", "la": "en", "b": "mot1", "lb": "xx"}\n',
      );
      expect(JSON.parse(first.trim())).toEqual({ id: 0, score: 0.5 });

      const second = await roundTrip(tcp.port, "garbage\n" + '{"id": 1, "a": "", "la": "", "b": "", "lb": ""}\n');
      const lines = second.trim().split("\n").map((line) => JSON.parse(line));
      expect(lines).toHaveLength(2);
      expect(lines.some((o) => "error" in o)).toBe(true);
      expect(lines.some((o) => o.id === 1 && "score" in o)).toBe(true);
    } finally {
      await tcp.close();
    }
  });

  it("binds an ephemeral port when asked for port 0", async () => {
    const tcp = await serveTcp(PairModel.untrained(), "127.0.0.1", 0);
    expect(tcp.port).toBeGreaterThan(0);
    await tcp.close();
  });
});
