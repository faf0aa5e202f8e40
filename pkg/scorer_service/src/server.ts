import net from "node:net";
import readline from "node:readline";
import type { Readable, Writable } from "node:stream";

import { PairModel } from "./model.js";
import { ScoreRequest, formatResponse, parseRequestLine } from "./protocol.js";

export const DEFAULT_BATCH_SIZE = 64;

/**
 * Serve one request stream: read lines until EOF, answer each on the
 * output stream. Blank lines are skipped, malformed lines get an error
 * response, and neither terminates the stream. Requests are queued and
 * scored in batches; response order is not guaranteed to match request
 * order (ids carry the correlation).
 */
export async function handleStream(
  model: PairModel,
  input: Readable,
  output: Writable,
  batchSize: number = DEFAULT_BATCH_SIZE,
): Promise<void> {
  const rl = readline.createInterface({ input, crlfDelay: Infinity });
  let queue: ScoreRequest[] = [];

  const flush = () => {
    if (queue.length === 0) {
      return;
    }
    const batch = queue;
    queue = [];
    let out = "";
    for (const request of batch) {
      out += formatResponse({ id: request.id, score: model.score(request.a, request.b) });
    }
    output.write(out);
  };

  for await (const line of rl) {
    if (!line.trim()) {
      continue;
    }
    const parsed = parseRequestLine(line);
    if (!parsed.ok) {
      flush();
      output.write(formatResponse(parsed.response));
      continue;
    }
    queue.push(parsed.request);
    if (queue.length >= batchSize) {
      flush();
    }
  }
  flush();
}

export interface TcpServer {
  server: net.Server;
  host: string;
  port: number;
  close: () => Promise<void>;
}

/** Listen on host:port (port 0 picks a free one). One stream per connection. */
export function serveTcp(
  model: PairModel,
  host: string,
  port: number,
  batchSize: number = DEFAULT_BATCH_SIZE,
): Promise<TcpServer> {
  // Clients may send everything and half-close before reading responses,
  // so the write side has to survive the peer's FIN.
  const server = net.createServer({ allowHalfOpen: true }, (socket) => {
    socket.on("error", (err) => {
      // A client dropping mid-stream must not take the service down.
      console.error(`connection error: ${err.message}`);
      socket.destroy();
    });
    handleStream(model, socket, socket, batchSize)
      .catch((err) => console.error(`stream error: ${err instanceof Error ? err.message : err}`))
      .finally(() => socket.end());
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const addr = server.address() as net.AddressInfo;
      resolve({
        server,
        host: addr.address,
        port: addr.port,
        close: () =>
          new Promise<void>((res, rej) => server.close((err) => (err ? rej(err) : res()))),
      });
    });
  });
}

/** Serve a single session on stdin/stdout and return when stdin closes. */
export function serveStdio(model: PairModel, batchSize: number = DEFAULT_BATCH_SIZE): Promise<void> {
  return handleStream(model, process.stdin, process.stdout, batchSize);
}
