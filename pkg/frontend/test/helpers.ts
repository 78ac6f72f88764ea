/** Shared fakes for driving a ControlSession without a real server. */

import type { ModelDescriptor } from "../src/protocol.js";
import type { SocketLike } from "../src/session.js";

export class FakeSocket implements SocketLike {
  sent: { data: string; at: number }[] = [];
  closedByClient = false;
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  /** called synchronously for every frame the client sends */
  onSend: ((data: string) => void) | null = null;

  constructor(public url: string) {}

  send(data: string): void {
    this.sent.push({ data, at: Date.now() });
    this.onSend?.(data);
  }

  close(): void {
    this.closedByClient = true;
    this.onclose?.();
  }

  // -- test-side controls --------------------------------------------------

  open(): void {
    this.onopen?.();
  }

  deliver(doc: unknown): void {
    const data = typeof doc === "string" ? doc : JSON.stringify(doc);
    this.onmessage?.({ data });
  }

  drop(): void {
    this.onclose?.();
  }

  latentFrames(): number[][] {
    return this.sent
      .map((f) => JSON.parse(f.data))
      .filter((m) => m.type === "set_latent")
      .map((m) => m.values as number[]);
  }
}

export interface Recorder {
  sockets: FakeSocket[];
  makeSocket: (url: string) => SocketLike;
}

export function socketRecorder(): Recorder {
  const sockets: FakeSocket[] = [];
  return {
    sockets,
    makeSocket: (url: string) => {
      const sock = new FakeSocket(url);
      sockets.push(sock);
      return sock;
    },
  };
}

export function descriptor(over: Partial<ModelDescriptor> = {}): ModelDescriptor {
  const bottleneck = over.bottleneck ?? 2;
  return {
    bottleneck,
    skip: over.skip ?? true,
    bounds:
      over.bounds ??
      Array.from({ length: bottleneck }, () => [0, 1] as [number, number]),
    seed: over.seed ?? 0,
  };
}

export function statusDoc(
  model: ModelDescriptor,
  over: Record<string, unknown> = {},
): Record<string, unknown> {
  return {
    type: "status",
    latent: Array(model.bottleneck).fill(0.5),
    chroma: null,
    gain: 1.0,
    generation: 0,
    underruns: 0,
    clips: 0,
    spectrum: Array(64).fill(0.01),
    model,
    ...over,
  };
}

/** Tiny deterministic PRNG so the randomized sessions are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
