/**
 * Client session for the synth control socket.
 *
 * Owns the socket lifecycle (connect, retry with backoff), a local copy of
 * the control state, and the outgoing-message discipline: latent slider
 * drags are rate-limited with a trailing edge, chroma and gain changes go
 * out immediately.  Incoming status echoes are authoritative — local
 * controls snap to them whenever no drag is in flight, so after a reconnect
 * the panel always converges to whatever the server is actually playing.
 *
 * The session never guesses at the latent width: sliders only exist once a
 * status has delivered the model descriptor, and a descriptor change drops
 * any queued drag aimed at the old model.
 */

import * as wire from "./protocol.js";
import type { ModelDescriptor, StatusMessage } from "./protocol.js";
import { UpdateThrottle } from "./throttle.js";

/** The slice of the WebSocket surface we rely on (and fake in tests). */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionState = "connecting" | "open" | "closed";

export interface SessionOptions {
  url: string;
  makeSocket?: SocketFactory;
  /** initial reconnect delay; doubles per consecutive failure, capped at 16x */
  retryMs?: number;
  /** floor between latent sends; the default keeps drags under 30 msg/s */
  minSendIntervalMs?: number;
}

const defaultFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

const sameLayout = (a: ModelDescriptor | null, b: ModelDescriptor): boolean =>
  a !== null &&
  a.bottleneck === b.bottleneck &&
  a.skip === b.skip &&
  JSON.stringify(a.bounds) === JSON.stringify(b.bounds);

export class ControlSession {
  readonly url: string;
  connection: ConnectionState = "closed";
  descriptor: ModelDescriptor | null = null;
  sliders: number[] = [];
  chroma: number | null = null;
  gain = 1.0;
  lastStatus: StatusMessage | null = null;

  onStatus: ((st: StatusMessage) => void) | null = null;
  onDescriptor: ((d: ModelDescriptor) => void) | null = null;
  onConnection: ((c: ConnectionState) => void) | null = null;

  private socket: SocketLike | null = null;
  private readonly makeSocket: SocketFactory;
  private readonly retryMs: number;
  private retryCount = 0;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private shutDown = false;
  /** a status echo has arrived on the current socket */
  private echoed = false;
  private readonly latentOut: UpdateThrottle;

  constructor(opts: SessionOptions) {
    this.url = opts.url;
    this.makeSocket = opts.makeSocket ?? defaultFactory;
    this.retryMs = opts.retryMs ?? 500;
    this.latentOut = new UpdateThrottle((msg) => {
      try {
        this.socket?.send(msg);
      } catch {
        // lost a race with a disconnect; the reset in handleDrop follows
      }
    }, opts.minSendIntervalMs ?? 34);
  }

  /** True while a slider drag still has a queued trailing send. */
  get dragging(): boolean {
    return this.latentOut.busy;
  }

  connect(): void {
    if (this.socket !== null) return;
    this.shutDown = false;
    this.echoed = false;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.setConnection("connecting");
    const sock = this.makeSocket(this.url);
    this.socket = sock;
    sock.onopen = () => {
      if (sock !== this.socket) return;
      this.retryCount = 0;
      this.setConnection("open");
      sock.send(wire.getStatus());
    };
    sock.onmessage = (ev) => {
      if (sock === this.socket) this.receive(ev.data);
    };
    const drop = () => {
      if (sock === this.socket) this.handleDrop();
    };
    sock.onclose = drop;
    sock.onerror = drop;
  }

  close(): void {
    this.shutDown = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.latentOut.reset();
    const sock = this.socket;
    this.socket = null;
    this.setConnection("closed");
    sock?.close();
  }

  // -- outgoing ------------------------------------------------------------

  /**
   * Move one latent slider.  No-ops until a status on the *current* socket
   * has confirmed the model's width — a descriptor held over from before a
   * reconnect may describe a model the server no longer runs, so the
   * session never emits a latent the live server might size differently.
   */
  setSlider(index: number, value: number): void {
    const d = this.descriptor;
    if (d === null || !this.echoed || this.connection !== "open") return;
    if (!Number.isInteger(index) || index < 0 || index >= d.bottleneck) return;
    const [lo, hi] = d.bounds[index];
    this.sliders[index] = Math.min(hi, Math.max(lo, value));
    this.latentOut.push(wire.setLatent(this.sliders));
  }

  setChroma(cls: number | null): void {
    if (this.socket === null || this.connection !== "open") return;
    if (cls !== null && (!Number.isInteger(cls) || cls < 0 || cls > 11)) return;
    this.chroma = cls;
    this.socket.send(wire.setChroma(cls));
  }

  setGain(value: number): void {
    if (this.socket === null || this.connection !== "open") return;
    const v = Math.max(0.0, value);
    this.gain = v;
    this.socket.send(wire.setGain(v));
  }

  // -- incoming ------------------------------------------------------------

  private receive(raw: string): void {
    const msg = wire.parseServerMessage(raw);
    if (msg === null) {
      console.warn("control: ignoring malformed server message", raw);
      return;
    }
    if (msg.type === "error") {
      console.warn("control: server rejected an update:", msg.message);
      this.revertToEcho();
      return;
    }
    this.adopt(msg);
  }

  private adopt(st: StatusMessage): void {
    this.echoed = true;
    if (!sameLayout(this.descriptor, st.model)) {
      // new model shape: queued drags refer to the old latent space
      this.latentOut.reset();
      this.descriptor = st.model;
      this.sliders = st.latent.slice();
      this.onDescriptor?.(st.model);
    } else if (!this.latentOut.busy) {
      this.sliders = st.latent.slice();
    }
    this.chroma = st.chroma;
    this.gain = st.gain;
    this.lastStatus = st;
    this.onStatus?.(st);
  }

  private revertToEcho(): void {
    const echo = this.lastStatus;
    if (echo === null) return;
    this.latentOut.reset();
    this.sliders = echo.latent.slice();
    this.chroma = echo.chroma;
    this.gain = echo.gain;
    this.onStatus?.(echo);
  }

  // -- lifecycle -----------------------------------------------------------

  private handleDrop(): void {
    this.socket = null;
    this.echoed = false;
    this.latentOut.reset();
    this.setConnection("closed");
    if (this.shutDown) return;
    const delay = this.retryMs * Math.min(2 ** this.retryCount, 16);
    this.retryCount += 1;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.connect();
    }, delay);
  }

  private setConnection(state: ConnectionState): void {
    if (state === this.connection) return;
    this.connection = state;
    this.onConnection?.(state);
  }
}
