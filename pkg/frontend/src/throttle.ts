/**
 * Trailing-edge rate limiter for high-frequency control updates.
 *
 * The first message in a quiet period goes out immediately; while the stream
 * is hot, newer messages overwrite the pending one and a timer flushes the
 * latest no sooner than `minIntervalMs` after the previous send.  The final
 * value of a drag always lands — only the intermediate ones are dropped.
 *
 * The 34 ms default keeps a steady drag at ~29 msg/s: a hair under the
 * 30 msg/s budget even when timers fire on whole-millisecond boundaries.
 */
export class UpdateThrottle {
  private lastSend = -Infinity;
  private pending: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: (msg: string) => void,
    private readonly minIntervalMs: number = 34,
    private readonly now: () => number = Date.now,
  ) {}

  push(msg: string): void {
    if (this.timer === null) {
      const wait = this.lastSend + this.minIntervalMs - this.now();
      if (wait <= 0) {
        this.lastSend = this.now();
        this.send(msg);
        return;
      }
      this.timer = setTimeout(() => this.flush(), wait);
    }
    this.pending = msg;
  }

  /** True while a trailing send is still queued (a drag is in flight). */
  get busy(): boolean {
    return this.timer !== null;
  }

  /** Drop any queued message, e.g. when the thing being dragged went away. */
  reset(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.pending = null;
    this.lastSend = -Infinity;
  }

  private flush(): void {
    this.timer = null;
    if (this.pending === null) return;
    const msg = this.pending;
    this.pending = null;
    this.lastSend = this.now();
    this.send(msg);
  }
}
