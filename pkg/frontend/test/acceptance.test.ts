// @vitest-environment happy-dom
//
// One test per acceptance criterion, each printing a PASS/FAIL line with
// the measured numbers.  These drive the full client (session + panel)
// against scripted fake sockets under a deterministic fake clock.

import { afterEach, beforeEach, expect, test, vi } from "vitest";

import { ControlSession } from "../src/session.js";
import { buildPanel } from "../src/ui.js";
import {
  FakeSocket,
  descriptor,
  mulberry32,
  socketRecorder,
  statusDoc,
} from "./helpers.js";

function report(label: string, ok: boolean, detail: string): void {
  const verdict = ok ? "PASS" : "FAIL";
  console.log(`[acceptance] ${label}: ${verdict} — ${detail}`);
  expect(ok).toBe(true);
}

beforeEach(() => {
  vi.useFakeTimers({ toFake: ["setTimeout", "clearTimeout", "Date"] });
});
afterEach(() => {
  vi.useRealTimers();
});

test("drag storm stays within the 30 msg/s budget and lands the last value", () => {
  const { sockets, makeSocket } = socketRecorder();
  const session = new ControlSession({ url: "ws://test/ws", makeSocket });
  session.connect();
  sockets[0].open();
  sockets[0].deliver(statusDoc(descriptor({ bottleneck: 2 })));
  sockets[0].sent.length = 0;

  // 100 slider events per second for 5 seconds
  let last = 0;
  for (let step = 0; step < 500; step++) {
    last = (Math.sin(step / 25) + 1) / 2;
    session.setSlider(0, last);
    vi.advanceTimersByTime(10);
  }
  vi.advanceTimersByTime(200); // let the trailing send flush

  const frames = sockets[0].sent.filter(
    (f) => JSON.parse(f.data).type === "set_latent",
  );
  const stamps = frames.map((f) => f.at);
  let worst = 0;
  for (const start of stamps) {
    const inWindow = stamps.filter((t) => t >= start && t < start + 1000);
    worst = Math.max(worst, inWindow.length);
  }
  const final = JSON.parse(frames[frames.length - 1].data).values as number[];
  const ok =
    worst <= 30 &&
    frames.length >= 100 &&
    frames.length <= 151 &&
    final[0] === last;
  report(
    "ui-drag-throttle",
    ok,
    `500 input events -> ${frames.length} sends, worst 1 s window ${worst} msgs, ` +
      `final value ${final[0] === last ? "delivered" : "LOST"}`,
  );
});

test(
  "no wrong-width latent across 1000 randomized descriptor sessions",
  { timeout: 60_000 },
  () => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    let latentCount = 0;
    let bad = 0;

    for (let i = 0; i < 1000; i++) {
      const rand = mulberry32(0x5ec0 + i);
      const randInt = (lo: number, hi: number) =>
        lo + Math.floor(rand() * (hi - lo + 1));
      const randBounds = (n: number) =>
        Array.from({ length: n }, () => {
          const lo = rand() * 2 - 1;
          return [lo, lo + rand() * 2] as [number, number];
        });

      // -1 means "no echo confirmed on the live socket: no latent allowed"
      let expectedWidth = -1;
      const sockets: FakeSocket[] = [];
      const session = new ControlSession({
        url: "ws://test/ws",
        retryMs: 50,
        makeSocket: (url) => {
          const sock = new FakeSocket(url);
          sock.onSend = (data) => {
            const msg = JSON.parse(data);
            if (msg.type !== "set_latent") return;
            latentCount++;
            if (!Array.isArray(msg.values) || msg.values.length !== expectedWidth) {
              bad++;
            }
          };
          sockets.push(sock);
          return sock;
        },
      });
      const current = () => sockets[sockets.length - 1];

      let model = descriptor({
        bottleneck: randInt(1, 8),
        skip: rand() < 0.5,
      });
      model = { ...model, bounds: randBounds(model.bottleneck) };
      const deliverEcho = (newWidth?: number) => {
        if (newWidth !== undefined) {
          model = descriptor({
            bottleneck: newWidth,
            skip: rand() < 0.5,
            bounds: randBounds(newWidth),
          });
        }
        expectedWidth = model.bottleneck;
        const latent = model.bounds.map(([lo, hi]) => lo + rand() * (hi - lo));
        current().deliver(statusDoc(model, { latent }));
      };

      session.connect();
      current().open();
      if (rand() < 0.85) deliverEcho(); // sometimes drags race the first echo

      for (let op = 0; op < 25; op++) {
        const r = rand();
        if (r < 0.45) {
          session.setSlider(
            randInt(-1, model.bottleneck + 1),
            rand() * 4 - 2,
          );
        } else if (r < 0.6) {
          vi.advanceTimersByTime(randInt(0, 40));
        } else if (r < 0.72) {
          deliverEcho(rand() < 0.3 ? randInt(1, 8) : undefined);
        } else if (r < 0.8) {
          session.setChroma(randInt(-1, 12));
        } else if (r < 0.85) {
          session.setGain(rand() * 3);
        } else if (r < 0.93) {
          const before = sockets.length;
          current().drop();
          expectedWidth = -1;
          vi.advanceTimersByTime(60);
          if (sockets.length > before) {
            current().open();
            if (rand() < 0.7) {
              deliverEcho(rand() < 0.5 ? randInt(1, 8) : undefined);
            }
          }
        } else {
          current().deliver({ type: "error", message: "backpressure" });
        }
      }
      vi.advanceTimersByTime(200); // flush any trailing send
      session.close();
    }

    warn.mockRestore();
    const ok = bad === 0 && latentCount > 2000;
    report(
      "ui-latent-width",
      ok,
      `${latentCount} latent frames across 1000 sessions, ${bad} wrong-width`,
    );
  },
);

test("first render after a reconnect equals the server echo", () => {
  document.body.innerHTML = '<div id="panel"></div>';
  const root = document.getElementById("panel")!;
  const { sockets, makeSocket } = socketRecorder();
  const session = new ControlSession({
    url: "ws://test/ws",
    makeSocket,
    retryMs: 100,
  });
  const panel = buildPanel(root, session);
  session.connect();
  sockets[0].open();

  const d = descriptor({ bottleneck: 2, skip: true });
  sockets[0].deliver(statusDoc(d, { latent: [0.5, 0.5] }));
  session.setSlider(0, 0.9);
  session.setSlider(0, 0.92); // leave the panel dirty mid-drag
  sockets[0].drop();
  const sawBanner = !panel.banner.hidden;

  vi.advanceTimersByTime(100);
  sockets[1].open();
  const echo = statusDoc(d, {
    latent: [0.21, 0.84],
    chroma: 7,
    gain: 2.5,
    underruns: 3,
    generation: 9,
  });
  sockets[1].deliver(echo); // first (and only) post-reconnect status

  const sliderVals = panel.sliders.map((s) => Number(s.value));
  const checked = panel.chromaInputs.findIndex((r) => r.checked);
  const rendered = {
    latent: sliderVals,
    chroma: checked >= 0 ? checked : null,
    gain: Number(panel.gainInput.value),
  };
  const ok =
    sawBanner &&
    panel.banner.hidden &&
    rendered.latent[0] === 0.21 &&
    rendered.latent[1] === 0.84 &&
    rendered.chroma === 7 &&
    rendered.gain === 2.5 &&
    panel.underrunEl.textContent === "underruns: 3" &&
    panel.underrunEl.classList.contains("warn") &&
    session.lastStatus?.generation === 9;
  report(
    "ui-reconnect-convergence",
    ok,
    `first post-reconnect render ${JSON.stringify(rendered)} matches the echo`,
  );
});
