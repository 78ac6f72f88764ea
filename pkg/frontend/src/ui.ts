/**
 * DOM construction and rendering for the control panel.
 *
 * Plain DOM, no framework — the panel is a handful of static files served
 * next to the socket.  `buildPanel` wires a session's callbacks into the
 * page; after that the DOM is a pure function of session state: one slider
 * per latent dimension, the pitch-class selector only when the model takes
 * a chroma skip, spectrum bars and health counters from each status echo.
 */

import type { StatusMessage, ModelDescriptor } from "./protocol.js";
import type { ConnectionState, ControlSession } from "./session.js";

const PITCH_CLASSES = [
  "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

export interface Panel {
  root: HTMLElement;
  banner: HTMLElement;
  sliderBox: HTMLElement;
  sliders: HTMLInputElement[];
  chromaBox: HTMLElement;
  chromaInputs: HTMLInputElement[];
  chromaNone: HTMLInputElement;
  gainInput: HTMLInputElement;
  spectrumBox: HTMLElement;
  bars: HTMLElement[];
  underrunEl: HTMLElement;
  clipsEl: HTMLElement;
  generationEl: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function buildPanel(root: HTMLElement, session: ControlSession): Panel {
  const doc = root.ownerDocument;
  root.textContent = "";

  const banner = el(doc, "div", "banner", "connecting…");
  const sliderBox = el(doc, "div", "sliders");
  const chromaBox = el(doc, "fieldset", "chroma");
  chromaBox.appendChild(el(doc, "legend", undefined, "pitch class"));
  chromaBox.hidden = true;

  const chromaInputs: HTMLInputElement[] = [];
  const addRadio = (label: string, value: string): HTMLInputElement => {
    const wrap = el(doc, "label", "chroma-option");
    const input = el(doc, "input");
    input.type = "radio";
    input.name = "chroma";
    input.value = value;
    wrap.appendChild(input);
    wrap.appendChild(doc.createTextNode(label));
    chromaBox.appendChild(wrap);
    return input;
  };
  const chromaNone = addRadio("off", "none");
  chromaNone.checked = true;
  for (let i = 0; i < PITCH_CLASSES.length; i++) {
    chromaInputs.push(addRadio(PITCH_CLASSES[i], String(i)));
  }

  const gainRow = el(doc, "label", "gain-row", "gain ");
  const gainInput = el(doc, "input");
  gainInput.type = "number";
  gainInput.min = "0";
  gainInput.step = "0.1";
  gainInput.value = "1";
  gainRow.appendChild(gainInput);

  const spectrumBox = el(doc, "div", "spectrum");
  const counters = el(doc, "div", "counters");
  const underrunEl = el(doc, "span", "counter", "underruns: 0");
  const clipsEl = el(doc, "span", "counter", "clipped: 0");
  const generationEl = el(doc, "span", "counter", "generation: 0");
  counters.append(underrunEl, clipsEl, generationEl);

  root.append(banner, sliderBox, chromaBox, gainRow, spectrumBox, counters);

  const panel: Panel = {
    root, banner, sliderBox, sliders: [], chromaBox, chromaInputs,
    chromaNone, gainInput, spectrumBox, bars: [], underrunEl, clipsEl,
    generationEl,
  };

  chromaBox.addEventListener("change", () => {
    const choice = chromaInputs.findIndex((r) => r.checked);
    session.setChroma(choice >= 0 ? choice : null);
  });
  gainInput.addEventListener("input", () => {
    const v = Number(gainInput.value);
    if (Number.isFinite(v)) session.setGain(v);
  });

  session.onDescriptor = (d) => buildSliders(panel, session, d);
  session.onStatus = () => renderStatus(panel, session);
  session.onConnection = (c) => renderConnection(panel, c);
  return panel;
}

/** (Re)build the latent sliders to match a model descriptor. */
export function buildSliders(
  panel: Panel,
  session: ControlSession,
  d: ModelDescriptor,
): void {
  const doc = panel.root.ownerDocument;
  panel.sliderBox.textContent = "";
  panel.sliders = [];
  for (let i = 0; i < d.bottleneck; i++) {
    const [lo, hi] = d.bounds[i];
    const row = el(doc, "label", "slider-row", `z${i} `);
    const input = el(doc, "input");
    input.type = "range";
    input.min = String(lo);
    input.max = String(hi);
    input.step = String((hi - lo) / 1000);
    input.value = String(session.sliders[i] ?? lo);
    input.addEventListener("input", () => {
      session.setSlider(i, Number(input.value));
    });
    row.appendChild(input);
    panel.sliderBox.appendChild(row);
    panel.sliders.push(input);
  }
  panel.chromaBox.hidden = !d.skip;
}

/**
 * Redraw everything a status echo affects.  Control widgets mirror the
 * session's state (which equals the echo unless a drag is in flight), the
 * spectrum and counters come straight from the last status.
 */
export function renderStatus(panel: Panel, session: ControlSession): void {
  const st = session.lastStatus;
  if (st === null) return;

  for (let i = 0; i < panel.sliders.length; i++) {
    panel.sliders[i].value = String(session.sliders[i]);
  }
  panel.chromaNone.checked = session.chroma === null;
  for (let i = 0; i < panel.chromaInputs.length; i++) {
    panel.chromaInputs[i].checked = session.chroma === i;
  }
  panel.gainInput.value = String(session.gain);

  drawSpectrum(panel, st.spectrum);
  panel.underrunEl.textContent = `underruns: ${st.underruns}`;
  panel.underrunEl.classList.toggle("warn", st.underruns > 0);
  panel.clipsEl.textContent = `clipped: ${st.clips}`;
  panel.clipsEl.classList.toggle("warn", st.clips > 0);
  panel.generationEl.textContent = `generation: ${st.generation}`;
}

function drawSpectrum(panel: Panel, spectrum: number[]): void {
  const doc = panel.root.ownerDocument;
  if (panel.bars.length !== spectrum.length) {
    panel.spectrumBox.textContent = "";
    panel.bars = spectrum.map(() => {
      const bar = el(doc, "div", "bar");
      panel.spectrumBox.appendChild(bar);
      return bar;
    });
  }
  const peak = Math.max(...spectrum, 1e-9);
  for (let i = 0; i < spectrum.length; i++) {
    const frac = Math.max(0, spectrum[i]) / peak;
    panel.bars[i].style.height = `${Math.round(frac * 100)}%`;
  }
}

export function renderConnection(panel: Panel, state: ConnectionState): void {
  panel.banner.hidden = state === "open";
  if (state === "connecting") {
    panel.banner.textContent = "connecting…";
  } else if (state === "closed") {
    panel.banner.textContent = "disconnected — retrying…";
  }
  panel.root.classList.toggle("offline", state !== "open");
}
