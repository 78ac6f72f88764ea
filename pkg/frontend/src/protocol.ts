/**
 * Wire types for the synth control socket.
 *
 * The server speaks one JSON object per text frame.  Everything it sends is
 * either a full status echo or an error; everything we send is one of four
 * small command objects.  Extra keys on a status are tolerated (the server
 * may grow fields), but the core shape is validated strictly — a document
 * that fails the guards is treated as noise, never rendered.
 */

export interface ModelDescriptor {
  /** latent dimension; the panel shows one slider per entry */
  bottleneck: number;
  /** chroma-skip models expose the pitch-class selector */
  skip: boolean;
  /** per-dimension [lo, hi] slider range */
  bounds: [number, number][];
  seed: number;
}

export interface StatusMessage {
  type: "status";
  latent: number[];
  chroma: number | null;
  gain: number;
  generation: number;
  underruns: number;
  clips: number;
  spectrum: number[];
  model: ModelDescriptor;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = StatusMessage | ErrorMessage;

const isNumber = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

const isNumberArray = (v: unknown): v is number[] =>
  Array.isArray(v) && v.every(isNumber);

function isBounds(v: unknown, n: number): v is [number, number][] {
  if (!Array.isArray(v) || v.length !== n) return false;
  return v.every(
    (pair) =>
      Array.isArray(pair) &&
      pair.length === 2 &&
      isNumber(pair[0]) &&
      isNumber(pair[1]) &&
      pair[0] <= pair[1],
  );
}

export function isModelDescriptor(v: unknown): v is ModelDescriptor {
  if (typeof v !== "object" || v === null) return false;
  const m = v as Record<string, unknown>;
  return (
    isNumber(m.bottleneck) &&
    Number.isInteger(m.bottleneck) &&
    m.bottleneck >= 1 &&
    typeof m.skip === "boolean" &&
    isBounds(m.bounds, m.bottleneck) &&
    isNumber(m.seed)
  );
}

export function isStatusMessage(v: unknown): v is StatusMessage {
  if (typeof v !== "object" || v === null) return false;
  const m = v as Record<string, unknown>;
  if (m.type !== "status" || !isModelDescriptor(m.model)) return false;
  const chromaOk =
    m.chroma === null ||
    (isNumber(m.chroma) && Number.isInteger(m.chroma) && m.chroma >= 0 && m.chroma < 12);
  return (
    isNumberArray(m.latent) &&
    m.latent.length === (m.model as ModelDescriptor).bottleneck &&
    chromaOk &&
    isNumber(m.gain) &&
    isNumber(m.generation) &&
    isNumber(m.underruns) &&
    isNumber(m.clips) &&
    isNumberArray(m.spectrum)
  );
}

export function isErrorMessage(v: unknown): v is ErrorMessage {
  if (typeof v !== "object" || v === null) return false;
  const m = v as Record<string, unknown>;
  return m.type === "error" && typeof m.message === "string";
}

/** Parse one server frame; null means "not something we recognise". */
export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (isStatusMessage(doc)) return doc;
  if (isErrorMessage(doc)) return doc;
  return null;
}

// -- outgoing ---------------------------------------------------------------

export const setLatent = (values: number[]): string =>
  JSON.stringify({ type: "set_latent", values });

export const setChroma = (cls: number | null): string =>
  JSON.stringify({ type: "set_chroma", class: cls });

export const setGain = (value: number): string =>
  JSON.stringify({ type: "set_gain", value });

export const getStatus = (): string => JSON.stringify({ type: "get_status" });
