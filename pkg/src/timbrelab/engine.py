"""Real-time decoder-driven synthesis.

The audio path never touches a lock: control changes are published as
immutable whole-state snapshots, and the renderer reads whichever
snapshot is current when a block is due.  Offline rendering drives the
same per-block code path as the live stream, so a scripted automation
and a live session fed the same state sequence produce identical
samples.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import dsp
from .chroma import ChromaVector
from .errors import ConfigError, StreamStartupError
from .model import AutoencoderModel, decode

DEFAULT_PHASE_SEED = 0xC0FFEE
PHASE_BANK_FRAMES = 256


# ---------------------------------------------------------------------------
# Control state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlState:
    """One immutable snapshot of the performer's controls.

    ``generation`` increases on every published change, which lets the
    render side (and tests) verify it never sees a half-applied update.
    """

    latent: tuple
    chroma_class: Optional[int] = None
    gain: float = 1.0
    generation: int = 0

    def __post_init__(self):
        object.__setattr__(self, "latent", tuple(float(v) for v in self.latent))
        for v in self.latent:
            if not np.isfinite(v):
                raise ValueError("latent values must be finite")
        if self.chroma_class is not None and not 0 <= self.chroma_class <= 11:
            raise ValueError(f"chroma_class must be 0..11 or None, got {self.chroma_class}")
        if not (np.isfinite(self.gain) and self.gain >= 0):
            raise ValueError(f"gain must be finite and >= 0, got {self.gain}")

    @property
    def chroma_vector(self) -> ChromaVector:
        if self.chroma_class is None:
            return ChromaVector.silent()
        return ChromaVector.from_class(self.chroma_class)


class ControlBus:
    """Single-producer handoff of ControlState snapshots.

    Writers serialize on a lock; the render thread only ever reads the
    current reference, which CPython swaps atomically.
    """

    def __init__(self, initial: ControlState):
        self._lock = threading.Lock()
        self._state = initial

    def snapshot(self) -> ControlState:
        return self._state  # atomic reference read; no lock on the audio path

    def publish(self, **changes) -> ControlState:
        with self._lock:
            state = replace(self._state, generation=self._state.generation + 1,
                            **changes)
            self._state = state
        return state


# ---------------------------------------------------------------------------
# Renderer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StreamConfig:
    sample_rate: int = dsp.SAMPLE_RATE
    fft_size: int = dsp.FFT_SIZE
    hop: int = dsp.HOP
    phase_seed: int = DEFAULT_PHASE_SEED
    phase_bank_frames: int = PHASE_BANK_FRAMES
    smooth_ms: float = 0.0  # 0 disables latent slewing; changes land whole

    def __post_init__(self):
        if self.hop < 1 or self.fft_size % self.hop != 0:
            raise ConfigError(
                f"hop ({self.hop}) must divide fft_size ({self.fft_size})"
            )
        if self.fft_size // self.hop < 4:
            raise ConfigError("overlap below 75% breaks constant overlap-add")
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.phase_bank_frames < 1:
            raise ConfigError("phase_bank_frames must be >= 1")
        if self.smooth_ms < 0:
            raise ConfigError("smooth_ms must be >= 0")

    @property
    def deadline_seconds(self) -> float:
        """Per-block render budget: one hop of audio."""
        return self.hop / self.sample_rate

    @property
    def ola_gain(self) -> float:
        # sum of squared periodic-Hann shifts; at >= 75% overlap both
        # cosine terms cancel, leaving 3/8 per overlapping frame.
        return 0.375 * (self.fft_size // self.hop)


class StreamRenderer:
    """Turns ControlState snapshots into hop-sized audio blocks.

    Each block is a pure function of (model, state, phase bank, frame
    index, retained overlap tail); all buffers are preallocated so the
    steady-state path does no unbounded work.
    """

    def __init__(self, model: AutoencoderModel, config: StreamConfig = StreamConfig()):
        self.model = model
        self.config = config
        self.bank = dsp.noise_phase_bank(config.phase_bank_frames, config.phase_seed,
                                         config.fft_size, config.hop)
        self._window = dsp.hann_window(config.fft_size)
        self._tail = np.zeros(config.fft_size - config.hop)
        self.frame_index = 0
        self.clipped_samples = 0
        self.last_magnitudes = np.zeros(config.fft_size // 2 + 1, dtype=np.float32)
        self._slew_latent: Optional[np.ndarray] = None

    def reset(self) -> None:
        self._tail[:] = 0.0
        self.frame_index = 0
        self.clipped_samples = 0
        self.last_magnitudes[:] = 0.0
        self._slew_latent = None

    def _effective_latent(self, state: ControlState) -> np.ndarray:
        target = np.asarray(state.latent, dtype=np.float64)
        if self.config.smooth_ms <= 0.0:
            return target
        if self._slew_latent is None or len(self._slew_latent) != len(target):
            self._slew_latent = target.copy()
            return target
        step = min(1.0, 1000.0 * self.config.deadline_seconds / self.config.smooth_ms)
        self._slew_latent += step * (target - self._slew_latent)
        return self._slew_latent

    def render_frame(self, state: ControlState) -> np.ndarray:
        """One hop of output samples for the given control snapshot."""
        cfg = self.config
        mags = decode(self.model, self._effective_latent(state), state.chroma_vector)
        mags = mags * state.gain
        phases = self.bank.frame(self.frame_index)
        spectrum = dsp.mirror_spectrum(mags * np.exp(1j * phases), cfg.fft_size)
        frame = np.fft.ifft(spectrum).real * self._window

        block = (self._tail[: cfg.hop] + frame[: cfg.hop]) / cfg.ola_gain
        self._tail[: -cfg.hop] = self._tail[cfg.hop :]
        self._tail[-cfg.hop :] = 0.0
        self._tail += frame[cfg.hop :]

        over = np.abs(block) > 1.0
        if over.any():
            self.clipped_samples += int(over.sum())
            np.clip(block, -1.0, 1.0, out=block)
        self.last_magnitudes = mags
        self.frame_index += 1
        return block


# ---------------------------------------------------------------------------
# Sinks
# ---------------------------------------------------------------------------


class NullSink:
    """Discards audio; used for pacing tests and headless operation."""

    def __init__(self):
        self.blocks_written = 0

    def write(self, block: np.ndarray) -> None:
        self.blocks_written += 1

    def close(self) -> None:
        pass


class WavSink:
    """Buffers blocks in memory and writes 16-bit PCM on close."""

    def __init__(self, path, sample_rate: int = dsp.SAMPLE_RATE):
        self.path = path
        self.sample_rate = sample_rate
        self._blocks: list = []

    def write(self, block: np.ndarray) -> None:
        self._blocks.append(np.asarray(block, dtype=np.float64))

    @property
    def samples(self) -> np.ndarray:
        if not self._blocks:
            return np.zeros(0)
        return np.concatenate(self._blocks)

    def close(self) -> None:
        dsp.write_wav(self.path, dsp.AudioBuffer(self.samples, self.sample_rate))


def open_sink(kind: str, path=None, sample_rate: int = dsp.SAMPLE_RATE,
              device: Optional[str] = None):
    """Build an output sink: ``null``, ``wav`` (needs ``path``), or ``device``.

    Device output needs a soundcard backend; without one the stream
    refuses to start rather than silently dropping audio.
    """
    if kind == "null":
        return NullSink()
    if kind == "wav":
        if path is None:
            raise ValueError("wav sink requires a path")
        return WavSink(path, sample_rate)
    if kind == "device":
        try:
            import sounddevice  # noqa: F401
        except ImportError as exc:
            raise StreamStartupError(
                "audio device output requires the sounddevice backend "
                f"(device={device!r}); install it or use --device null"
            ) from exc
        return _DeviceSink(sample_rate, device)
    raise ValueError(f"unknown sink kind {kind!r}")


class _DeviceSink:
    """Blocking-write soundcard output (only built when the backend imports)."""

    def __init__(self, sample_rate: int, device: Optional[str]):
        import sounddevice

        try:
            self._stream = sounddevice.OutputStream(
                samplerate=sample_rate, channels=1, dtype="float32", device=device
            )
            self._stream.start()
        except Exception as exc:  # backend raises its own hierarchy
            raise StreamStartupError(f"could not open audio device: {exc}") from exc

    def write(self, block: np.ndarray) -> None:
        self._stream.write(np.asarray(block, dtype=np.float32))

    def close(self) -> None:
        self._stream.stop()
        self._stream.close()


# ---------------------------------------------------------------------------
# Streaming loop
# ---------------------------------------------------------------------------


@dataclass
class StreamStats:
    frames_rendered: int = 0
    underruns: int = 0

    def as_dict(self) -> dict:
        return {"frames_rendered": self.frames_rendered, "underruns": self.underruns}


def run_stream(renderer: StreamRenderer, bus: ControlBus, sink,
               num_blocks: Optional[int] = None,
               stop: Optional[threading.Event] = None,
               pace: bool = True,
               stats: Optional[StreamStats] = None) -> StreamStats:
    """Paced render loop; runs ``num_blocks`` blocks or until ``stop`` is set.

    Every block consumes the latest control snapshot.  A block that
    misses its deadline is dropped in favor of replaying the previous
    one, and the underrun counter goes up; the control channel is never
    waited on.
    """
    stats = stats if stats is not None else StreamStats()
    deadline = renderer.config.deadline_seconds
    previous: Optional[np.ndarray] = None
    start = time.perf_counter()
    k = 0
    while num_blocks is None or k < num_blocks:
        if stop is not None and stop.is_set():
            break
        block = renderer.render_frame(bus.snapshot())
        late = time.perf_counter() - start > (k + 1) * deadline
        if late and previous is not None:
            sink.write(previous)
            stats.underruns += 1
        else:
            sink.write(block)
            previous = block
        stats.frames_rendered += 1
        k += 1
        if pace:
            remaining = start + (k * deadline) - time.perf_counter()
            if remaining > 0:
                time.sleep(remaining)
    return stats


# ---------------------------------------------------------------------------
# Offline rendering
# ---------------------------------------------------------------------------


def load_automation(path) -> list:
    """Timed control events from a JSON file.

    The file holds a list of ``{"t": seconds, ...}`` objects where the
    remaining keys are any of ``latent``, ``chroma``, ``gain``.
    Timestamps must be sorted; omitted fields carry forward.
    """
    with open(path) as fh:
        events = json.load(fh)
    return parse_automation(events)


def parse_automation(events) -> list:
    if not isinstance(events, list):
        raise ValueError("automation must be a list of events")
    out = []
    last_t = -np.inf
    for i, ev in enumerate(events):
        if not isinstance(ev, dict) or "t" not in ev:
            raise ValueError(f"automation event {i} lacks a \"t\" timestamp")
        t = float(ev["t"])
        if t < last_t:
            raise ValueError(f"automation timestamps must be sorted (event {i})")
        last_t = t
        changes = {}
        if "latent" in ev:
            changes["latent"] = tuple(float(v) for v in ev["latent"])
        if "chroma" in ev:
            changes["chroma_class"] = None if ev["chroma"] is None else int(ev["chroma"])
        if "gain" in ev:
            changes["gain"] = float(ev["gain"])
        out.append((t, changes))
    return out


def automation_states(initial: ControlState, automation: Sequence,
                      num_blocks: int, block_seconds: float) -> list:
    """Per-block ControlState sequence with events applied at block starts.

    An event lands on the first block whose start time is >= its
    timestamp; multiple events before one block all apply, last wins.
    """
    states = []
    state = initial
    pos = 0
    for k in range(num_blocks):
        t = k * block_seconds
        while pos < len(automation) and automation[pos][0] <= t:
            state = replace(state, generation=state.generation + 1,
                            **automation[pos][1])
            pos += 1
        states.append(state)
    return states


def render_blocks(renderer: StreamRenderer, states: Sequence[ControlState]) -> np.ndarray:
    """Concatenated render_frame outputs for an explicit state sequence."""
    return np.concatenate([renderer.render_frame(s) for s in states])


def render_to_wav(model: AutoencoderModel, automation, duration: float, path,
                  config: StreamConfig = StreamConfig(),
                  initial: Optional[ControlState] = None) -> np.ndarray:
    """Deterministic offline render to a 16-bit PCM file.

    Renders ceil(duration * rate / hop) blocks through the same
    per-block math as the live stream, then truncates the result to
    exactly round(duration * rate) samples, so a 1 s request yields a
    44100-sample file.  Returns the written samples.
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    total = int(round(duration * config.sample_rate))
    num_blocks = -(-total // config.hop)
    renderer = StreamRenderer(model, config)
    if initial is None:
        initial = initial_state(model)
    states = automation_states(initial, automation, num_blocks,
                               config.deadline_seconds)
    samples = render_blocks(renderer, states)[:total]
    dsp.write_wav(path, dsp.AudioBuffer(samples, config.sample_rate))
    return samples


# ---------------------------------------------------------------------------
# Engine facade
# ---------------------------------------------------------------------------


def latent_bounds(model: AutoencoderModel) -> list:
    """Per-dimension [lo, hi] control range for the latent sliders.

    Sigmoid bottlenecks are bounded by construction; leaky-ReLU models
    fall back to the training-set bounding box recorded at train time,
    or [-1, 1] when none was recorded.
    """
    d = model.bottleneck_width
    if model.config.bottleneck_activation == "sigmoid":
        return [[0.0, 1.0]] * d
    bbox = model.metadata.get("latent_bbox")
    if bbox is not None and len(bbox) == d:
        return [[float(lo), float(hi)] for lo, hi in bbox]
    return [[-1.0, 1.0]] * d


def initial_state(model: AutoencoderModel) -> ControlState:
    """Center-of-range latent, no chroma conditioning, unity gain."""
    center = tuple((lo + hi) / 2.0 for lo, hi in latent_bounds(model))
    return ControlState(latent=center, chroma_class=None, gain=1.0, generation=0)


class SynthEngine:
    """Owns the renderer, the control bus, and the stream thread."""

    def __init__(self, model: AutoencoderModel, config: StreamConfig = StreamConfig()):
        self.model = model
        self.config = config
        self.renderer = StreamRenderer(model, config)
        self.bus = ControlBus(initial_state(model))
        self.stats = StreamStats()
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()

    # -- control -----------------------------------------------------------

    def set_latent(self, values: Sequence[float]) -> ControlState:
        values = tuple(float(v) for v in values)
        d = self.model.bottleneck_width
        if len(values) != d:
            raise ValueError(f"expected {d} latent values, got {len(values)}")
        return self.bus.publish(latent=values)

    def set_chroma(self, chroma_class: Optional[int]) -> ControlState:
        if chroma_class is not None:
            chroma_class = int(chroma_class)
        return self.bus.publish(chroma_class=chroma_class)

    def set_gain(self, value: float) -> ControlState:
        return self.bus.publish(gain=float(value))

    # -- status ------------------------------------------------------------

    def display_spectrum(self, bins: int = 64) -> list:
        """Down-sampled magnitude spectrum of the last rendered block."""
        mags = self.renderer.last_magnitudes
        usable = (len(mags) - 1) // bins * bins  # drop the Nyquist remainder
        pooled = np.asarray(mags[:usable], dtype=np.float64).reshape(bins, -1).mean(axis=1)
        return [float(v) for v in pooled]

    def status(self) -> dict:
        state = self.bus.snapshot()
        return {
            "latent": list(state.latent),
            "chroma": state.chroma_class,
            "gain": state.gain,
            "generation": state.generation,
            "underruns": self.stats.underruns,
            "clips": self.renderer.clipped_samples,
            "spectrum": self.display_spectrum(),
            "model": {
                "bottleneck": self.model.bottleneck_width,
                "skip": self.model.config.use_chroma_skip,
                "bounds": latent_bounds(self.model),
                "seed": self.config.phase_seed,
            },
        }

    # -- lifecycle ---------------------------------------------------------

    def start(self, sink) -> None:
        if self._thread is not None:
            raise StreamStartupError("stream already running")
        self._stop.clear()
        self._thread = threading.Thread(
            target=run_stream,
            args=(self.renderer, self.bus, sink),
            kwargs={"stop": self._stop, "stats": self.stats},
            daemon=True,
            name="timbrelab-render",
        )
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join(timeout=5.0)
        self._thread = None

    @property
    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()
