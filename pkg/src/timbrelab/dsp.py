"""STFT analysis, frame normalization, and noise-phase overlap-add resynthesis.

Analysis settings are fixed for v1 corpora: 4096-point FFT, hop 1024
(75% overlap), periodic Hann window, 2049 non-redundant magnitude bins.
All functions here are pure; audio is float64 internally and 16-bit PCM
on disk.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCorpusError, InvalidFrameError

FFT_SIZE = 4096
HOP = 1024
NUM_BINS = FFT_SIZE // 2 + 1  # 2049
SAMPLE_RATE = 44100

# Steady-state value of the squared-Hann overlap sum at 75% overlap.
# For the periodic Hann the cross terms cancel exactly, leaving 3/2.
OLA_GAIN = 1.5

_ENVELOPE_EPS = 1e-12


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass
class AudioBuffer:
    """Mono audio samples with their sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"expected mono audio, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("audio contains NaN or Inf samples")

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class SpectralFrame:
    """One normalized 2049-bin magnitude frame plus its pre-normalization peak.

    Invariants: all magnitudes lie in [0, 1]; if ``peak`` is positive the
    maximum magnitude is exactly 1; a silent frame has ``peak == 0`` and
    all-zero magnitudes.
    """

    magnitudes: np.ndarray
    peak: float

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes)
        validate_frame(self.magnitudes)
        if self.peak < 0:
            raise InvalidFrameError(f"peak must be >= 0, got {self.peak}")
        top = float(self.magnitudes.max()) if self.magnitudes.size else 0.0
        if self.peak > 0 and top != 1.0:
            raise InvalidFrameError(f"normalized frame must peak at 1.0, got {top}")
        if top > 1.0:
            raise InvalidFrameError(f"magnitudes exceed 1.0 (max {top})")


@dataclass
class PhaseBank:
    """Per-frame phase angles stripped from the STFT of seeded white noise."""

    phases: np.ndarray  # (frames, 2049), angles in (-pi, pi]
    seed: int

    def __len__(self):
        return self.phases.shape[0]

    def frame(self, index: int) -> np.ndarray:
        """Phases for frame ``index``, cycling past the end of the bank."""
        return self.phases[index % len(self)]


# ---------------------------------------------------------------------------
# Windowing and framing
# ---------------------------------------------------------------------------


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window of length ``n``: w[k] = 0.5*(1 - cos(2*pi*k/n)).

    The periodic form satisfies constant overlap-add at 75% overlap,
    which the resynthesis path relies on.
    """
    if n < 2:
        raise ValueError(f"window length must be >= 2, got {n}")
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / n))


def frame_count(num_samples: int, fft_size: int = FFT_SIZE, hop: int = HOP) -> int:
    """Number of complete analysis frames in a signal of ``num_samples``."""
    if num_samples < fft_size:
        return 0
    return (num_samples - fft_size) // hop + 1


def stft(audio: AudioBuffer, fft_size: int = FFT_SIZE, hop: int = HOP):
    """Magnitude/phase STFT of ``audio``.

    Frames start at sample 0 with no centering or zero padding; each is
    Hann-windowed before the FFT.  Returns ``(magnitudes, phases)`` with
    shape ``(frames, fft_size // 2 + 1)`` each.

    Raises :class:`EmptyCorpusError` when the audio is shorter than one
    analysis window.
    """
    x = audio.samples
    n_frames = frame_count(len(x), fft_size, hop)
    if n_frames == 0:
        raise EmptyCorpusError(
            f"audio has {len(x)} samples; need at least {fft_size} for one frame"
        )
    window = hann_window(fft_size)
    offsets = np.arange(n_frames) * hop
    # (frames, fft_size) view of the windowed segments
    idx = offsets[:, None] + np.arange(fft_size)[None, :]
    segments = x[idx] * window
    spectra = np.fft.rfft(segments, axis=1)
    return np.abs(spectra), _canonical_angle(spectra)


def _canonical_angle(z: np.ndarray) -> np.ndarray:
    """Angles in (-pi, pi]; atan2's -pi edge is folded to +pi."""
    a = np.angle(z)
    return np.where(a <= -np.pi, np.pi, a)


# ---------------------------------------------------------------------------
# Frame normalization
# ---------------------------------------------------------------------------


def validate_frame(magnitudes: np.ndarray, num_bins: int = NUM_BINS) -> None:
    """Raise :class:`InvalidFrameError` unless ``magnitudes`` is a legal frame."""
    if magnitudes.ndim != 1 or magnitudes.shape[0] != num_bins:
        raise InvalidFrameError(
            f"frame must have {num_bins} bins, got shape {magnitudes.shape}"
        )
    if not np.all(np.isfinite(magnitudes)):
        raise InvalidFrameError("frame contains NaN or Inf")
    if np.any(magnitudes < 0):
        raise InvalidFrameError("frame contains negative magnitudes")


def normalize_frame(magnitudes: np.ndarray) -> SpectralFrame:
    """Scale a raw magnitude frame to [0, 1], remembering its peak.

    Silent frames (all zeros) are kept as all-zeros with ``peak == 0``
    rather than dropped.
    """
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    validate_frame(magnitudes)
    peak = float(magnitudes.max())
    if peak > 0:
        # IEEE division guarantees max/peak == 1.0 exactly
        return SpectralFrame(magnitudes / peak, peak)
    return SpectralFrame(np.zeros_like(magnitudes), 0.0)


def normalize_frames(magnitudes: np.ndarray):
    """Vectorized :func:`normalize_frame` over a ``(frames, bins)`` matrix.

    Returns ``(normalized, peaks)``.
    """
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    if not np.all(np.isfinite(magnitudes)):
        raise InvalidFrameError("frames contain NaN or Inf")
    if np.any(magnitudes < 0):
        raise InvalidFrameError("frames contain negative magnitudes")
    peaks = magnitudes.max(axis=1)
    scale = np.where(peaks > 0, peaks, 1.0)
    return magnitudes / scale[:, None], peaks


# ---------------------------------------------------------------------------
# Seeded white noise and the phase bank
# ---------------------------------------------------------------------------

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


def white_noise(num_samples: int, seed: int) -> np.ndarray:
    """Uniform noise on [-1, 1) from a counter-mode splitmix64 generator.

    A fixed 64-bit mix (xorshift-multiply family) keyed on
    ``seed + counter`` makes the sequence identical on every platform,
    which keeps phase banks reproducible across machines.
    """
    ctr = np.arange(1, num_samples + 1, dtype=np.uint64)
    z = (_U64(seed & 0xFFFFFFFFFFFFFFFF) + ctr * _GOLDEN).astype(np.uint64)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    z = z ^ (z >> _U64(31))
    u = (z >> _U64(11)).astype(np.float64) * (2.0 ** -53)  # [0, 1)
    return 2.0 * u - 1.0


def noise_phase_bank(
    num_frames: int,
    seed: int,
    fft_size: int = FFT_SIZE,
    hop: int = HOP,
) -> PhaseBank:
    """Phase component of the STFT of seeded white noise, one row per frame."""
    if num_frames < 1:
        raise ValueError(f"num_frames must be >= 1, got {num_frames}")
    length = fft_size + (num_frames - 1) * hop
    noise = AudioBuffer(white_noise(length, seed))
    _, phases = stft(noise, fft_size, hop)
    return PhaseBank(phases, seed)


# ---------------------------------------------------------------------------
# Inverse STFT / overlap-add
# ---------------------------------------------------------------------------


def mirror_spectrum(half: np.ndarray, fft_size: int = FFT_SIZE) -> np.ndarray:
    """Extend a half spectrum (fft_size//2 + 1 bins) to ``fft_size`` bins
    with conjugate symmetry, so its inverse FFT is purely real."""
    if half.shape[-1] != fft_size // 2 + 1:
        raise InvalidFrameError(
            f"expected {fft_size // 2 + 1} bins, got {half.shape[-1]}"
        )
    return np.concatenate([half, np.conj(half[..., -2:0:-1])], axis=-1)


def istft(magnitudes: np.ndarray, phases: np.ndarray,
          fft_size: int = FFT_SIZE, hop: int = HOP,
          sample_rate: int = SAMPLE_RATE) -> AudioBuffer:
    """Overlap-add resynthesis from magnitude and phase frames.

    Each frame's complex spectrum is inverted (conjugate-symmetric
    extension, inverse FFT), Hann-windowed, and summed at hop offsets;
    the result is divided by the summed squared-window envelope with a
    small floor so the taper at the edges never divides by zero.
    With the true analysis phases this reconstructs the interior of the
    original signal.

    Output length is ``fft_size + (frames - 1) * hop``.
    """
    magnitudes = np.atleast_2d(np.asarray(magnitudes, dtype=np.float64))
    phases = np.atleast_2d(np.asarray(phases, dtype=np.float64))
    if magnitudes.shape[1] != fft_size // 2 + 1:
        raise InvalidFrameError(
            f"frames must have {fft_size // 2 + 1} bins, got {magnitudes.shape[1]}"
        )
    if magnitudes.shape != phases.shape:
        raise InvalidFrameError(
            f"magnitude/phase shape mismatch: {magnitudes.shape} vs {phases.shape}"
        )
    n_frames = magnitudes.shape[0]
    window = hann_window(fft_size)
    spectra = magnitudes * np.exp(1j * phases)
    segments = np.fft.irfft(spectra, n=fft_size, axis=1) * window

    out_len = fft_size + (n_frames - 1) * hop
    out = np.zeros(out_len)
    envelope = np.zeros(out_len)
    wsq = window * window
    for i in range(n_frames):
        start = i * hop
        out[start:start + fft_size] += segments[i]
        envelope[start:start + fft_size] += wsq
    out /= np.maximum(envelope, _ENVELOPE_EPS)
    return AudioBuffer(out, sample_rate)


def istft_overlap_add(frames, bank: PhaseBank, gain: float = 1.0,
                      fft_size: int = FFT_SIZE, hop: int = HOP,
                      sample_rate: int = SAMPLE_RATE) -> AudioBuffer:
    """Invert normalized magnitude frames using noise phases from ``bank``.

    ``frames`` is a sequence of :class:`SpectralFrame` or a
    ``(frames, bins)`` array of magnitudes in [0, 1].  Phases are taken
    from the bank cyclically, and every spectrum is scaled by ``gain``.
    """
    if isinstance(frames, np.ndarray):
        mags = np.atleast_2d(frames)
    else:
        mags = np.stack([f.magnitudes for f in frames])
    validate_frame(mags[0], fft_size // 2 + 1)
    n_frames = mags.shape[0]
    bank_idx = np.arange(n_frames) % len(bank)
    phases = bank.phases[bank_idx]
    return istft(gain * mags, phases, fft_size, hop, sample_rate)


# ---------------------------------------------------------------------------
# WAV I/O (16-bit PCM)
# ---------------------------------------------------------------------------


def read_wav(path, expected_rate: int = SAMPLE_RATE, resample: bool = False) -> AudioBuffer:
    """Read a 16-bit PCM WAV file as mono float64 in [-1, 1].

    Multichannel input is averaged to mono.  A sample rate other than
    ``expected_rate`` is an error unless ``resample`` is set, in which
    case the audio is linearly resampled.
    """
    with wave.open(str(path), "rb") as wav:
        n_channels = wav.getnchannels()
        width = wav.getsampwidth()
        rate = wav.getframerate()
        n_frames = wav.getnframes()
        if width != 2:
            raise ValueError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
        raw = wav.readframes(n_frames)
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    if rate != expected_rate:
        if not resample:
            raise ValueError(
                f"{path}: sample rate {rate} != {expected_rate}; pass resample=True"
            )
        data = _linear_resample(data, rate, expected_rate)
        rate = expected_rate
    return AudioBuffer(data, rate)


def write_wav(path, audio: AudioBuffer) -> None:
    """Write mono 16-bit PCM; samples are hard-clipped to [-1, 1]."""
    clipped = np.clip(audio.samples, -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(audio.sample_rate)
        wav.writeframes(pcm.tobytes())


def _linear_resample(data: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    n_out = int(round(len(data) * rate_out / rate_in))
    if n_out <= 1 or len(data) <= 1:
        return np.zeros(max(n_out, 0))
    t_in = np.arange(len(data)) / rate_in
    t_out = np.arange(n_out) / rate_out
    return np.interp(t_out, t_in, data)
