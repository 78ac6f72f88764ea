"""Frame-level chromagrams and one-hot pitch-class encoding.

Energy from a magnitude frame is pooled into the 88 equal-temperament
notes A0..C8 (a bin belongs to the note whose center lies within ±50
cents of the bin frequency) and folded into 12 pitch classes ordered
C, C#, D, ..., B.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import dsp

PITCH_CLASSES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
NUM_NOTES = 88
A0_HZ = 27.5
A0_PITCH_CLASS = 9  # A


@dataclass
class Chromagram:
    """12 non-negative pitch-class energies."""

    energies: np.ndarray

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=np.float64)
        if self.energies.shape != (12,):
            raise ValueError(f"chromagram must have 12 energies, got {self.energies.shape}")
        if not np.all(np.isfinite(self.energies)) or np.any(self.energies < 0):
            raise ValueError("chromagram energies must be finite and non-negative")


@dataclass
class ChromaVector:
    """One-hot pitch-class indicator; all zeros for silent frames."""

    onehot: np.ndarray
    class_index: Optional[int]

    def __post_init__(self):
        self.onehot = np.asarray(self.onehot, dtype=np.float64)
        if self.onehot.shape != (12,):
            raise ValueError(f"chroma vector must have 12 entries, got {self.onehot.shape}")

    @classmethod
    def from_class(cls, class_index: int) -> "ChromaVector":
        if not 0 <= class_index <= 11:
            raise ValueError(f"pitch class must be 0..11, got {class_index}")
        onehot = np.zeros(12)
        onehot[class_index] = 1.0
        return cls(onehot, class_index)

    @classmethod
    def silent(cls) -> "ChromaVector":
        return cls(np.zeros(12), None)

    @property
    def is_silent(self) -> bool:
        return self.class_index is None


def note_frequencies() -> np.ndarray:
    """Equal-temperament frequencies of the 88 notes A0..C8 in Hz."""
    return A0_HZ * 2.0 ** (np.arange(NUM_NOTES) / 12.0)


def note_name(note_index: int) -> str:
    pc = (A0_PITCH_CLASS + note_index) % 12
    octave = (A0_PITCH_CLASS + note_index) // 12
    return f"{PITCH_CLASSES[pc]}{octave}"


@lru_cache(maxsize=8)
def bin_note_assignment(sample_rate: int = dsp.SAMPLE_RATE,
                        fft_size: int = dsp.FFT_SIZE) -> np.ndarray:
    """Note index (0..87) per FFT bin, or -1 for bins outside every band.

    A bin is assigned to its nearest note when within ±50 cents; the
    50-cent boundary between adjacent notes goes to the upper note.
    Bins below A0 - 50 cents or above C8 + 50 cents map to no note, as
    does the DC bin.
    """
    num_bins = fft_size // 2 + 1
    assignment = np.full(num_bins, -1, dtype=np.int64)
    for b in range(1, num_bins):
        freq = b * sample_rate / fft_size
        cents_from_a0 = 1200.0 * math.log2(freq / A0_HZ)
        note = math.floor(cents_from_a0 / 100.0 + 0.5)
        if 0 <= note < NUM_NOTES:
            assignment[b] = note
    return assignment


@lru_cache(maxsize=8)
def _class_pooling_matrix(sample_rate: int, fft_size: int) -> np.ndarray:
    """(12, num_bins) 0/1 matrix pooling bin power into pitch classes."""
    assignment = bin_note_assignment(sample_rate, fft_size)
    num_bins = fft_size // 2 + 1
    pool = np.zeros((12, num_bins))
    assigned = assignment >= 0
    classes = (A0_PITCH_CLASS + assignment[assigned]) % 12
    pool[classes, np.nonzero(assigned)[0]] = 1.0
    return pool


def frame_chromagram(frame: np.ndarray,
                     sample_rate: int = dsp.SAMPLE_RATE,
                     fft_size: int = dsp.FFT_SIZE) -> Chromagram:
    """Pitch-class energies of one magnitude frame (squared magnitudes)."""
    frame = np.asarray(frame, dtype=np.float64)
    num_bins = fft_size // 2 + 1
    if frame.shape != (num_bins,):
        raise ValueError(f"frame must have {num_bins} bins, got {frame.shape}")
    pool = _class_pooling_matrix(sample_rate, fft_size)
    return Chromagram(pool @ (frame * frame))


def one_hot_chroma(chromagram: Chromagram) -> ChromaVector:
    """ChromaVector with a 1 at the dominant class.

    Ties break toward the lowest pitch-class index; an all-zero
    chromagram yields the silent (all-zero) vector.
    """
    if not np.any(chromagram.energies > 0):
        return ChromaVector.silent()
    return ChromaVector.from_class(int(np.argmax(chromagram.energies)))


def classify_frames(frames: np.ndarray,
                    sample_rate: int = dsp.SAMPLE_RATE,
                    fft_size: int = dsp.FFT_SIZE) -> np.ndarray:
    """Dominant pitch class per row of a (frames, bins) matrix; -1 = silent.

    Vectorized equivalent of ``one_hot_chroma(frame_chromagram(f))``
    for classification-heavy paths (corpus labeling, mesh sampling).
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    pool = _class_pooling_matrix(sample_rate, fft_size)
    energies = (frames * frames) @ pool.T  # (n, 12)
    classes = energies.argmax(axis=1).astype(np.int64)
    classes[~np.any(energies > 0, axis=1)] = -1
    return classes


def export_bin_note_table(path,
                          sample_rate: int = dsp.SAMPLE_RATE,
                          fft_size: int = dsp.FFT_SIZE) -> None:
    """Write the bin -> note assignment as CSV for inspection."""
    assignment = bin_note_assignment(sample_rate, fft_size)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "freq_hz", "note_index", "note_name", "pitch_class"])
        for b, note in enumerate(assignment):
            freq = b * sample_rate / fft_size
            if note < 0:
                writer.writerow([b, f"{freq:.3f}", -1, "", ""])
            else:
                pc = (A0_PITCH_CLASS + int(note)) % 12
                writer.writerow([b, f"{freq:.3f}", int(note), note_name(int(note)),
                                 PITCH_CLASSES[pc]])
