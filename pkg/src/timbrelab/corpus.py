"""Build, persist, and load training corpora of labeled STFT frames.

A corpus is a flat set of normalized 2049-bin magnitude frames with a
dominant pitch class per frame and a train/validation/test split
assigned at the clip level, so near-duplicate frames never cross
splits.  The on-disk format is a small versioned binary container:
magic ``TCV1``, a length-prefixed JSON metadata header, then raw
little-endian float32/int8 arrays.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import chroma, dsp
from .errors import ClipReadError, CorpusFormatError, EmptyCorpusError

MAGIC = b"TCV1"
FORMAT_VERSION = 1
SPLITS = ("train", "validation", "test")
AUGMENTATIONS = ("none", "chroma", "first_order_diff")


@dataclass
class ClipSpec:
    """One source recording and the split its frames belong to."""

    path: str
    split: str
    clip_id: str

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not self.clip_id:
            raise ValueError("clip_id must be non-empty")


@dataclass
class ClipInfo:
    """Per-clip bookkeeping inside a built corpus."""

    clip_id: str
    split: str
    num_frames: int


@dataclass
class Corpus:
    """Parallel frame/label arrays plus clip-level split structure.

    ``frames`` are normalized magnitudes (float32, rows in [0, 1]),
    ``peaks`` the pre-normalization maxima, ``chroma_classes`` the
    dominant pitch class per frame (-1 for silent frames).  Frames are
    stored grouped by clip in ``clips`` order, so the source clip and
    split of any frame follow from the clip frame counts.
    """

    frames: np.ndarray
    peaks: np.ndarray
    chroma_classes: np.ndarray
    clips: list[ClipInfo]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        self.peaks = np.asarray(self.peaks, dtype=np.float32)
        self.chroma_classes = np.asarray(self.chroma_classes, dtype=np.int8)
        n = len(self.frames)
        if len(self.peaks) != n or len(self.chroma_classes) != n:
            raise ValueError("frames, peaks, and chroma_classes lengths differ")
        if sum(c.num_frames for c in self.clips) != n:
            raise ValueError("clip frame counts do not sum to the frame total")
        seen: dict[str, str] = {}
        for c in self.clips:
            if c.clip_id in seen:
                raise ValueError(f"clip_id {c.clip_id!r} appears more than once")
            seen[c.clip_id] = c.split

    def __len__(self):
        return len(self.frames)

    # -- per-frame views -------------------------------------------------

    @property
    def clip_index(self) -> np.ndarray:
        """Index into ``clips`` for every frame."""
        return np.repeat(np.arange(len(self.clips)), [c.num_frames for c in self.clips])

    @property
    def split_labels(self) -> np.ndarray:
        splits = np.array([c.split for c in self.clips])
        return splits[self.clip_index]

    def frame(self, i: int) -> dsp.SpectralFrame:
        return dsp.SpectralFrame(self.frames[i].astype(np.float64), float(self.peaks[i]))

    def chroma_vector(self, i: int) -> chroma.ChromaVector:
        cls = int(self.chroma_classes[i])
        return chroma.ChromaVector.silent() if cls < 0 else chroma.ChromaVector.from_class(cls)

    def split_indices(self, split: str, drop_silent: bool = False) -> np.ndarray:
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        mask = self.split_labels == split
        if drop_silent:
            mask &= self.chroma_classes >= 0
        return np.nonzero(mask)[0]

    def present_classes(self, split: str = "train") -> list[int]:
        """Pitch classes that occur in the given split, ascending."""
        idx = self.split_indices(split)
        classes = np.unique(self.chroma_classes[idx])
        return [int(c) for c in classes if c >= 0]

    # -- model input assembly --------------------------------------------

    @property
    def augmentation(self) -> str:
        return self.metadata.get("augmentation", "none")

    def chroma_onehot(self, indices=None) -> np.ndarray:
        """(n, 12) one-hot rows; silent frames are all-zero."""
        classes = self.chroma_classes if indices is None else self.chroma_classes[indices]
        out = np.zeros((len(classes), 12), dtype=np.float32)
        voiced = classes >= 0
        out[np.nonzero(voiced)[0], classes[voiced]] = 1.0
        return out

    def input_matrix(self, indices=None) -> np.ndarray:
        """Model inputs for the corpus's recorded augmentation mode.

        ``none`` yields the bare frames; ``chroma`` appends the 12-value
        one-hot vector; ``first_order_diff`` appends the frame-to-frame
        difference (zero for the first frame of each clip, clipped to
        [-1, 1]).  Targets are always the bare frames.
        """
        if indices is None:
            indices = np.arange(len(self))
        base = self.frames[indices]
        aug = self.augmentation
        if aug == "none":
            return base
        if aug == "chroma":
            return np.hstack([base, self.chroma_onehot(indices)])
        if aug == "first_order_diff":
            return np.hstack([base, self._diff_matrix()[indices]])
        raise ValueError(f"unknown augmentation mode {aug!r}")

    def _diff_matrix(self) -> np.ndarray:
        diffs = np.zeros_like(self.frames)
        diffs[1:] = self.frames[1:] - self.frames[:-1]
        # zero the first frame of every clip
        firsts = np.cumsum([0] + [c.num_frames for c in self.clips[:-1]])
        diffs[firsts] = 0.0
        return np.clip(diffs, -1.0, 1.0)

    # -- serialization ---------------------------------------------------

    def to_bytes(self) -> bytes:
        header = {
            "version": FORMAT_VERSION,
            "fft_size": self.metadata.get("fft_size", dsp.FFT_SIZE),
            "hop": self.metadata.get("hop", dsp.HOP),
            "sample_rate": self.metadata.get("sample_rate", dsp.SAMPLE_RATE),
            "augmentation": self.augmentation,
            "seed": self.metadata.get("seed", 0),
            "drop_silent": bool(self.metadata.get("drop_silent", False)),
            "num_frames": len(self),
            "num_bins": self.frames.shape[1] if len(self) else dsp.NUM_BINS,
            "clips": [
                {"clip_id": c.clip_id, "split": c.split, "num_frames": c.num_frames}
                for c in self.clips
            ],
        }
        head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        parts = [
            MAGIC,
            struct.pack("<I", len(head)),
            head,
            self.frames.astype("<f4").tobytes(),
            self.peaks.astype("<f4").tobytes(),
            self.chroma_classes.astype("i1").tobytes(),
        ]
        return b"".join(parts)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------


def build_corpus(clips, augmentation: str = "none", seed: int = 0,
                 drop_silent: bool = False, resample: bool = False,
                 sample_rate: int = dsp.SAMPLE_RATE) -> Corpus:
    """Analyze WAV clips into a labeled, split corpus.

    Clips are processed in clip_id order so identical inputs always
    produce byte-identical corpora.  Chroma is computed on the raw
    (pre-normalization) frame; classification is scale-invariant so
    this matches labeling the normalized frame.
    """
    clips = list(clips)
    if not clips:
        raise EmptyCorpusError("no clips given")
    if augmentation not in AUGMENTATIONS:
        raise ValueError(f"augmentation must be one of {AUGMENTATIONS}, got {augmentation!r}")
    if not any(c.split == "train" for c in clips):
        raise ValueError("at least one clip must be assigned to the train split")
    ids = [c.clip_id for c in clips]
    if len(set(ids)) != len(ids):
        raise ValueError("clip_ids must be unique")

    frame_blocks, peak_blocks, class_blocks, infos = [], [], [], []
    for spec in sorted(clips, key=lambda c: c.clip_id):
        try:
            audio = dsp.read_wav(spec.path, expected_rate=sample_rate, resample=resample)
            raw_mags, _ = dsp.stft(audio)
        except (OSError, EOFError, ValueError, EmptyCorpusError) as exc:
            raise ClipReadError(f"clip {spec.clip_id!r} ({spec.path}): {exc}") from exc
        normalized, peaks = dsp.normalize_frames(raw_mags)
        classes = chroma.classify_frames(raw_mags, sample_rate)
        frame_blocks.append(normalized)
        peak_blocks.append(peaks)
        class_blocks.append(classes)
        infos.append(ClipInfo(spec.clip_id, spec.split, len(normalized)))

    total = sum(i.num_frames for i in infos)
    if total == 0:
        raise EmptyCorpusError("clips yielded zero usable frames")
    metadata = {
        "fft_size": dsp.FFT_SIZE,
        "hop": dsp.HOP,
        "sample_rate": sample_rate,
        "augmentation": augmentation,
        "seed": seed,
        "drop_silent": drop_silent,
    }
    return Corpus(
        np.vstack(frame_blocks),
        np.concatenate(peak_blocks),
        np.concatenate(class_blocks),
        infos,
        metadata,
    )


def load_manifest(path) -> list[ClipSpec]:
    """Read a JSON manifest: an array of {path, split, clip_id} objects.

    Relative clip paths are resolved against the manifest's directory.
    """
    base = Path(path).parent
    with open(path) as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ValueError(f"{path}: manifest must be a JSON array")
    specs = []
    for e in entries:
        clip_path = Path(e["path"])
        if not clip_path.is_absolute():
            clip_path = base / clip_path
        specs.append(ClipSpec(str(clip_path), e["split"], e["clip_id"]))
    return specs


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "wb") as fh:
        fh.write(corpus.to_bytes())


def load_corpus(path) -> Corpus:
    """Load and validate a corpus written by :func:`save_corpus`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CorpusFormatError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < 8:
        raise CorpusFormatError(f"{path}: truncated header")
    (head_len,) = struct.unpack("<I", blob[4:8])
    head_end = 8 + head_len
    if len(blob) < head_end:
        raise CorpusFormatError(f"{path}: truncated metadata header")
    try:
        header = json.loads(blob[8:head_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorpusFormatError(f"{path}: corrupt metadata header: {exc}") from exc
    version = header.get("version")
    if version != FORMAT_VERSION:
        raise CorpusFormatError(
            f"{path}: unsupported corpus version {version!r} (supported: {FORMAT_VERSION})"
        )

    n = header["num_frames"]
    bins = header["num_bins"]
    sizes = [n * bins * 4, n * 4, n]
    if len(blob) != head_end + sum(sizes):
        raise CorpusFormatError(
            f"{path}: payload is {len(blob) - head_end} bytes, expected {sum(sizes)}"
        )
    off = head_end
    frames = np.frombuffer(blob[off:off + sizes[0]], dtype="<f4").reshape(n, bins)
    off += sizes[0]
    peaks = np.frombuffer(blob[off:off + sizes[1]], dtype="<f4")
    off += sizes[1]
    classes = np.frombuffer(blob[off:off + sizes[2]], dtype="i1")

    _validate_stored_frames(path, frames, peaks, classes)
    clips = [ClipInfo(c["clip_id"], c["split"], c["num_frames"]) for c in header["clips"]]
    metadata = {
        k: header[k]
        for k in ("fft_size", "hop", "sample_rate", "augmentation", "seed", "drop_silent")
    }
    return Corpus(frames.copy(), peaks.copy(), classes.copy(), clips, metadata)


def _validate_stored_frames(path, frames, peaks, classes):
    if frames.size and not np.all(np.isfinite(frames)):
        raise CorpusFormatError(f"{path}: stored frames contain NaN/Inf")
    if np.any(frames < 0) or np.any(frames > 1):
        raise CorpusFormatError(f"{path}: stored frames leave [0, 1]")
    voiced = peaks > 0
    if frames.size and not np.all(frames[voiced].max(axis=1) == 1.0):
        raise CorpusFormatError(f"{path}: non-silent frame does not peak at 1.0")
    if np.any(frames[~voiced] != 0.0):
        raise CorpusFormatError(f"{path}: silent frame has nonzero magnitudes")
    if np.any((classes < -1) | (classes > 11)):
        raise CorpusFormatError(f"{path}: chroma class out of range")
