"""Characterize trained latent spaces.

Two instruments: corpus embeddings labeled by note class (the scatter
plots), and exhaustive mesh sampling of the bounded sigmoid latent
space under each chroma condition, reporting the fraction of decoded
frames whose dominant pitch class matches the conditioning vector.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import chroma
from .corpus import Corpus
from .errors import UnsupportedModelError
from .model import AutoencoderModel
from .training import _check_compatible

MESH_CHUNK = 8192


@dataclass
class EmbeddingSet:
    """Latent points for one corpus split with their note classes."""

    points: np.ndarray       # (n, d)
    note_classes: np.ndarray  # (n,), 0..11
    split: str

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points))
        self.note_classes = np.asarray(self.note_classes)
        if len(self.points) != len(self.note_classes):
            raise ValueError("points and note_classes lengths differ")

    def __len__(self):
        return len(self.points)

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def bounding_box(self) -> np.ndarray:
        """(d, 2) per-dimension [min, max]."""
        return np.stack([self.points.min(axis=0), self.points.max(axis=0)], axis=1)


@dataclass
class MeshReport:
    """Per-class chroma-match fractions from exhaustive mesh sampling.

    Only classes present in the training corpus appear in
    ``fractions``; absent classes are reported as dashes on export.
    """

    bottleneck_width: int
    mesh_length: int
    fractions: dict

    def __post_init__(self):
        for cls, frac in self.fractions.items():
            if not 0 <= cls <= 11:
                raise ValueError(f"pitch class {cls} out of range")
            if not 0.0 <= frac <= 1.0:
                raise ValueError(f"match fraction {frac} outside [0, 1]")

    @property
    def samples_per_class(self) -> int:
        return self.mesh_length ** self.bottleneck_width


def embed_corpus(model: AutoencoderModel, corpus: Corpus, split: str) -> EmbeddingSet:
    """One latent point per non-silent frame of ``split``."""
    _check_compatible(model, corpus)
    idx = corpus.split_indices(split, drop_silent=True)
    if len(idx) == 0:
        raise ValueError(f"split {split!r} has no non-silent frames")
    x = corpus.input_matrix(idx).astype(np.float32)
    points = np.vstack([
        model.encode_batch(x[s:s + 1024]) for s in range(0, len(x), 1024)
    ])
    return EmbeddingSet(points, corpus.chroma_classes[idx].astype(np.int64), split)


def mesh_points(mesh_length: int, dims: int) -> np.ndarray:
    """All mesh_length**dims grid points of [0, 1]^dims, endpoints included."""
    if mesh_length < 2:
        raise ValueError(f"mesh_length must be >= 2, got {mesh_length}")
    axis = np.linspace(0.0, 1.0, mesh_length)
    grids = np.meshgrid(*([axis] * dims), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, dims)


def _require_meshable(model: AutoencoderModel) -> None:
    if model.config.bottleneck_activation != "sigmoid":
        raise UnsupportedModelError(
            "mesh sampling requires a sigmoid bottleneck (bounded latent space)"
        )
    if not model.config.use_chroma_skip:
        raise UnsupportedModelError("mesh sampling requires the chroma skip connection")


def mesh_sample(model: AutoencoderModel, mesh_length: int, note_class: int) -> float:
    """Fraction of grid decodes whose dominant class matches ``note_class``.

    Every grid point is decoded with the conditioning one-hot chroma
    vector and classified back through the chromagram; an all-zero
    (silent) decode counts as a mismatch.
    """
    _require_meshable(model)
    if not 0 <= note_class <= 11:
        raise ValueError(f"note_class must be 0..11, got {note_class}")
    grid = mesh_points(mesh_length, model.bottleneck_width).astype(np.float32)
    cond = np.zeros((1, 12), dtype=np.float32)
    cond[0, note_class] = 1.0
    sr = model.metadata.get("sample_rate", None) or 44100
    matches = 0
    for start in range(0, len(grid), MESH_CHUNK):
        chunk = grid[start:start + MESH_CHUNK]
        out = model.decode_batch(chunk, np.repeat(cond, len(chunk), axis=0))
        classes = chroma.classify_frames(out, sr)
        matches += int(np.sum(classes == note_class))
    return matches / len(grid)


def sampling_report(model: AutoencoderModel, corpus: Corpus | None = None,
                    mesh_length: int = 50) -> MeshReport:
    """Run :func:`mesh_sample` for every note class present in training.

    Presence comes from the corpus's train split when one is given,
    otherwise from the class list the trainer recorded in the model
    metadata.
    """
    _require_meshable(model)
    if corpus is not None:
        classes = corpus.present_classes("train")
    else:
        classes = model.metadata.get("train_classes")
        if classes is None:
            raise ValueError(
                "model metadata lacks train_classes; pass the training corpus"
            )
    fractions = {int(c): mesh_sample(model, mesh_length, int(c)) for c in classes}
    return MeshReport(model.bottleneck_width, mesh_length, fractions)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def export_report(report: MeshReport, path) -> None:
    """CSV with one column per pitch class; absent classes marked ``--``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bottleneck", "mesh_length", *chroma.PITCH_CLASSES])
        row = [report.bottleneck_width, report.mesh_length]
        for c in range(12):
            row.append(f"{report.fractions[c]:.4f}" if c in report.fractions else "--")
        writer.writerow(row)


def report_to_json(report: MeshReport) -> str:
    payload = {
        "bottleneck": report.bottleneck_width,
        "mesh_length": report.mesh_length,
        "fractions": {
            chroma.PITCH_CLASSES[c]: report.fractions.get(c)
            for c in range(12)
        },
    }
    return json.dumps(payload, sort_keys=True)


def export_embedding(embedding: EmbeddingSet, path, svg_path=None) -> None:
    """Write points as CSV (dim_0..dim_{d-1}, note_class, split).

    ``svg_path`` renders a scatter image and is only supported for 2-D
    embeddings; higher dimensions export data only.
    """
    if svg_path is not None and embedding.dims != 2:
        raise ValueError(f"SVG scatter is 2-D only (embedding has {embedding.dims} dims)")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"dim_{i}" for i in range(embedding.dims)]
                        + ["note_class", "split"])
        for point, cls in zip(embedding.points, embedding.note_classes):
            writer.writerow([repr(float(v)) for v in point]
                            + [chroma.PITCH_CLASSES[int(cls)], embedding.split])
    if svg_path is not None:
        with open(svg_path, "w") as fh:
            fh.write(render_scatter_svg(embedding))


# 12 colors sampled from a perceptually uniform map, C (dark blue) .. B (yellow).
_CLASS_COLORS = (
    "#440154", "#482173", "#433e85", "#38598c", "#2d708e", "#25858e",
    "#1e9b8a", "#2ab07f", "#52c569", "#86d549", "#c2df23", "#fde725",
)


def render_scatter_svg(embedding: EmbeddingSet, size: int = 480) -> str:
    """Self-contained SVG scatter of a 2-D embedding, one color per class."""
    if embedding.dims != 2:
        raise ValueError("scatter rendering requires a 2-D embedding")
    pad = 36
    box = embedding.bounding_box
    lo, hi = box[:, 0], box[:, 1]
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    def sx(v):
        return pad + (v - lo[0]) / span[0] * (size - 2 * pad)

    def sy(v):
        return size - pad - (v - lo[1]) / span[1] * (size - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" '
        f'fill="none" stroke="#888"/>',
    ]
    for point, cls in zip(embedding.points, embedding.note_classes):
        parts.append(
            f'<circle cx="{sx(point[0]):.2f}" cy="{sy(point[1]):.2f}" r="2.2" '
            f'fill="{_CLASS_COLORS[int(cls)]}" fill-opacity="0.7"/>'
        )
    for c in sorted(set(int(v) for v in embedding.note_classes)):
        y = pad + 14 * (c + 1)
        parts.append(
            f'<circle cx="{size - pad + 10}" cy="{y}" r="4" fill="{_CLASS_COLORS[c]}"/>'
        )
        parts.append(
            f'<text x="{size - pad + 18}" y="{y + 4}" font-size="11" '
            f'font-family="sans-serif">{chroma.PITCH_CLASSES[c]}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
