"""Shared fixtures: synthetic corpora and trained models.

Session scope keeps the expensive pieces (corpus analysis, training)
to one run each; tests must treat them as read-only.
"""

import time

import numpy as np
import pytest

import tonegen
from timbrelab import corpus, dsp, model, training


def _steady_specs(tmp, notes, counts, rolloff_for):
    """ClipSpecs for steady tones: one timbre per note, one clip per split."""
    specs = []
    for i, note in enumerate(notes):
        freq = tonegen.C_MAJOR_OCTAVE[note]
        for j, (split, frames) in enumerate(counts.items()):
            path = tmp / f"{note}-{split}.wav"
            g = rolloff_for(i)
            tonegen.write_tone_clip(path, freq, frames, rolloff=(g, g),
                                    phase_seed=100 * j + i)
            specs.append(corpus.ClipSpec(str(path), split, f"{note}-{split}"))
    return specs


@pytest.fixture(scope="session")
def notes3_corpus(tmp_path_factory):
    """C/E/G steady tones, 66 frames, chroma augmentation. Fast to build."""
    tmp = tmp_path_factory.mktemp("notes3")
    specs = _steady_specs(
        tmp, ("C", "E", "G"),
        {"train": 12, "validation": 6, "test": 4},
        rolloff_for=lambda i: 0.8 + 0.3 * i,
    )
    return corpus.build_corpus(specs, augmentation="chroma", seed=0)


@pytest.fixture(scope="session")
def tiny_trained(notes3_corpus):
    """Small 2-latent sigmoid+skip model trained enough to reconstruct.

    Used by engine/exploration tests that need a model whose decodes
    classify back to their conditioning class.
    """
    cfg = model.ModelConfig(bottleneck_width=2, encoder_widths=(32, 16))
    m = model.build_model(cfg, seed=0)
    _, hist = training.train(
        m, notes3_corpus,
        training.TrainConfig(epochs=80, lr=2e-3, batch_size=16, seed=0),
    )
    return m


# Reference recipe for the 7-note corpus.  The timbres put nearly all
# energy in octave partials (strong, unambiguous bins) over a faint
# inharmonic bed, so every in-band reconstruction target stays positive;
# without the bed, ReLU output units whose pre-activation starts negative
# for an entire pitch class receive no gradient from exactly the frames
# that carry their energy, and ~1/3 of the spectrum never trains.
SCALE_RECIPE = {
    "widths": (256, 64),
    "epochs": 100,
    "lr": 1e-3,
    "batch_size": 256,
    "l2_lambda": 1e-7,
    "bed_amp": 0.035,
}


@pytest.fixture(scope="session")
def scale_recipe():
    return dict(SCALE_RECIPE)


@pytest.fixture(scope="session")
def scale_corpus(tmp_path_factory):
    """All 7 C-major notes, ~2000 frames, distinct octave-heavy timbres."""
    tmp = tmp_path_factory.mktemp("scale")
    counts = {"train": 215, "validation": 50, "test": 20}
    specs = []
    for i, note in enumerate(tonegen.C_MAJOR_OCTAVE):
        freq = tonegen.C_MAJOR_OCTAVE[note]
        for j, (split, frames) in enumerate(counts.items()):
            path = tmp / f"{note}-{split}.wav"
            tone = tonegen.layered_tone(
                freq, tonegen.samples_for_frames(frames),
                tonegen.octave_profile(i),
                bed_amp=SCALE_RECIPE["bed_amp"],
                phase_seed=100 * j + i,
                bed_seed=1000 + i,  # per-note bed, shared across splits
            )
            dsp.write_wav(path, dsp.AudioBuffer(tone))
            specs.append(corpus.ClipSpec(str(path), split, f"{note}-{split}"))
    return corpus.build_corpus(specs, augmentation="chroma", seed=0)


@pytest.fixture(scope="session")
def scale_trained(scale_corpus):
    """100-epoch reference training run on the 7-note corpus.

    Returns (model, history, wall_seconds); several acceptance checks
    share this single run.
    """
    cfg = model.ModelConfig(bottleneck_width=2, use_chroma_input=True,
                            use_chroma_skip=True,
                            encoder_widths=SCALE_RECIPE["widths"])
    m = model.build_model(cfg, seed=0)
    tic = time.perf_counter()
    _, hist = training.train(
        m, scale_corpus,
        training.TrainConfig(epochs=SCALE_RECIPE["epochs"],
                             lr=SCALE_RECIPE["lr"],
                             batch_size=SCALE_RECIPE["batch_size"],
                             l2_lambda=SCALE_RECIPE["l2_lambda"], seed=0),
    )
    wall = time.perf_counter() - tic
    return m, hist, wall
