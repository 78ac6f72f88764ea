"""Build a spectral-frame corpus from synthesized WAV clips.

Walkthrough: synthesize a small C-major set of harmonic tones (one
distinct timbre per note), write them as 16-bit WAVs, then analyze
them into a normalized magnitude-frame corpus with chroma labels.

Artifacts land in ./demo_workspace/ and later demos pick them up:

    python3 demos/demo_01_build_corpus.py
"""

from pathlib import Path

import numpy as np

from timbrelab import corpus, dsp

WORKDIR = Path(__file__).parent / "demo_workspace"
SR = dsp.SAMPLE_RATE

# One octave of C major, equal temperament, A4 = 440 Hz.
NOTES = {
    "C": 261.6256, "D": 293.6648, "E": 329.6276, "F": 349.2282,
    "G": 391.9954, "A": 440.0, "B": 493.8833,
}


def harmonic_tone(f0, num_samples, brightness, seed):
    """Additive tone: octave-heavy partials over a faint inharmonic bed."""
    t = np.arange(num_samples) / SR
    rng = np.random.default_rng(seed)
    y = np.zeros(num_samples)
    # strong octave partials carry the timbre's identity
    for k, a in {1: 1.0, 2: brightness, 4: 0.5, 8: 0.3}.items():
        y += a * np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi))
    # a quiet fixed bed keeps every analysis bin gently excited
    freqs = np.geomspace(100, 16000, 400) * rng.uniform(0.98, 1.02, 400)
    for i in range(0, 400, 50):
        f = freqs[i:i + 50, None]
        p = rng.uniform(0, 2 * np.pi, (50, 1))
        y += 0.03 * np.sin(2 * np.pi * f * t[None, :] + p).sum(axis=0)
    return 0.45 * y / np.max(np.abs(y))


def main():
    WORKDIR.mkdir(exist_ok=True)
    seconds = {"train": 1.5, "validation": 0.6, "test": 0.4}

    specs = []
    for i, (note, f0) in enumerate(NOTES.items()):
        for j, (split, dur) in enumerate(seconds.items()):
            path = WORKDIR / f"{note}-{split}.wav"
            tone = harmonic_tone(f0, int(dur * SR), 0.9 - 0.07 * i,
                                 seed=100 * j + i)
            dsp.write_wav(path, dsp.AudioBuffer(tone))
            specs.append(corpus.ClipSpec(str(path), split, f"{note}-{split}"))
    print(f"wrote {len(specs)} clips to {WORKDIR}")

    # Analysis: 4096-point frames, hop 1024, each frame normalized to a
    # unit peak with the peak kept alongside; chroma labels ride along
    # as a 12-class one-hot so models can condition on pitch class.
    built = corpus.build_corpus(specs, augmentation="chroma", seed=0)
    out = WORKDIR / "demo.tcv"
    corpus.save_corpus(built, out)

    print(f"analyzed into {len(built.frames)} frames "
          f"({built.frames.shape[1]} bins each)")
    for split in corpus.SPLITS:
        idx = built.split_indices(split)
        print(f"  {split:>10}: {len(idx):4d} frames")
    print(f"pitch classes present in train: {built.present_classes('train')}")
    print(f"corpus hash {built.content_hash()[:16]}…  -> {out}")


if __name__ == "__main__":
    main()
