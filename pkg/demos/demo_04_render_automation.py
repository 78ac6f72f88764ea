"""Offline-render a scripted performance to WAV.

The synthesis path is the one the live engine uses: decode a magnitude
frame from (latent, chroma), give it deterministic noise phases, and
overlap-add.  Because the noise phases are counter-indexed rather than
drawn from mutable RNG state, the same automation always renders the
same file, bit for bit.

The script sweeps the latent diagonal while stepping through a C-major
arpeggio.  Run demos 01 and 02 first.
"""

from pathlib import Path

import numpy as np

from timbrelab.engine import StreamConfig, load_automation, render_to_wav
from timbrelab.model import load_model

WORKDIR = Path(__file__).parent / "demo_workspace"

# chroma classes: C=0, E=4, G=7.  Sparse magnitude frames carry little
# broadband energy, so useful gains sit well above 1.
SCORE = [
    {"t": 0.0, "latent": [0.1, 0.1], "chroma": 0, "gain": 50.0},
    {"t": 0.5, "latent": [0.3, 0.3]},
    {"t": 1.0, "latent": [0.5, 0.5], "chroma": 4},
    {"t": 1.5, "latent": [0.7, 0.7]},
    {"t": 2.0, "latent": [0.9, 0.9], "chroma": 7},
    {"t": 2.5, "latent": [0.5, 0.5], "chroma": 0, "gain": 35.0},
]


def main():
    model_path = WORKDIR / "demo.mann"
    if not model_path.exists():
        raise SystemExit("run demo_01 and demo_02 first")
    model = load_model(model_path)

    import json
    score_path = WORKDIR / "score.json"
    score_path.write_text(json.dumps(SCORE, indent=2))
    automation = load_automation(score_path)

    out = WORKDIR / "performance.wav"
    config = StreamConfig(smooth_ms=40.0)  # slew latents between events
    samples = render_to_wav(model, automation, 3.0, out, config)

    peak = float(np.max(np.abs(samples)))
    print(f"rendered {samples.size} samples (3.0 s) to {out}")
    print(f"peak amplitude {peak:.3f}")
    print("rendering is deterministic: rerun and diff the file to check")


if __name__ == "__main__":
    main()
