"""Characterize the trained model's 2-D latent space.

Two views of the same question — "what lives where in the latent
square?":

  * embed the training frames and scatter-plot them (SVG, color per
    pitch class): a sigmoid bottleneck guarantees every point sits
    strictly inside (0,1)^2;
  * walk a regular mesh over that square, decode each point under each
    pitch-class condition, and ask a chroma classifier whether the
    decode still sounds like the requested class.  High per-class match
    fractions mean the whole control surface is playable, not just the
    spots the training data happened to visit.

Run demos 01 and 02 first.
"""

from pathlib import Path

from timbrelab import corpus, explore
from timbrelab.model import load_model

WORKDIR = Path(__file__).parent / "demo_workspace"


def main():
    model_path = WORKDIR / "demo.mann"
    if not model_path.exists():
        raise SystemExit("run demo_01 and demo_02 first")
    model = load_model(model_path)
    data = corpus.load_corpus(WORKDIR / "demo.tcv")

    embedding = explore.embed_corpus(model, data, "train")
    print(f"embedded {len(embedding)} train frames; bounding box:")
    for d, (lo, hi) in enumerate(embedding.bounding_box):
        print(f"  latent[{d}]: [{lo:.3f}, {hi:.3f}]")
    explore.export_embedding(embedding, WORKDIR / "embedding.csv",
                             svg_path=WORKDIR / "embedding.svg")
    print("wrote embedding.csv and embedding.svg")

    report = explore.sampling_report(model, data, mesh_length=50)
    print(f"mesh {report.mesh_length}^{report.bottleneck_width} "
          f"({report.samples_per_class} decodes per class):")
    for cls in sorted(report.fractions):
        from timbrelab import chroma
        print(f"  {chroma.PITCH_CLASSES[cls]:>2}: "
              f"{report.fractions[cls]:.3f} of decodes match")
    explore.export_report(report, WORKDIR / "mesh_report.csv")
    print("wrote mesh_report.csv")


if __name__ == "__main__":
    main()
