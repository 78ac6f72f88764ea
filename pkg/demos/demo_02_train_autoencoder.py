"""Train a chroma-conditioned autoencoder on the demo corpus.

The network is a plain dense autoencoder built and trained here from
first principles (no autograd): 2049-bin frames plus a 12-class chroma
one-hot go in, a 2-neuron sigmoid bottleneck squeezes them, and the
decoder gets the chroma vector again through a skip connection so the
tiny latent can spend itself on timbre rather than pitch.

Run demo_01 first, then:

    python3 demos/demo_02_train_autoencoder.py
"""

from pathlib import Path

from timbrelab import corpus, training
from timbrelab.model import ModelConfig, build_model, save_model

WORKDIR = Path(__file__).parent / "demo_workspace"


def main():
    corpus_path = WORKDIR / "demo.tcv"
    if not corpus_path.exists():
        raise SystemExit("run demo_01_build_corpus.py first")
    data = corpus.load_corpus(corpus_path)

    config = ModelConfig(
        bottleneck_width=2,
        bottleneck_activation="sigmoid",
        use_chroma_input=True,
        use_chroma_skip=True,
        encoder_widths=(256, 64),
    )
    model = build_model(config, seed=0)

    def progress(epoch, train_mse, val_mse):
        if epoch == 1 or epoch % 20 == 0:
            print(f"  epoch {epoch:3d}  train {train_mse:.3e}  val {val_mse:.3e}")

    print("training 100 epochs…")
    model, history = training.train(
        model, data,
        training.TrainConfig(epochs=100, lr=1e-3, batch_size=128, seed=0),
        progress=progress,
    )

    drop = history.val_mse[0] / history.val_mse[-1]
    print(f"validation MSE fell {drop:.1f}x "
          f"({history.val_mse[0]:.3e} -> {history.val_mse[-1]:.3e}); "
          f"best epoch {history.best_epoch}")
    print(f"held-out test MSE {history.final_test_mse:.3e}")

    model_path = WORKDIR / "demo.mann"
    save_model(model, model_path)
    best = training.snapshot_model(model, history.best_params)
    save_model(best, WORKDIR / "demo.best.mann")
    training.export_history(history, WORKDIR / "history.csv")
    print(f"saved {model_path}, demo.best.mann and history.csv")


if __name__ == "__main__":
    main()
