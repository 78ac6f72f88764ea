"""Serve the live control surface for a trained model.

Starts the streaming engine (audio device if one exists, otherwise a
silent null sink so the control path can still be exercised) and the
WebSocket control server.  Connect with the bundled web panel, or speak
the protocol yourself:

    {"type": "set_latent", "latent": [0.4, 0.6]}
    {"type": "set_chroma", "chroma": 7}
    {"type": "set_gain", "gain": 0.8}
    {"type": "get_status"}

Every message is answered with the engine's full status echo; the
server also pushes status (with a live output spectrum) a few times a
second.  Run demos 01 and 02 first, then:

    python3 demos/demo_05_live_control.py [--port 8765] [--ui path/]
"""

import argparse
from pathlib import Path

from timbrelab.engine import StreamConfig, StreamStartupError, SynthEngine, open_sink
from timbrelab.model import load_model
from timbrelab.server import serve_control

WORKDIR = Path(__file__).parent / "demo_workspace"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--port", type=int, default=8765)
    ap.add_argument("--ui", default=None,
                    help="directory of built control-panel assets")
    args = ap.parse_args()

    model_path = WORKDIR / "demo.mann"
    if not model_path.exists():
        raise SystemExit("run demo_01 and demo_02 first")
    model = load_model(model_path)

    try:
        sink = open_sink("device")
        print("streaming to the default audio device")
    except StreamStartupError as exc:
        sink = open_sink("null")
        print(f"no audio device ({exc}); using a silent sink")

    engine = SynthEngine(model, StreamConfig(smooth_ms=30.0))
    engine.start(sink)
    print(f"control surface: ws://127.0.0.1:{args.port}/ws  (Ctrl-C stops)")
    try:
        serve_control(engine, port=args.port, ui_dir=args.ui)
    finally:
        engine.stop()
        sink.close()


if __name__ == "__main__":
    main()
