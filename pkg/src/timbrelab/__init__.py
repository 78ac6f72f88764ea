"""Spectral-frame autoencoders for timbre interpolation and synthesis.

The pipeline: WAV clips are analyzed into per-frame normalized STFT
magnitude corpora with chroma labels; small dense autoencoders (built
on a from-scratch numpy kernel) compress each frame through a 2-, 3-,
or 8-neuron bottleneck, optionally conditioned on chroma; trained
latent spaces are characterized by mesh sampling and embedding export;
and a real-time engine resynthesizes audio from live latent/chroma
controls using noise phases, served over a WebSocket control surface.
"""

from .chroma import Chromagram, ChromaVector, frame_chromagram, one_hot_chroma
from .corpus import ClipSpec, Corpus, build_corpus, load_corpus, load_manifest, save_corpus
from .dsp import (AudioBuffer, PhaseBank, SpectralFrame, hann_window, istft,
                  istft_overlap_add, noise_phase_bank, normalize_frame,
                  read_wav, stft, white_noise, write_wav)
from .engine import (ControlBus, ControlState, StreamConfig, StreamRenderer,
                     SynthEngine, open_sink, render_to_wav, run_stream)
from .errors import (ConfigError, CorpusFormatError, EmptyCorpusError,
                     InvalidFrameError, ModelFormatError, StreamStartupError,
                     TimbrelabError, TrainingDiverged, UnsupportedModelError)
from .explore import (EmbeddingSet, MeshReport, embed_corpus, export_embedding,
                      mesh_sample, sampling_report)
from .model import (AutoencoderModel, ModelConfig, build_model, decode, encode,
                    load_model, read_model_header, save_model)
from .training import TrainConfig, TrainHistory, evaluate_mse, export_history, train

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "AutoencoderModel", "ChromaVector", "Chromagram",
    "ClipSpec", "ConfigError", "ControlBus", "ControlState", "Corpus",
    "CorpusFormatError", "EmbeddingSet", "EmptyCorpusError", "InvalidFrameError",
    "MeshReport", "ModelConfig", "ModelFormatError", "PhaseBank",
    "SpectralFrame", "StreamConfig", "StreamRenderer", "StreamStartupError",
    "SynthEngine", "TimbrelabError", "TrainConfig", "TrainHistory",
    "TrainingDiverged", "UnsupportedModelError", "build_corpus", "build_model",
    "decode", "embed_corpus", "encode", "evaluate_mse", "export_embedding",
    "export_history", "frame_chromagram", "hann_window", "istft",
    "istft_overlap_add", "load_corpus", "load_manifest", "load_model",
    "mesh_sample", "noise_phase_bank", "normalize_frame", "one_hot_chroma",
    "open_sink", "read_model_header", "read_wav", "render_to_wav",
    "run_stream", "sampling_report", "save_corpus", "save_model", "stft",
    "train", "white_noise", "write_wav",
]
