"""Autoencoder topologies with chroma input augmentation and a bottleneck
chroma skip connection, plus a versioned binary weight format.

The encoder shrinks a frame (optionally with 12 appended chroma values)
through leaky-ReLU hidden layers to a 2-, 3-, or 8-wide bottleneck; the
decoder mirrors the hidden widths back out to 2049 bins through a ReLU
output layer.  With the skip connection enabled, the one-hot chroma
vector is concatenated onto the bottleneck activations before the
decoder, so note class is available to the decoder independent of the
latent coordinates.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import chroma, dsp, nn
from .errors import ConfigError, ModelFormatError

MAGIC = b"MANN"
FORMAT_VERSION = 1

BOTTLENECK_WIDTHS = (2, 3, 8)
BOTTLENECK_ACTIVATIONS = ("sigmoid", "lrelu")
DEFAULT_ENCODER_WIDTHS = (512, 256, 128, 64)


@dataclass
class ModelConfig:
    """Topology description; decoder widths are always the encoder mirror."""

    bottleneck_width: int
    bottleneck_activation: str = "sigmoid"
    use_chroma_input: bool = True
    use_chroma_skip: bool = True
    use_first_order_diff: bool = False
    encoder_widths: tuple = DEFAULT_ENCODER_WIDTHS
    num_bins: int = dsp.NUM_BINS

    def __post_init__(self):
        self.encoder_widths = tuple(int(w) for w in self.encoder_widths)
        if self.bottleneck_width not in BOTTLENECK_WIDTHS:
            raise ConfigError(
                f"bottleneck_width must be one of {BOTTLENECK_WIDTHS}, "
                f"got {self.bottleneck_width}"
            )
        if self.bottleneck_activation not in BOTTLENECK_ACTIVATIONS:
            raise ConfigError(
                f"bottleneck_activation must be one of {BOTTLENECK_ACTIVATIONS}, "
                f"got {self.bottleneck_activation!r}"
            )
        if any(w < 1 for w in self.encoder_widths):
            raise ConfigError(f"encoder widths must be positive, got {self.encoder_widths}")
        if self.use_chroma_input and self.use_first_order_diff:
            raise ConfigError("chroma and first-order-difference input augmentation "
                              "are mutually exclusive")
        if self.num_bins < 2:
            raise ConfigError(f"num_bins must be >= 2, got {self.num_bins}")

    @property
    def input_dim(self) -> int:
        dim = self.num_bins
        if self.use_chroma_input:
            dim += 12
        if self.use_first_order_diff:
            dim += self.num_bins
        return dim

    @property
    def decoder_input_dim(self) -> int:
        return self.bottleneck_width + (12 if self.use_chroma_skip else 0)

    @property
    def augmentation(self) -> str:
        if self.use_chroma_input:
            return "chroma"
        if self.use_first_order_diff:
            return "first_order_diff"
        return "none"

    def to_dict(self) -> dict:
        return {
            "bottleneck_width": self.bottleneck_width,
            "bottleneck_activation": self.bottleneck_activation,
            "use_chroma_input": self.use_chroma_input,
            "use_chroma_skip": self.use_chroma_skip,
            "use_first_order_diff": self.use_first_order_diff,
            "encoder_widths": list(self.encoder_widths),
            "num_bins": self.num_bins,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            bottleneck_width=d["bottleneck_width"],
            bottleneck_activation=d["bottleneck_activation"],
            use_chroma_input=d["use_chroma_input"],
            use_chroma_skip=d["use_chroma_skip"],
            use_first_order_diff=d.get("use_first_order_diff", False),
            encoder_widths=tuple(d["encoder_widths"]),
            num_bins=d.get("num_bins", dsp.NUM_BINS),
        )


@dataclass
class AutoencoderModel:
    """Config plus trained parameters; immutable by convention after load."""

    config: ModelConfig
    encoder: list
    decoder: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        shapes = _expected_shapes(self.config)
        layers = self.encoder + self.decoder
        if len(layers) != len(shapes):
            raise ConfigError(
                f"model has {len(layers)} layers, config implies {len(shapes)}"
            )
        for i, (layer, (out_dim, in_dim, activation)) in enumerate(zip(layers, shapes)):
            if layer.weights.shape != (out_dim, in_dim) or layer.activation != activation:
                raise ConfigError(
                    f"layer {i}: got {layer.weights.shape}/{layer.activation}, "
                    f"config implies {(out_dim, in_dim)}/{activation}"
                )

    @property
    def bottleneck_width(self) -> int:
        return self.config.bottleneck_width

    def parameters(self) -> list:
        """Flat [W, b, W, b, ...] list, encoder first, in topology order."""
        out = []
        for layer in self.encoder + self.decoder:
            out.append(layer.weights)
            out.append(layer.bias)
        return out

    def copy(self) -> "AutoencoderModel":
        enc = [nn.DenseLayer(l.weights.copy(), l.bias.copy(), l.activation)
               for l in self.encoder]
        dec = [nn.DenseLayer(l.weights.copy(), l.bias.copy(), l.activation)
               for l in self.decoder]
        return AutoencoderModel(replace(self.config), enc, dec, dict(self.metadata))

    # -- batch forward/backward (training path, no clamping) -------------

    def encode_batch(self, inputs: np.ndarray) -> np.ndarray:
        latent, _ = nn.forward_stack(self.encoder, inputs)
        return latent

    def decode_batch(self, latent: np.ndarray, chroma_onehot=None) -> np.ndarray:
        out, _ = nn.forward_stack(self.decoder, self._decoder_input(latent, chroma_onehot))
        return out

    def forward_training(self, inputs: np.ndarray, chroma_onehot=None):
        """Full encode+decode keeping both caches for backprop."""
        latent, enc_cache = nn.forward_stack(self.encoder, inputs)
        dec_in = self._decoder_input(latent, chroma_onehot)
        output, dec_cache = nn.forward_stack(self.decoder, dec_in)
        return output, (enc_cache, dec_cache)

    def backward_training(self, caches, out_grad: np.ndarray, l2_lambda: float = 0.0):
        """Gradients for every parameter, ordered like :meth:`parameters`.

        The gradient flowing into the decoder input is split: the
        bottleneck slice continues into the encoder, the chroma slice
        (an input, not a parameter) is dropped.
        """
        enc_cache, dec_cache = caches
        dec_grads, dec_in_grad = nn.backward_stack(self.decoder, dec_cache,
                                                   out_grad, l2_lambda)
        latent_grad = dec_in_grad[:, : self.bottleneck_width]
        enc_grads, _ = nn.backward_stack(self.encoder, enc_cache,
                                         latent_grad, l2_lambda)
        flat = []
        for dw, db in enc_grads + dec_grads:
            flat.append(dw)
            flat.append(db)
        return flat

    def _decoder_input(self, latent: np.ndarray, chroma_onehot) -> np.ndarray:
        latent = np.asarray(latent)
        if latent.ndim != 2 or latent.shape[1] != self.bottleneck_width:
            raise ValueError(
                f"latent must be (batch, {self.bottleneck_width}), got {latent.shape}"
            )
        if not self.config.use_chroma_skip:
            return latent
        if chroma_onehot is None:
            raise ValueError("model has a chroma skip connection; chroma is required")
        chroma_onehot = np.asarray(chroma_onehot, dtype=latent.dtype)
        if chroma_onehot.shape != (latent.shape[0], 12):
            raise ValueError(
                f"chroma must be (batch, 12), got {chroma_onehot.shape}"
            )
        return np.hstack([latent, chroma_onehot])


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _expected_shapes(config: ModelConfig):
    """(out, in, activation) per layer, encoder then decoder."""
    shapes = []
    prev = config.input_dim
    for w in config.encoder_widths:
        shapes.append((w, prev, "lrelu"))
        prev = w
    shapes.append((config.bottleneck_width, prev, config.bottleneck_activation))
    prev = config.decoder_input_dim
    for w in reversed(config.encoder_widths):
        shapes.append((w, prev, "lrelu"))
        prev = w
    shapes.append((config.num_bins, prev, "relu"))
    return shapes


def build_model(config: ModelConfig, seed: int = 0, dtype=np.float32) -> AutoencoderModel:
    """Glorot-initialized model for ``config``; biases start at zero."""
    rng = np.random.default_rng(seed)
    shapes = _expected_shapes(config)
    n_enc = len(config.encoder_widths) + 1
    layers = [nn.glorot_layer(o, i, act, rng, dtype) for o, i, act in shapes]
    return AutoencoderModel(config, layers[:n_enc], layers[n_enc:],
                            {"init_seed": seed})


# ---------------------------------------------------------------------------
# Single-frame operations (synthesis/exploration path)
# ---------------------------------------------------------------------------


def encode(model: AutoencoderModel, frame: dsp.SpectralFrame,
           chroma_vec: chroma.ChromaVector | None = None,
           diff: np.ndarray | None = None) -> np.ndarray:
    """Latent coordinates of one frame.

    ``chroma_vec`` is required when the model takes chroma input;
    ``diff`` (the first-order difference) defaults to zeros for models
    using that legacy augmentation.
    """
    cfg = model.config
    parts = [np.asarray(frame.magnitudes, dtype=np.float32)]
    if cfg.use_chroma_input:
        if chroma_vec is None:
            raise ValueError("model uses chroma input augmentation; chroma is required")
        parts.append(chroma_vec.onehot.astype(np.float32))
    if cfg.use_first_order_diff:
        d = np.zeros(cfg.num_bins, dtype=np.float32) if diff is None else \
            np.asarray(diff, dtype=np.float32)
        parts.append(d)
    x = np.concatenate(parts)[None, :]
    return model.encode_batch(x)[0]


def decode(model: AutoencoderModel, latent: np.ndarray,
           chroma_vec: chroma.ChromaVector | None = None) -> np.ndarray:
    """Magnitude frame for externally supplied latent coordinates.

    Sigmoid-bottleneck models clamp the latent to [0, 1] (their
    codomain); leaky-ReLU latents pass through unclamped.  Without a
    skip connection the chroma argument is ignored.
    """
    latent = np.asarray(latent, dtype=np.float32).reshape(1, -1)
    if latent.shape[1] != model.bottleneck_width:
        raise ValueError(
            f"latent has {latent.shape[1]} values, model bottleneck is "
            f"{model.bottleneck_width}"
        )
    if model.config.bottleneck_activation == "sigmoid":
        latent = np.clip(latent, 0.0, 1.0)
    onehot = None
    if model.config.use_chroma_skip:
        vec = chroma_vec if chroma_vec is not None else chroma.ChromaVector.silent()
        onehot = vec.onehot.astype(np.float32)[None, :]
    return model.decode_batch(latent, onehot)[0]


# ---------------------------------------------------------------------------
# Serialization: magic, version, JSON header, little-endian float32 blobs
# ---------------------------------------------------------------------------


def save_model(model: AutoencoderModel, path) -> None:
    header = {
        "config": model.config.to_dict(),
        "metadata": model.metadata,
        "layers": [
            {"out": l.out_dim, "in": l.in_dim, "activation": l.activation}
            for l in model.encoder + model.decoder
        ],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for layer in model.encoder + model.decoder:
            fh.write(np.ascontiguousarray(layer.weights, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())


def _read_header(path):
    with open(path, "rb") as fh:
        prefix = fh.read(10)
        if prefix[:4] != MAGIC:
            raise ModelFormatError(f"{path}: bad magic {prefix[:4]!r}, expected {MAGIC!r}")
        if len(prefix) < 10:
            raise ModelFormatError(f"{path}: truncated header")
        (version,) = struct.unpack("<H", prefix[4:6])
        if version != FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: unsupported model version {version} (supported: {FORMAT_VERSION})"
            )
        (head_len,) = struct.unpack("<I", prefix[6:10])
        head = fh.read(head_len)
    if len(head) != head_len:
        raise ModelFormatError(f"{path}: truncated metadata header")
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt metadata header: {exc}") from exc
    return ModelConfig.from_dict(header["config"]), header, 10 + head_len


def read_model_header(path):
    """Config and metadata without touching the weight blobs."""
    config, header, _ = _read_header(path)
    return config, header


def load_model(path) -> AutoencoderModel:
    """Load a model, validating layer shapes against the embedded config."""
    config, header, payload_offset = _read_header(path)
    shapes = _expected_shapes(config)
    declared = header.get("layers", [])
    if len(declared) != len(shapes):
        raise ModelFormatError(
            f"{path}: header lists {len(declared)} layers, config implies {len(shapes)}"
        )
    for i, (d, (out_dim, in_dim, activation)) in enumerate(zip(declared, shapes)):
        if (d["out"], d["in"], d["activation"]) != (out_dim, in_dim, activation):
            raise ModelFormatError(
                f"{path}: layer {i} header {d} inconsistent with config "
                f"{(out_dim, in_dim, activation)}"
            )

    layers = []
    with open(path, "rb") as fh:
        fh.seek(payload_offset)
        for i, (out_dim, in_dim, activation) in enumerate(shapes):
            w_bytes = fh.read(out_dim * in_dim * 4)
            if len(w_bytes) != out_dim * in_dim * 4:
                raise ModelFormatError(f"{path}: layer {i} weights truncated")
            b_bytes = fh.read(out_dim * 4)
            if len(b_bytes) != out_dim * 4:
                raise ModelFormatError(f"{path}: layer {i} bias truncated")
            weights = np.frombuffer(w_bytes, dtype="<f4").reshape(out_dim, in_dim).copy()
            bias = np.frombuffer(b_bytes, dtype="<f4").copy()
            layers.append(nn.DenseLayer(weights, bias, activation))
        trailing = fh.read(1)
    if trailing:
        raise ModelFormatError(f"{path}: trailing bytes after final layer blob")
    n_enc = len(config.encoder_widths) + 1
    return AutoencoderModel(config, layers[:n_enc], layers[n_enc:],
                            header.get("metadata", {}))
