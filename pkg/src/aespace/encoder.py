"""Feed-forward encoder mapping feature vectors to embeddings.

Hidden layers apply an affine map followed by a rectifier max(0, x); the
final layer is a plain affine projection. All arithmetic is float64.
Weights initialize from a zero-mean normal with std sqrt(2 / fan_in),
biases from zero. The rectifier derivative at exactly 0 is taken as 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelFormatError, ModelVersionError, ShapeError

MODEL_FILE_VERSION = 1


@dataclass
class EncoderParams:
    """Layer sizes plus per-layer weight matrices (fan_out, fan_in) and biases."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def d_in(self) -> int:
        return self.layer_dims[0]

    @property
    def d_out(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class EncoderGrads:
    """Parameter gradients with the same shapes as EncoderParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init(layer_dims: list[int], seed: int) -> EncoderParams:
    """He-initialized parameters for the given layer sizes.

    Raises:
        ConfigError: Fewer than two dims or a non-positive dim.
    """
    if len(layer_dims) < 2:
        raise ConfigError(f"need at least [d_in, d_out], got {layer_dims}")
    if any(int(d) < 1 for d in layer_dims):
        raise ConfigError(f"layer dims must be positive, got {layer_dims}")
    layer_dims = [int(d) for d in layer_dims]
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return EncoderParams(layer_dims=layer_dims, weights=weights, biases=biases)


def _as_batch(x, d_in):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != d_in:
        raise ShapeError(f"input shape {x.shape} incompatible with d_in={d_in}")
    return x, single

def _forward_pass(params, x):
    """Returns pre-activations z per layer and post-activations h (h[0] = x)."""
    h = [x]
    zs = []
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h[-1] @ w.T + b
        zs.append(z)
        h.append(z if k == last else np.maximum(z, 0.0))
    return zs, h


def forward(params: EncoderParams, x) -> np.ndarray:
    """Embed one feature vector (1-D) or a stack of them (2-D, row-wise)."""
    xb, single = _as_batch(x, params.d_in)
    _, h = _forward_pass(params, xb)
    out = h[-1]
    return out[0] if single else out


def backward(params: EncoderParams, x, grad_phi) -> tuple[EncoderGrads, np.ndarray]:
    """Gradients of <grad_phi, forward(x)> wrt every weight, bias, and x.

    For 2-D inputs the scalar differentiated is the sum over rows of
    <grad_phi[i], forward(x[i])>: parameter gradients accumulate across the
    batch while the returned input gradient stays per-row.
    """
    xb, single = _as_batch(x, params.d_in)
    gb = np.asarray(grad_phi, dtype=np.float64)
    if single:
        gb = gb[None, :]
    if gb.shape != (xb.shape[0], params.d_out):
        raise ShapeError(f"grad_phi shape {np.asarray(grad_phi).shape} incompatible with output dim {params.d_out}")

    zs, h = _forward_pass(params, xb)
    d_weights = [np.empty_like(w) for w in params.weights]
    d_biases = [np.empty_like(b) for b in params.biases]

    delta = gb
    for k in range(len(params.weights) - 1, -1, -1):
        d_weights[k] = delta.T @ h[k]
        d_biases[k] = delta.sum(axis=0)
        delta = delta @ params.weights[k]
        if k > 0:
            delta = delta * (zs[k - 1] > 0.0)

    grad_x = delta[0] if single else delta
    return EncoderGrads(weights=d_weights, biases=d_biases), grad_x


def save(params: EncoderParams, path: str | Path) -> None:
    """Write parameters as a versioned JSON model file (lossless floats)."""
    payload = {
        "version": MODEL_FILE_VERSION,
        "layer_dims": params.layer_dims,
        "weights": [[float(v) for v in w.ravel()] for w in params.weights],
        "biases": [[float(v) for v in b] for b in params.biases],
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load(path: str | Path) -> EncoderParams:
    """Read a model file written by ``save``.

    Raises:
        ModelVersionError: The file declares an unsupported version.
        ModelFormatError: The file is not valid JSON or its shapes do not
            chain.
    """
    try:
        with Path(path).open("r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"unreadable model file {path}: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise ModelFormatError(f"model file {path} lacks a version header")
    if payload["version"] != MODEL_FILE_VERSION:
        raise ModelVersionError(payload["version"], MODEL_FILE_VERSION)

    try:
        layer_dims = [int(d) for d in payload["layer_dims"]]
        weights = [
            np.array(flat, dtype=np.float64).reshape(fan_out, fan_in)
            for flat, fan_in, fan_out in zip(
                payload["weights"], layer_dims[:-1], layer_dims[1:]
            )
        ]
        biases = [np.array(b, dtype=np.float64) for b in payload["biases"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file {path}: {exc}") from exc

    if len(weights) != len(layer_dims) - 1 or len(biases) != len(weights):
        raise ModelFormatError(f"model file {path}: layer count mismatch")
    for b, w in zip(biases, weights):
        if b.shape != (w.shape[0],):
            raise ModelFormatError(f"model file {path}: bias shape mismatch")
    return EncoderParams(layer_dims=layer_dims, weights=weights, biases=biases)
