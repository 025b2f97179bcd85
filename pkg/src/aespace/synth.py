"""Synthetic datasets with known ground-truth scores.

Each record draws a latent score s uniformly from [0, 1] and a view count V
log-uniformly from the configured range, then sets faves = round(V**s). That
construction inverts the log-ratio score exactly up to integer rounding, so
``compute_score(V, F)`` recovers s to within ln(2)/ln(view_lo).

Features are a seeded random mixture of a five-function nonlinear basis of s
plus optional Gaussian noise; a linear probe cannot read s off directly, so
an encoder trained on these features has to learn a nonlinear map.

RNG: numpy's default PCG64 generator seeded with ``SynthConfig.seed``. The
draw order is fixed (mixing matrix first, then per record: latent score,
view count, noise), so identical configs yield bit-identical datasets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data_model import Dataset, ImageRecord
from .errors import ConfigError

BASIS_SIZE = 5


@dataclass(frozen=True)
class SynthConfig:
    n: int
    d_in: int
    noise_sigma: float = 0.0
    seed: int = 0
    view_range: tuple[int, int] = (100, 100_000)

    def validate(self) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.d_in < 2:
            raise ConfigError(f"d_in must be >= 2, got {self.d_in}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        lo, hi = self.view_range
        if lo < 100:
            raise ConfigError(f"view_range.lo must be >= 100, got {lo}")
        if not lo < hi:
            raise ConfigError(f"view_range.lo must be < view_range.hi, got ({lo}, {hi})")


def basis(s: float) -> np.ndarray:
    """Nonlinear basis [s, s^2, s^3, sin(2*pi*s), cos(2*pi*s)]."""
    return np.array(
        [s, s**2, s**3, math.sin(2 * math.pi * s), math.cos(2 * math.pi * s)]
    )


def mixing_matrix(config: SynthConfig) -> np.ndarray:
    """The (d_in, 5) mixing matrix used by ``generate`` for this config.

    Rows are standard-normal draws normalized to unit length, taken from a
    fresh generator before any record draws, so this replays exactly what
    ``generate`` uses internally.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    return _draw_mixing_matrix(rng, config.d_in)


def _draw_mixing_matrix(rng: np.random.Generator, d_in: int) -> np.ndarray:
    m = rng.normal(size=(d_in, BASIS_SIZE))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def generate(config: SynthConfig) -> Dataset:
    """Generate a dataset whose crowd counts encode a known latent score.

    For record k (ids "synth-000000", "synth-000001", ...):
      * latent score s ~ Uniform(0, 1)
      * views V: exp of a uniform draw on [ln lo, ln hi], rounded, clipped
        to the range
      * faves F = max(1, round(V**s))
      * features = M @ basis(s) + Gaussian noise with std ``noise_sigma``

    Raises:
        ConfigError: Invalid configuration.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    mix = _draw_mixing_matrix(rng, config.d_in)
    lo, hi = config.view_range

    records = []
    for k in range(config.n):
        s = float(rng.uniform(0.0, 1.0))
        views = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
        views = min(max(views, lo), hi)
        faves = max(1, int(round(views**s)))
        # noise is drawn even at sigma 0 so the per-record draw sequence,
        # and hence (s, V, F), is identical across noise levels for a seed
        noise = rng.normal(0.0, 1.0, size=config.d_in)
        features = mix @ basis(s) + config.noise_sigma * noise
        records.append(
            ImageRecord(
                id=f"synth-{k:06d}",
                views=views,
                faves=faves,
                features=features,
                latent_score=s,
            )
        )
    return Dataset(records=records, d_in=config.d_in)


def rounding_error_bound(config: SynthConfig) -> float:
    """Worst-case |compute_score - latent_score| from fave rounding."""
    return math.log(2.0) / math.log(config.view_range[0])


def write_sidecar(config: SynthConfig, path: str | Path) -> None:
    """Record the generation config and mixing matrix next to a dataset."""
    payload = {
        "n": config.n,
        "d_in": config.d_in,
        "noise_sigma": config.noise_sigma,
        "seed": config.seed,
        "view_range": list(config.view_range),
        "rng": "numpy default_rng (PCG64)",
        "mixing_matrix": [[float(v) for v in row] for row in mixing_matrix(config)],
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
