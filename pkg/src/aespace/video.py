"""Frame-sequence scoring, scalar Kalman smoothing, and peak extraction.

Frames arrive as feature vectors in temporal order and are scored by the
embedding norm. The raw score signal is smoothed by a causal scalar Kalman
filter with a constant-position state model (the simplest model that
smooths a scalar), then key frames are picked at the smoothed signal's
peaks. No backward smoothing pass: each output depends only on frames seen
so far, matching live processing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import encoder
from .data_model import _parse_line
from .errors import ConfigError, EmptyInputError, FormatError, ShapeError


@dataclass(frozen=True)
class KalmanConfig:
    """Scalar filter noise levels and initialization.

    ``x0`` of None means the state starts at the first measurement;
    otherwise the state starts at the given value. ``p0`` is the initial
    variance in both policies.
    """

    q: float = 1e-4
    r: float = 1e-2
    p0: float = 1.0
    x0: float | None = None

    def validate(self) -> None:
        if self.q < 0:
            raise ConfigError(f"process noise q must be >= 0, got {self.q}")
        if self.r <= 0:
            raise ConfigError(f"measurement noise r must be > 0, got {self.r}")
        if self.p0 <= 0:
            raise ConfigError(f"initial variance p0 must be > 0, got {self.p0}")


@dataclass(frozen=True)
class PeakConfig:
    min_separation: int = 1
    min_prominence: float = 0.0

    def validate(self) -> None:
        if self.min_separation < 1:
            raise ConfigError(f"min_separation must be >= 1, got {self.min_separation}")
        if self.min_prominence < 0:
            raise ConfigError(f"min_prominence must be >= 0, got {self.min_prominence}")


class KalmanFilter:
    """Scalar random-walk filter; exposes state ``x``, variance ``p``, gain ``k``."""

    def __init__(self, config: KalmanConfig, first_measurement: float):
        config.validate()
        self.config = config
        self.x = first_measurement if config.x0 is None else config.x0
        self.p = config.p0
        self.k = 0.0

    def step(self, z: float) -> float:
        """Predict then update with measurement z; returns the new estimate."""
        self.p += self.config.q
        self.k = self.p / (self.p + self.config.r)
        self.x += self.k * (z - self.x)
        self.p *= 1.0 - self.k
        return self.x


def score_sequence(params: encoder.EncoderParams, frames) -> list[float]:
    """Projection score of each frame, in input order.

    Args:
        params: Trained encoder.
        frames: Sequence of feature vectors (or an (n, d_in) array).

    Raises:
        ShapeError: A frame's length does not match the encoder input.
    """
    try:
        frames = np.asarray(frames, dtype=np.float64)
    except ValueError as exc:
        raise ShapeError(f"frames are not a uniform stack of vectors: {exc}") from exc
    if frames.size == 0:
        return []
    if frames.ndim != 2 or frames.shape[1] != params.d_in:
        raise ShapeError(f"frame array shape {frames.shape} incompatible with d_in={params.d_in}")
    phis = encoder.forward(params, frames)
    return [float(v) for v in np.linalg.norm(phis, axis=1)]


def kalman_smooth(series, config: KalmanConfig = KalmanConfig()) -> list[float]:
    """Causal smoothing of a scalar series; output length equals input length.

    Raises:
        EmptyInputError: The series is empty.
    """
    series = [float(z) for z in series]
    if not series:
        raise EmptyInputError("kalman_smooth needs a non-empty series")
    filt = KalmanFilter(config, series[0])
    return [filt.step(z) for z in series]


def peak_prominences(series: np.ndarray, peaks: list[int]) -> list[float]:
    """Prominence of each peak index in ``series``.

    On each side, scan to the nearest strictly higher value (or the signal
    border); the base is the minimum over that stretch. Prominence is the
    peak height minus the higher of the two bases.
    """
    proms = []
    for i in peaks:
        height = series[i]
        left = i
        left_min = height
        while left > 0 and series[left - 1] <= height:
            left -= 1
            left_min = min(left_min, series[left])
        right = i
        right_min = height
        while right < series.size - 1 and series[right + 1] <= height:
            right += 1
            right_min = min(right_min, series[right])
        proms.append(float(height - max(left_min, right_min)))
    return proms


def detect_peaks(series, config: PeakConfig = PeakConfig()) -> list[int]:
    """Indices of prominent local maxima, thinned to a minimum separation.

    A candidate is an interior strict local maximum; an interior plateau
    bounded by lower values on both sides yields its leftmost index.
    Endpoints are never peaks. Candidates below ``min_prominence`` are
    dropped, then the rest are kept greedily in descending height (ties by
    ascending index) subject to pairwise distance >= ``min_separation``.
    The surviving indices are returned ascending.
    """
    config.validate()
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise EmptyInputError("detect_peaks needs a non-empty series")

    candidates = []
    i = 1
    n = series.size
    while i < n - 1:
        if series[i] > series[i - 1]:
            j = i
            while j < n - 1 and series[j + 1] == series[i]:
                j += 1
            if j < n - 1 and series[j + 1] < series[i]:
                candidates.append(i)
            i = j + 1
        else:
            i += 1

    proms = peak_prominences(series, candidates)
    candidates = [c for c, pr in zip(candidates, proms) if pr >= config.min_prominence]

    kept: list[int] = []
    for c in sorted(candidates, key=lambda c: (-series[c], c)):
        if all(abs(c - k) >= config.min_separation for k in kept):
            kept.append(c)
    return sorted(kept)


def load_frames(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Load frame records (metadata lines; views/faves optional) in file order.

    Returns:
        (ids, features) with features shaped (n_frames, d_in).

    Raises:
        ParseError: A line is structurally invalid.
        FormatError: Feature lengths are inconsistent.
    """
    path = Path(path)
    ids: list[str] = []
    features: list[np.ndarray] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = _parse_line(line, line_number, require_counts=False)
            if features and record.features.size != features[0].size:
                raise FormatError(
                    f"line {line_number}: feature length {record.features.size} "
                    f"!= {features[0].size} established earlier"
                )
            ids.append(record.id)
            features.append(record.features)
    if not features:
        return [], np.empty((0, 0))
    return ids, np.stack(features)


def write_frame_csv(
    ids: list[str],
    raw_scores: list[float],
    smoothed_scores: list[float],
    peaks: list[int],
    path: str | Path,
) -> None:
    """Write per-frame results as CSV ``frame,raw_score,smoothed_score,is_peak``."""
    peak_set = set(peaks)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("frame,raw_score,smoothed_score,is_peak\n")
        for i, (frame_id, raw, smooth) in enumerate(zip(ids, raw_scores, smoothed_scores)):
            fh.write(f"{frame_id},{float(raw)!r},{float(smooth)!r},{int(i in peak_set)}\n")
