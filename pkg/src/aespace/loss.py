"""Triplet loss, directional norm term, and their exact gradients.

Per triplet (anchor a, positive p, negative n) of embeddings:

  triplet term      l_e = [m + |a - p|^2 - |a - n|^2]+      (squared distances)
  directional term  l_d, default hinge form:
        score(n) > score(a):  [|a| - |n| + md]+
        score(n) < score(a):  [|n| - |a| + md]+
        tie:                   0
  combined          total = l_e + l_d

The hinge form is bounded below and pushes the norm of the higher-scored
embedding above the lower-scored one by md regardless of which role it
plays. The literal form sign(score(n) - score(a)) * [|a| - |n| + md]+ is
kept behind a flag; with a negative sign it is unbounded below (minimizing
it rewards growing |a| without limit), so it is for comparison runs only.

Subgradient conventions: a hinge at its kink contributes 0, and the
gradient of |x| at x = 0 is the zero vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class LossConfig:
    margin_m: float = 0.2
    margin_md: float = 0.1
    directional_enabled: bool = True
    literal_sign_form: bool = False


@dataclass
class TripletLossResult:
    """Loss values and the exact gradients wrt the three embeddings.

    ``grad_p`` never receives a directional contribution; the directional
    term depends only on the anchor and negative embeddings.
    """

    l_e: float
    l_d: float
    total: float
    grad_a: np.ndarray
    grad_p: np.ndarray
    grad_n: np.ndarray


def _check_same_shape(*vectors):
    dims = {np.asarray(v).shape for v in vectors}
    if len(dims) != 1:
        raise ShapeError(f"embedding shapes differ: {sorted(dims)}")


def distance(phi_i: np.ndarray, phi_j: np.ndarray) -> float:
    """Euclidean distance between two embeddings."""
    phi_i = np.asarray(phi_i, dtype=np.float64)
    phi_j = np.asarray(phi_j, dtype=np.float64)
    _check_same_shape(phi_i, phi_j)
    return float(np.linalg.norm(phi_i - phi_j))


def triplet_loss(phi_a, phi_p, phi_n, m: float) -> float:
    """Hinge on squared distances: [m + |a-p|^2 - |a-n|^2]+."""
    phi_a = np.asarray(phi_a, dtype=np.float64)
    phi_p = np.asarray(phi_p, dtype=np.float64)
    phi_n = np.asarray(phi_n, dtype=np.float64)
    _check_same_shape(phi_a, phi_p, phi_n)
    d_ap = float(np.sum((phi_a - phi_p) ** 2))
    d_an = float(np.sum((phi_a - phi_n) ** 2))
    return max(0.0, m + d_ap - d_an)


def directional_loss(
    phi_a, phi_n, score_a: float, score_n: float, md: float, literal: bool = False
) -> float:
    """Norm-ordering term between the anchor and negative embeddings.

    See the module docstring for the hinge and literal variants. Returns 0
    on a score tie in both forms.
    """
    phi_a = np.asarray(phi_a, dtype=np.float64)
    phi_n = np.asarray(phi_n, dtype=np.float64)
    _check_same_shape(phi_a, phi_n)
    sign = float(np.sign(score_n - score_a))
    if sign == 0.0:
        return 0.0
    norm_a = float(np.linalg.norm(phi_a))
    norm_n = float(np.linalg.norm(phi_n))
    if literal:
        return sign * max(0.0, norm_a - norm_n + md)
    return max(0.0, md + sign * (norm_a - norm_n))


def directional_triplet_loss(
    phi_a, phi_p, phi_n, score_a: float, score_n: float, config: LossConfig
) -> TripletLossResult:
    """Combined loss and its exact gradients wrt each embedding."""
    phi_a = np.asarray(phi_a, dtype=np.float64)
    phi_p = np.asarray(phi_p, dtype=np.float64)
    phi_n = np.asarray(phi_n, dtype=np.float64)
    _check_same_shape(phi_a, phi_p, phi_n)

    d_ap = float(np.sum((phi_a - phi_p) ** 2))
    d_an = float(np.sum((phi_a - phi_n) ** 2))
    e_arg = config.margin_m + d_ap - d_an
    l_e = max(0.0, e_arg)

    grad_a = np.zeros_like(phi_a)
    grad_p = np.zeros_like(phi_p)
    grad_n = np.zeros_like(phi_n)
    if e_arg > 0.0:
        grad_a += 2.0 * (phi_n - phi_p)
        grad_p += -2.0 * (phi_a - phi_p)
        grad_n += 2.0 * (phi_a - phi_n)

    l_d = 0.0
    if config.directional_enabled:
        sign = float(np.sign(score_n - score_a))
        if sign != 0.0:
            norm_a = float(np.linalg.norm(phi_a))
            norm_n = float(np.linalg.norm(phi_n))
            if config.literal_sign_form:
                arg = norm_a - norm_n + config.margin_md
                l_d = sign * max(0.0, arg)
                active = arg > 0.0
            else:
                arg = config.margin_md + sign * (norm_a - norm_n)
                l_d = max(0.0, arg)
                active = arg > 0.0
            if active:
                # d|x|/dx = x/|x|, zero vector at the origin
                if norm_a > 0.0:
                    grad_a += sign * phi_a / norm_a
                if norm_n > 0.0:
                    grad_n += -sign * phi_n / norm_n

    return TripletLossResult(
        l_e=l_e,
        l_d=l_d,
        total=l_e + l_d,
        grad_a=grad_a,
        grad_p=grad_p,
        grad_n=grad_n,
    )
