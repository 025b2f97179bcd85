"""SGD training of the encoder on streamed triplets.

Each step draws a fresh batch of accepted triplets, averages the combined
loss gradient over the batch (mean, not sum, so loss magnitudes compare
across batch sizes), and applies a plain gradient-descent update. The
learning rate starts at ``lr_init`` and is divided by ``lr_decay_factor``
whenever the windowed mean loss stops improving; training stops early once
the rate falls below ``lr_floor``. No momentum, no data augmentation:
features are consumed exactly as stored.

Determinism: a single master seed drives everything. Two child seeds are
derived from it (numpy SeedSequence order: encoder init first, then the
triplet stream), so identical dataset + config + seed reproduce the final
parameters bit for bit. The seed inside ``TrainConfig.sampler`` is
superseded by the derived child seed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import encoder
from .data_model import Dataset
from .errors import ConfigError, DivergenceError
from .loss import LossConfig
from .sampler import SamplerConfig, TripletSampler


@dataclass(frozen=True)
class TrainConfig:
    max_steps: int
    lr_init: float = 1e-3
    lr_decay_factor: float = 10.0
    lr_floor: float = 1e-6
    batch_size: int = 64
    plateau_window: int = 500
    plateau_patience: int = 3
    plateau_min_rel_improvement: float = 1e-3
    seed: int = 0
    hidden_dims: tuple[int, ...] = (64, 32)
    embed_dim: int = 16
    loss: LossConfig = field(default_factory=LossConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    def validate(self) -> None:
        if self.max_steps < 0:
            raise ConfigError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.lr_init < 0:
            raise ConfigError(f"lr_init must be >= 0, got {self.lr_init}")
        if self.lr_decay_factor <= 1:
            raise ConfigError(f"lr_decay_factor must be > 1, got {self.lr_decay_factor}")
        if self.lr_floor <= 0:
            raise ConfigError(f"lr_floor must be > 0, got {self.lr_floor}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.plateau_window < 1:
            raise ConfigError(f"plateau_window must be >= 1, got {self.plateau_window}")
        if self.plateau_patience < 1:
            raise ConfigError(f"plateau_patience must be >= 1, got {self.plateau_patience}")
        if self.plateau_min_rel_improvement <= 0:
            raise ConfigError("plateau_min_rel_improvement must be > 0")
        if any(h < 1 for h in self.hidden_dims) or self.embed_dim < 1:
            raise ConfigError("hidden_dims and embed_dim must be positive")
        self.sampler.validate()


@dataclass(frozen=True)
class WindowRecord:
    step: int
    mean_loss: float
    mean_le: float
    mean_ld: float
    lr: float
    acceptance_rate: float


@dataclass
class TrainLog:
    windows: list[WindowRecord] = field(default_factory=list)


def derive_seeds(seed: int) -> tuple[int, int]:
    """(encoder-init seed, sampler seed) derived from the master seed."""
    state = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def _batch_loss_grads(ea, ep, en, s_a, s_n, cfg: LossConfig):
    """Vectorized per-row losses and gradients wrt the three embedding rows.

    Row i reproduces ``loss.directional_triplet_loss`` on triplet i exactly.
    """
    dap = ea - ep
    dan = ea - en
    e_arg = cfg.margin_m + np.sum(dap * dap, axis=1) - np.sum(dan * dan, axis=1)
    le = np.maximum(e_arg, 0.0)
    act_e = (e_arg > 0.0)[:, None]
    g_ea = np.where(act_e, 2.0 * (en - ep), 0.0)
    g_ep = np.where(act_e, -2.0 * dap, 0.0)
    g_en = np.where(act_e, 2.0 * dan, 0.0)

    ld = np.zeros_like(le)
    if cfg.directional_enabled:
        sign = np.sign(s_n - s_a)
        norm_a = np.linalg.norm(ea, axis=1)
        norm_n = np.linalg.norm(en, axis=1)
        if cfg.literal_sign_form:
            arg = norm_a - norm_n + cfg.margin_md
            ld = np.where(sign != 0.0, sign * np.maximum(arg, 0.0), 0.0)
        else:
            arg = cfg.margin_md + sign * (norm_a - norm_n)
            ld = np.where(sign != 0.0, np.maximum(arg, 0.0), 0.0)
        active = (sign != 0.0) & (arg > 0.0)
        unit_a = np.divide(ea, norm_a[:, None], out=np.zeros_like(ea), where=norm_a[:, None] > 0)
        unit_n = np.divide(en, norm_n[:, None], out=np.zeros_like(en), where=norm_n[:, None] > 0)
        coeff = (sign * active)[:, None]
        g_ea = g_ea + coeff * unit_a
        g_en = g_en - coeff * unit_n
    return le, ld, g_ea, g_ep, g_en


class _PlateauSchedule:
    """Divide-on-plateau: decay when the windowed mean stalls for ``patience`` windows."""

    def __init__(self, config: TrainConfig):
        self.factor = config.lr_decay_factor
        self.threshold = config.plateau_min_rel_improvement
        self.patience = config.plateau_patience
        self.best = None
        self.streak = 0

    def update(self, lr: float, window_mean: float) -> float:
        if self.best is None or window_mean < self.best * (1.0 - self.threshold):
            self.best = window_mean
            self.streak = 0
            return lr
        self.streak += 1
        if self.streak >= self.patience:
            self.streak = 0
            return lr / self.factor
        return lr


def train(dataset: Dataset, config: TrainConfig) -> tuple[encoder.EncoderParams, TrainLog]:
    """Fit the encoder to a dataset's triplet stream.

    Raises:
        ConfigError: Invalid config or dataset smaller than 3 records.
        SamplerStarvationError: The triplet window admits no triplets.
        DivergenceError: A non-finite loss or gradient appeared.
    """
    config.validate()
    if len(dataset) < 3:
        raise ConfigError(f"training needs at least 3 records, got {len(dataset)}")

    init_seed, sampler_seed = derive_seeds(config.seed)
    layer_dims = [dataset.d_in, *config.hidden_dims, config.embed_dim]
    params = encoder.init(layer_dims, init_seed)

    scores = dataset.scores()
    features = dataset.feature_matrix()
    samp = TripletSampler(scores, dataclasses.replace(config.sampler, seed=sampler_seed))
    schedule = _PlateauSchedule(config)

    log = TrainLog()
    lr = config.lr_init
    win_total = win_le = win_ld = 0.0
    win_steps = 0
    win_proposed = win_accepted = 0

    def flush_window(step):
        nonlocal win_total, win_le, win_ld, win_steps, win_proposed, win_accepted
        rate = win_accepted / win_proposed if win_proposed else 0.0
        record = WindowRecord(
            step=step,
            mean_loss=win_total / win_steps,
            mean_le=win_le / win_steps,
            mean_ld=win_ld / win_steps,
            lr=lr,
            acceptance_rate=rate,
        )
        log.windows.append(record)
        win_total = win_le = win_ld = 0.0
        win_steps = 0
        win_proposed = win_accepted = 0
        return record

    for step in range(1, config.max_steps + 1):
        if lr < config.lr_floor:
            break
        proposed_before = samp.stats.proposed
        accepted_before = samp.stats.accepted
        a_idx, p_idx, n_idx, _, _ = samp.collect_indices(config.batch_size)
        win_proposed += samp.stats.proposed - proposed_before
        win_accepted += samp.stats.accepted - accepted_before

        batch_a = features[a_idx]
        batch_p = features[p_idx]
        batch_n = features[n_idx]
        emb_a = encoder.forward(params, batch_a)
        emb_p = encoder.forward(params, batch_p)
        emb_n = encoder.forward(params, batch_n)

        le, ld, g_ea, g_ep, g_en = _batch_loss_grads(
            emb_a, emb_p, emb_n, scores[a_idx], scores[n_idx], config.loss
        )
        mean_total = float(np.mean(le + ld))
        if not np.isfinite(mean_total):
            raise DivergenceError(step, lr)

        grads_a, _ = encoder.backward(params, batch_a, g_ea)
        grads_p, _ = encoder.backward(params, batch_p, g_ep)
        grads_n, _ = encoder.backward(params, batch_n, g_en)
        inv_b = 1.0 / config.batch_size
        for k in range(len(params.weights)):
            dw = (grads_a.weights[k] + grads_p.weights[k] + grads_n.weights[k]) * inv_b
            db = (grads_a.biases[k] + grads_p.biases[k] + grads_n.biases[k]) * inv_b
            if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
                raise DivergenceError(step, lr)
            params.weights[k] -= lr * dw
            params.biases[k] -= lr * db

        win_total += mean_total
        win_le += float(np.mean(le))
        win_ld += float(np.mean(ld))
        win_steps += 1

        if win_steps == config.plateau_window:
            record = flush_window(step)
            lr = schedule.update(lr, record.mean_loss)

    if win_steps:
        flush_window(step)
    return params, log


def write_train_log_csv(log: TrainLog, path: str | Path) -> None:
    """Write window records as CSV ``step,mean_loss,mean_le,mean_ld,lr,acceptance_rate``."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,mean_loss,mean_le,mean_ld,lr,acceptance_rate\n")
        for w in log.windows:
            fh.write(
                f"{w.step},{float(w.mean_loss)!r},{float(w.mean_le)!r},"
                f"{float(w.mean_ld)!r},{float(w.lr)!r},{float(w.acceptance_rate)!r}\n"
            )
