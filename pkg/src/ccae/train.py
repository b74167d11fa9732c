"""Stochastic training of an autoencoder under representation constraints."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .constraints import ConstraintSet, accumulate_bottleneck_gradients, sample_constraints

log = logging.getLogger(__name__)

DATA_STREAM = 6
CONSTRAINT_STREAM = 7


class TrainingError(RuntimeError):
    pass


@dataclass
class LossHistory:
    """Epoch 0 is the untrained network evaluated on the full data and constraint set."""

    epoch: list[int] = field(default_factory=list)
    reconstruction: list[float] = field(default_factory=list)
    penalty: list[float] = field(default_factory=list)

    def append(self, epoch: int, reconstruction: float, penalty: float) -> None:
        self.epoch.append(epoch)
        self.reconstruction.append(reconstruction)
        self.penalty.append(penalty)


def _mean_penalty(net: nn.Network, x: np.ndarray, constraints: ConstraintSet, lambdas) -> float:
    if len(constraints) == 0:
        return 0.0
    idx = constraints.referenced()
    rows = np.full(len(x), -1, dtype=np.int64)
    rows[idx] = np.arange(len(idx))
    _, total = accumulate_bottleneck_gradients(constraints, nn.encode(net, x[idx]), lambdas, rows)
    return total / len(constraints)


def _reconstruction(net: nn.Network, x: np.ndarray) -> float:
    recon, _, _ = nn.forward(net, x)
    return float(np.sum((recon - x) ** 2) / len(x))


def train_constrained_ae(features, constraints: ConstraintSet, net: nn.Network, config: nn.TrainConfig,
                         use_constraints: bool = True):
    """Train ``net`` in place and return ``(net, embedding, history)``.

    Each step pairs one shuffled data batch (reconstruction gradient) with
    one batch of constraints drawn uniformly with replacement. The penalty
    enters as ``lambda_kind * weight * penalty`` averaged over the
    constraint batch, and its gradient reaches the encoder through a
    separate forward pass over the datapoints the batch references.
    ``use_constraints=False`` disables that hook entirely.
    """
    config.validate()
    x = np.asarray(getattr(features, "entries", features), dtype=np.float64)
    n = len(x)
    constraints.validate(n)
    active = use_constraints and len(constraints) > 0
    lambdas = config.lambdas

    data_rng = np.random.default_rng([config.seed, DATA_STREAM])
    con_rng = np.random.default_rng([config.seed, CONSTRAINT_STREAM])
    state = nn.init_optimizer_state(net, config)
    rows = np.full(n, -1, dtype=np.int64)

    history = LossHistory()
    history.append(0, _reconstruction(net, x), _mean_penalty(net, x, constraints, lambdas) if active else 0.0)

    bsz = config.data_batch_size
    for epoch in range(1, config.epochs + 1):
        perm = data_rng.permutation(n)
        rec_sum, pen_sum, steps = 0.0, 0.0, 0
        for start in range(0, n, bsz):
            batch = x[perm[start : start + bsz]]
            loss, grads = nn.loss_and_gradients(net, batch)
            if active:
                cbatch = sample_constraints(constraints, config.constraint_batch_size, con_rng)
                idx = cbatch.referenced()
                rows[idx] = np.arange(len(idx))
                y = nn.encode(net, x[idx])
                gy, total = accumulate_bottleneck_gradients(cbatch, y, lambdas, rows)
                rows[idx] = -1
                scale = 1.0 / len(cbatch)
                cgrads = nn.encoder_gradients(net, x[idx], gy * scale)
                grads = [g + c for g, c in zip(grads, cgrads)]
                pen_sum += total * scale
            nn.optimizer_step(net, grads, state, config)
            rec_sum += loss
            steps += 1
        rec, pen = rec_sum / steps, pen_sum / steps
        if not (np.isfinite(rec) and np.isfinite(pen)):
            raise TrainingError(f"training diverged at epoch {epoch} (reconstruction={rec}, penalty={pen})")
        history.append(epoch, rec, pen)
        if epoch % 50 == 0 or epoch == config.epochs:
            log.info("epoch %d: reconstruction %.5f penalty %.5f", epoch, rec, pen)

    embedding = nn.encode(net, x)
    return net, embedding, history
