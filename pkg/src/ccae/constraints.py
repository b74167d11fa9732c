"""Pairwise representation constraints and their generalized gradients.

Four kinds of constraint tie a representation ``y_i`` either to a fixed
anchor vector (absolute: FAD, MAD) or to another learned representation
``y_j`` (relative: FRD, MRD)::

    FAD / FRD   (||y_i - y_j|| - d)^2
    MAD / MRD   max(||y_i - y_j|| - d, 0)^2

At ``y_i == y_j`` the gradient is taken to be zero, which is an element of
the generalized gradient and keeps satisfied anchors at a fixed point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("FAD", "FRD", "MAD", "MRD")
ABSOLUTE = frozenset({"FAD", "MAD"})
MAXIMUM = frozenset({"MAD", "MRD"})
_KIND_CODE = {k: n for n, k in enumerate(KINDS)}


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    kind: str
    i: int
    j: int | None = None
    anchor: tuple[float, ...] | None = None
    target: float = 0.0
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConstraintError(f"unknown constraint kind {self.kind!r}")
        if self.target < 0 or self.weight < 0:
            raise ConstraintError("target distance and weight must be nonnegative")
        if self.kind in ABSOLUTE:
            if self.anchor is None or self.j is not None:
                raise ConstraintError(f"{self.kind} needs an anchor vector and no j")
        else:
            if self.j is None or self.anchor is not None:
                raise ConstraintError(f"{self.kind} needs an index j and no anchor")
            if self.j == self.i:
                raise ConstraintError(f"{self.kind} needs j != i")

    @property
    def is_absolute(self) -> bool:
        return self.kind in ABSOLUTE


def _operands(c: Constraint, y_i, y_j):
    y_i = np.asarray(y_i, dtype=np.float64)
    if c.is_absolute:
        if y_j is not None:
            raise ConstraintError(f"{c.kind} takes its partner from the anchor, not y_j")
        other = np.asarray(c.anchor, dtype=np.float64)
    else:
        if y_j is None:
            raise ConstraintError(f"{c.kind} needs y_j")
        other = np.asarray(y_j, dtype=np.float64)
    if other.shape != y_i.shape:
        raise ConstraintError(f"operand shapes differ: {y_i.shape} vs {other.shape}")
    return y_i - other


def _residual(kind: str, dist, target):
    r = dist - target
    if kind in MAXIMUM:
        r = np.maximum(r, 0.0)
    return r


def penalty(c: Constraint, y_i, y_j=None) -> float:
    delta = _operands(c, y_i, y_j)
    r = _residual(c.kind, np.linalg.norm(delta), c.target)
    return float(r * r)


def penalty_gradient(c: Constraint, y_i, y_j=None):
    """Return ``(grad_y_i, grad_y_j)``; ``grad_y_j`` is None for absolute kinds."""
    delta = _operands(c, y_i, y_j)
    dist = np.linalg.norm(delta)
    r = _residual(c.kind, dist, c.target)
    if dist == 0.0 or r == 0.0:
        g = np.zeros_like(delta)
    else:
        g = (2.0 * r / dist) * delta
    return g, (None if c.is_absolute else -g)


class ConstraintSet:
    """Column-stored collection of constraints.

    ``j`` is -1 for absolute kinds and ``anchors`` rows are NaN for relative
    kinds, so a whole batch can be evaluated with array operations.
    """

    def __init__(self, kinds, i, j, anchors, targets, weights):
        self.kinds = np.asarray(kinds, dtype=np.int8).reshape(-1)
        self.i = np.asarray(i, dtype=np.int64).reshape(-1)
        self.j = np.asarray(j, dtype=np.int64).reshape(-1)
        self.targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        anchors = np.asarray(anchors, dtype=np.float64)
        self.anchors = anchors.reshape(len(self.kinds), -1) if anchors.size else np.zeros((len(self.kinds), 2))
        n = len(self.kinds)
        if not all(len(a) == n for a in (self.i, self.j, self.targets, self.weights, self.anchors)):
            raise ConstraintError("constraint columns have different lengths")

    @classmethod
    def empty(cls, dim: int = 2) -> ConstraintSet:
        return cls([], [], [], np.zeros((0, dim)), [], [])

    @classmethod
    def from_constraints(cls, constraints, dim: int = 2) -> ConstraintSet:
        constraints = list(constraints)
        if not constraints:
            return cls.empty(dim)
        anchors = np.full((len(constraints), dim), np.nan)
        for row, c in enumerate(constraints):
            if c.anchor is not None:
                anchors[row] = c.anchor
        return cls(
            [_KIND_CODE[c.kind] for c in constraints],
            [c.i for c in constraints],
            [-1 if c.j is None else c.j for c in constraints],
            anchors,
            [c.target for c in constraints],
            [c.weight for c in constraints],
        )

    @classmethod
    def concat(cls, *sets: ConstraintSet) -> ConstraintSet:
        sets = [s for s in sets if len(s)] or list(sets[:1])
        return cls(
            np.concatenate([s.kinds for s in sets]),
            np.concatenate([s.i for s in sets]),
            np.concatenate([s.j for s in sets]),
            np.vstack([s.anchors for s in sets]),
            np.concatenate([s.targets for s in sets]),
            np.concatenate([s.weights for s in sets]),
        )

    def __len__(self) -> int:
        return len(self.kinds)

    def __getitem__(self, rows) -> ConstraintSet:
        rows = np.asarray(rows)
        return ConstraintSet(
            self.kinds[rows], self.i[rows], self.j[rows], self.anchors[rows], self.targets[rows], self.weights[rows]
        )

    def constraint(self, row: int) -> Constraint:
        kind = KINDS[self.kinds[row]]
        absolute = kind in ABSOLUTE
        return Constraint(
            kind=kind,
            i=int(self.i[row]),
            j=None if absolute else int(self.j[row]),
            anchor=tuple(float(v) for v in self.anchors[row]) if absolute else None,
            target=float(self.targets[row]),
            weight=float(self.weights[row]),
        )

    def __iter__(self):
        return (self.constraint(r) for r in range(len(self)))

    def counts(self) -> dict[str, int]:
        return {k: int(np.sum(self.kinds == code)) for k, code in _KIND_CODE.items()}

    def referenced(self) -> np.ndarray:
        """Sorted unique datapoint indices touched by the set."""
        return np.unique(np.concatenate([self.i, self.j[self.j >= 0]]))

    def validate(self, num_points: int) -> None:
        if len(self) == 0:
            return
        if self.i.min() < 0 or self.i.max() >= num_points:
            raise ConstraintError("constraint index i out of range")
        rel = self.j >= 0
        if np.any(self.j[rel] >= num_points):
            raise ConstraintError("constraint index j out of range")
        is_abs = np.isin(self.kinds, [_KIND_CODE["FAD"], _KIND_CODE["MAD"]])
        if np.any(is_abs == rel):
            raise ConstraintError("absolute kinds must have j = -1 and relative kinds j >= 0")


def build_anchor_constraints(anchor_indices, true_positions, weight: float = 1.0,
                             origin=(0.0, 0.0), scale: float = 1.0) -> ConstraintSet:
    """One FAD constraint with zero target per anchor, pinned at its true (x, y).

    The anchor vector is ``(position[:2] - origin) / scale``; the defaults
    keep representation units in meters.
    """
    idx = np.asarray(anchor_indices, dtype=np.int64).reshape(-1)
    pos = np.asarray(true_positions, dtype=np.float64)
    if len(idx) == 0:
        return ConstraintSet.empty()
    if idx.min() < 0 or idx.max() >= len(pos):
        raise ConstraintError("anchor index out of range")
    anchors = (pos[idx, :2] - np.asarray(origin, dtype=np.float64)) / scale
    n = len(idx)
    return ConstraintSet(
        np.full(n, _KIND_CODE["FAD"]), idx, np.full(n, -1), anchors, np.zeros(n), np.full(n, float(weight))
    )


def build_trajectory_constraints(trajectory_indices, d_max: float, lag_max: int = 1,
                                 weight: float = 1.0) -> ConstraintSet:
    """MRD constraints between trajectory samples up to ``lag_max`` steps apart.

    A pair ``lag`` steps apart may be at most ``lag * d_max`` apart.
    """
    traj = np.asarray(trajectory_indices, dtype=np.int64).reshape(-1)
    if len(traj) < 2:
        raise ConstraintError("need at least two trajectory points")
    if d_max <= 0:
        raise ConstraintError("d_max must be positive")
    if lag_max < 1:
        raise ConstraintError("lag_max must be >= 1")
    i, j, targets = [], [], []
    for lag in range(1, min(lag_max, len(traj) - 1) + 1):
        i.append(traj[:-lag])
        j.append(traj[lag:])
        targets.append(np.full(len(traj) - lag, lag * d_max))
    i, j, targets = np.concatenate(i), np.concatenate(j), np.concatenate(targets)
    n = len(i)
    return ConstraintSet(
        np.full(n, _KIND_CODE["MRD"]), i, j, np.full((n, 2), np.nan), targets, np.full(n, float(weight))
    )


def sample_constraints(constraints: ConstraintSet, batch_size: int, rng: np.random.Generator) -> ConstraintSet:
    """Uniform draw with replacement; an empty set yields an empty batch."""
    if len(constraints) == 0:
        return constraints
    return constraints[rng.integers(0, len(constraints), size=batch_size)]


def accumulate_bottleneck_gradients(batch: ConstraintSet, embeddings: np.ndarray,
                                    lambdas: dict[str, float], rows: np.ndarray | None = None):
    """Weighted penalty total and its gradient with respect to ``embeddings``.

    ``rows`` maps datapoint index to row of ``embeddings`` (a lookup array of
    length N, entries -1 where absent); by default row ``n`` is datapoint ``n``.
    Returns ``(grad, total)`` with ``grad`` shaped like ``embeddings``.
    """
    y = np.asarray(embeddings, dtype=np.float64)
    grad = np.zeros_like(y)
    if len(batch) == 0:
        return grad, 0.0
    ri = batch.i if rows is None else rows[batch.i]
    rel = batch.j >= 0
    rj = np.where(rel, batch.j, 0) if rows is None else np.where(rel, rows[np.where(rel, batch.j, 0)], 0)
    if np.any(ri < 0) or np.any(rj[rel] < 0):
        raise ConstraintError("a referenced datapoint has no embedding")

    other = np.where(rel[:, None], y[rj], batch.anchors)
    delta = y[ri] - other
    dist = np.sqrt(np.sum(delta * delta, axis=1))
    r = dist - batch.targets
    is_max = np.isin(batch.kinds, [_KIND_CODE["MAD"], _KIND_CODE["MRD"]])
    r = np.where(is_max, np.maximum(r, 0.0), r)
    lam = np.array([lambdas.get(k, 0.0) for k in KINDS])[batch.kinds] * batch.weights
    total = float(np.sum(lam * r * r))

    safe = np.where(dist > 0, dist, 1.0)
    coef = np.where((dist > 0) & (r != 0), 2.0 * lam * r / safe, 0.0)
    g = coef[:, None] * delta
    np.add.at(grad, ri, g)
    np.add.at(grad, rj[rel], -g[rel])
    return grad, total
