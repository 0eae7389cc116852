"""Full-field reconstruction from point observations at a sensor placement.

Observations are raw readings. The basis mean at the sensor cells is
subtracted before solving ``Theta a = y - mean[gamma]`` and the full mean
is added back to ``Psi_r a``, so snapshots in ``mean + span(Psi_r)`` are
recovered exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, IllConditionedError

__all__ = [
    "MAX_CONDITION",
    "ObservationSet",
    "ReconstructionResult",
    "Interpolator",
    "condition_number",
    "build_theta",
    "reconstruct_snapshot",
    "reconstruct_series",
    "reconstruct_block",
    "mse",
]

MAX_CONDITION = 1e12


def _indices(placement):
    return np.asarray(getattr(placement, "indices", placement), dtype=np.intp)


def condition_number(theta):
    """2-norm condition number; ``inf`` for an exactly singular matrix."""
    s = np.linalg.svd(theta, compute_uv=False)
    if s.size == 0 or s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def build_theta(placement, basis):
    """Return ``(Theta, condition_number)`` with ``Theta = Psi_r[gamma, :]``."""
    idx = _indices(placement)
    if idx.size != basis.r:
        raise DimensionError(
            f"placement has {idx.size} sensors but basis rank is {basis.r}"
        )
    if idx.min() < 0 or idx.max() >= basis.m:
        raise DimensionError(f"sensor index out of range [0, {basis.m})")
    theta = basis.modes[idx, :]
    return theta, condition_number(theta)


class Interpolator:
    """LU-factorized interpolation system for one (placement, basis) pair.

    Raises :class:`IllConditionedError` when ``cond(Theta) > max_condition``.
    """

    def __init__(self, placement, basis, max_condition=MAX_CONDITION):
        self.indices = _indices(placement)
        self.basis = basis
        self.theta, self.condition_number = build_theta(self.indices, basis)
        if not self.condition_number <= max_condition:
            raise IllConditionedError(self.condition_number, max_condition)
        self._lu = la.lu_factor(self.theta, check_finite=False)
        self._mean_at = basis.mean[self.indices]

    def coefficients(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.indices.size:
            raise DimensionError(
                f"{y.shape[0]} observations for {self.indices.size} sensors"
            )
        rhs = y - (self._mean_at[:, None] if y.ndim == 2 else self._mean_at)
        return la.lu_solve(self._lu, rhs, check_finite=False)

    def reconstruct(self, y):
        """Return ``(field, coefficients)`` for one observation vector."""
        y = np.asarray(y, dtype=float)
        if y.ndim != 1:
            raise DimensionError("expected a 1-D observation vector")
        if not np.all(np.isfinite(y)):
            raise ValueError("observations must be finite")
        a = self.coefficients(y)
        return self.basis.modes @ a + self.basis.mean, a


@dataclass(frozen=True)
class ObservationSet:
    """Sensor readings ``Y`` (r x K, raw units) taken at ``placement``."""

    Y: np.ndarray
    placement: object

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape[0] != _indices(self.placement).size:
            raise DimensionError(
                f"{Y.shape[0]} observation rows for "
                f"{_indices(self.placement).size} sensors"
            )
        if not np.all(np.isfinite(Y)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "Y", Y)


@dataclass(frozen=True)
class ReconstructionResult:
    fields: np.ndarray
    coefficients: np.ndarray
    condition_number: float
    per_snapshot_mse: np.ndarray | None = None

    @property
    def mse(self):
        if self.per_snapshot_mse is None:
            return None
        return float(np.mean(self.per_snapshot_mse))


def reconstruct_snapshot(y, placement, basis):
    """Reconstruct one snapshot; returns ``(field, coefficients)``."""
    return Interpolator(placement, basis).reconstruct(y)


def reconstruct_series(obs, basis, truth=None):
    """Reconstruct every column of ``obs.Y`` with one shared factorization.

    If ``truth`` (m x K) is given, per-snapshot MSE is filled in.
    """
    interp = Interpolator(obs.placement, basis)
    K = obs.Y.shape[1]
    fields = np.empty((basis.m, K))
    coeffs = np.empty((basis.r, K))
    for j in range(K):
        fields[:, j], coeffs[:, j] = interp.reconstruct(obs.Y[:, j])
    per_snapshot = None
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != fields.shape:
            raise DimensionError(
                f"ground truth shape {truth.shape} != reconstruction {fields.shape}"
            )
        per_snapshot = np.mean((fields - truth) ** 2, axis=0)
    return ReconstructionResult(fields, coeffs, interp.condition_number, per_snapshot)


def reconstruct_block(data, placement, basis, max_condition=MAX_CONDITION):
    """Sample every column of a full field matrix at ``placement`` and
    reconstruct it, all columns in one solve. Used for scoring placements.
    """
    interp = Interpolator(placement, basis, max_condition)
    a = interp.coefficients(np.asarray(data)[interp.indices, :])
    return basis.modes @ a + basis.mean[:, None]


def mse(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))
