"""Model-based placement scoring with a linear state-space model.

Field values follow ``v = S x[t] + noise`` with latent coefficients
``x[t+1] = A x[t] + w[t]``. A placement is scored by running the Kalman
error-covariance recursion and taking the largest eigenvalue of the final
prior covariance; lower is better.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, SingularInnovationError
from .fielddata import _format_float, read_matrix, write_matrix

__all__ = [
    "StateSpaceModel",
    "fit_transition",
    "fit_state_space",
    "measurement_update",
    "time_update",
    "kalman_prior_update",
    "steady_prior",
    "gamma_from_covariances",
    "gamma_criterion",
    "gamma_placement",
    "save_model",
    "load_model",
]

_SYM_TOL = 1e-10


def _symmetrize(P):
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class StateSpaceModel:
    """Transition ``A`` (r x r), spatial map ``S`` (m x r), scalar
    observation-noise variance ``Rv`` and process-noise covariance ``Rw``.
    """

    A: np.ndarray
    S: np.ndarray
    Rv: float
    Rw: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        Rw = np.atleast_2d(np.asarray(self.Rw, dtype=float))
        r = A.shape[0]
        if A.shape != (r, r) or Rw.shape != (r, r) or S.shape[1] != r:
            raise DimensionError(
                f"inconsistent shapes A{A.shape}, S{S.shape}, Rw{Rw.shape}"
            )
        if self.Rv < 0:
            raise ValueError("Rv must be >= 0")
        if np.max(np.abs(Rw - Rw.T), initial=0.0) > _SYM_TOL:
            raise ValueError("Rw must be symmetric")
        if np.linalg.eigvalsh(_symmetrize(Rw)).min() < -_SYM_TOL:
            raise ValueError("Rw must be positive semidefinite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Rw", Rw)
        object.__setattr__(self, "Rv", float(self.Rv))

    @property
    def r(self):
        return self.A.shape[0]


def fit_transition(coefficients):
    """Least-squares ``A`` and residual covariance ``Rw`` from an (r, M) series.

    ``A`` minimizes ``sum_t ||x[t+1] - A x[t]||^2``; ``Rw`` is the mean outer
    product of the residuals (the noise model is zero-mean).
    """
    X = np.atleast_2d(np.asarray(coefficients, dtype=float))
    r, M = X.shape
    if M < r + 2:
        raise ValueError(f"need at least r + 2 = {r + 2} snapshots, got {M}")
    past, future = X[:, :-1], X[:, 1:]
    if np.linalg.matrix_rank(past) < r:
        raise np.linalg.LinAlgError(
            "rank-deficient regression: coefficient history does not span r dims"
        )
    At, *_ = np.linalg.lstsq(past.T, future.T, rcond=None)
    A = At.T
    resid = future - A @ past
    Rw = _symmetrize(resid @ resid.T / resid.shape[1])
    return A, Rw


def fit_state_space(b, Rv=None):
    """Fit the state-space model on the temporal coefficients of a basis.

    ``Rv`` defaults to ``0.01 * mean(diag(Rw))``.
    """
    A, Rw = fit_transition(b.coefficients())
    if Rv is None:
        Rv = 0.01 * float(np.mean(np.diag(Rw)))
    return StateSpaceModel(A, np.array(b.modes), Rv, Rw)


def _indices(p):
    return list(getattr(p, "indices", p))


def measurement_update(model, P, p):
    """Posterior covariance after observing all cells of ``p`` at once."""
    P = np.asarray(P, dtype=float)
    idx = _indices(p)
    if idx and max(idx) >= model.S.shape[0]:
        raise DimensionError(f"sensor index {max(idx)} out of range")
    H = model.S[idx, :]
    PHt = P @ H.T
    innov = H @ PHt + model.Rv * np.eye(len(idx))
    if len(idx) == 0:
        return P.copy()
    if np.linalg.cond(innov) > 1e12:
        raise SingularInnovationError(
            "innovation covariance is singular; use Rv > 0"
        )
    gain = np.linalg.solve(innov, PHt.T).T
    return _symmetrize(P - gain @ PHt.T)


def time_update(model, P_post):
    return _symmetrize(model.A @ P_post @ model.A.T + model.Rw)


def kalman_prior_update(model, P_prior, p):
    """One measurement update at ``p`` followed by one time update."""
    return time_update(model, measurement_update(model, P_prior, p))


def steady_prior(model, p, iterations, tol=1e-10, P0=None):
    """Iterate the prior recursion from ``P0`` (default identity).

    Stops after ``iterations`` steps or once the largest entry change is
    below ``tol``.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    P = np.eye(model.r) if P0 is None else np.asarray(P0, dtype=float)
    for _ in range(iterations):
        nxt = kalman_prior_update(model, P, p)
        done = np.max(np.abs(nxt - P)) < tol
        P = nxt
        if done:
            break
    return P


def gamma_from_covariances(covariances):
    """Largest eigenvalue over a collection of covariance matrices."""
    return max(float(np.linalg.eigvalsh(_symmetrize(np.atleast_2d(P))).max())
               for P in covariances)


def gamma_criterion(model, placements, iterations=1000):
    """Worst-case (over ``placements``) largest eigenvalue of the prior."""
    if not placements:
        raise ValueError("need at least one placement")
    return gamma_from_covariances(
        steady_prior(model, p, iterations) for p in placements
    )


def gamma_placement(model, cs, r, iterations=1000, max_subsets=10**5):
    """Exhaustive search for the r-subset of ``cs`` with minimum gamma.

    Lexicographically first subset wins ties.
    """
    locs = list(getattr(cs, "locations", cs))
    n = math.comb(len(locs), r)
    if n == 0 or n > max_subsets:
        raise ValueError(f"C({len(locs)}, {r}) = {n} subsets outside (0, {max_subsets}]")
    best, best_gamma = None, math.inf
    for subset in itertools.combinations(locs, r):
        g = gamma_criterion(model, [subset], iterations)
        if g < best_gamma:
            best, best_gamma = subset, g
    return best, best_gamma


MODEL_FILES = {"A": "model_A.txt", "S": "model_S.txt", "Rw": "model_Rw.txt"}
MODEL_SIDECAR = "model.txt"


def save_model(model, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for key, name in MODEL_FILES.items():
        write_matrix(directory / name, getattr(model, key))
    (directory / MODEL_SIDECAR).write_text(f"Rv={_format_float(model.Rv)}\n",
                                           encoding="ascii")


def load_model(directory):
    directory = Path(directory)
    sidecar = directory / MODEL_SIDECAR
    Rv = None
    with open(sidecar, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            key, sep, val = line.strip().partition("=")
            if sep and key.strip() == "Rv":
                try:
                    Rv = float(val)
                except ValueError:
                    raise FormatError(f"bad Rv value {val!r}", sidecar, lineno)
    if Rv is None:
        raise FormatError("missing 'Rv=' entry", sidecar)
    mats = {key: read_matrix(directory / name) for key, name in MODEL_FILES.items()}
    return StateSpaceModel(mats["A"], mats["S"], Rv, mats["Rw"])
