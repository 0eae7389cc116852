"""Sensor placement: measurement operators, scoring and optimizers.

The optimizer is a randomized swap search. Each iteration replaces one
uniformly chosen sensor with a uniformly chosen unused candidate and keeps
the swap only if it lowers the training reconstruction MSE *and* a uniform
draw falls at or below the acceptance probability ``rho``. Worse swaps are
never taken, so the best-so-far error trace is non-increasing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, IllConditionedError
from .reconstruct import MAX_CONDITION, condition_number, mse, reconstruct_block

__all__ = [
    "Placement",
    "CandidateSet",
    "AnnealConfig",
    "canonical_matrix",
    "sample",
    "placement_mse",
    "random_placement",
    "optimize_placement",
    "qdeim_placement",
    "brute_force_placement",
    "placement_condition",
    "save_placement",
    "load_placement",
    "save_trace",
]


@dataclass(frozen=True)
class Placement:
    """Ordered, distinct 0-based row indices of the sensor cells."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in np.asarray(self.indices).reshape(-1))
        if not idx:
            raise ValueError("a placement needs at least one sensor")
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate sensor indices in {idx}")
        if min(idx) < 0:
            raise DimensionError("sensor indices must be >= 0")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def check(self, m):
        if max(self.indices) >= m:
            raise DimensionError(
                f"sensor index {max(self.indices)} out of range [0, {m})"
            )
        return self


@dataclass(frozen=True)
class CandidateSet:
    """Cells eligible to host a sensor, stored sorted."""

    locations: tuple

    def __post_init__(self):
        locs = tuple(sorted({int(i) for i in np.asarray(self.locations).reshape(-1)}))
        if not locs:
            raise ValueError("candidate set is empty")
        if locs[0] < 0:
            raise DimensionError("candidate indices must be >= 0")
        object.__setattr__(self, "locations", locs)

    @classmethod
    def all_cells(cls, m):
        return cls(tuple(range(m)))

    def __len__(self):
        return len(self.locations)

    def check(self, m):
        if self.locations[-1] >= m:
            raise DimensionError(
                f"candidate {self.locations[-1]} out of range [0, {m})"
            )
        return self


@dataclass(frozen=True)
class AnnealConfig:
    iterations: int = 1000
    accept_probability: float = 0.9
    seed: int = 0
    init: str = "random"

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.accept_probability <= 1.0:
            raise ValueError("accept_probability must be in (0, 1]")
        if self.init not in ("random", "qdeim"):
            raise ValueError(f"init must be 'random' or 'qdeim', got {self.init!r}")


def _as_placement(p):
    return p if isinstance(p, Placement) else Placement(tuple(p))


def canonical_matrix(p, m):
    """Explicit r x m 0/1 selector with row i equal to e_{gamma_i}."""
    p = _as_placement(p).check(m)
    C = np.zeros((len(p), m))
    C[np.arange(len(p)), p.indices] = 1.0
    return C


def sample(field, p):
    """Readings ``field[gamma]``; works row-wise on an (m, K) matrix too."""
    field = np.asarray(field, dtype=float)
    p = _as_placement(p).check(field.shape[0])
    if not np.all(np.isfinite(field)):
        raise ValueError("field must be finite")
    return field[list(p.indices)]


def placement_condition(p, b):
    return condition_number(b.modes[list(_as_placement(p).indices), :])


def placement_mse(p, ts, b):
    """Training MSE of reconstructing every snapshot from its samples at ``p``.

    Returns ``inf`` when the interpolation system is singular or its
    condition number exceeds the gate, marking an uninformative placement.
    """
    p = _as_placement(p)
    if len(p) != b.r:
        raise DimensionError(f"placement has {len(p)} sensors, basis rank is {b.r}")
    data = ts.data if hasattr(ts, "data") else np.asarray(ts, dtype=float)
    if data.shape[0] != b.m:
        raise DimensionError(f"data has {data.shape[0]} rows, basis has {b.m}")
    p.check(b.m)
    try:
        recon = reconstruct_block(data, p, b, MAX_CONDITION)
    except IllConditionedError:
        return math.inf
    return mse(recon, data)


def random_placement(cs, r, seed):
    """``r`` distinct candidates drawn uniformly without replacement."""
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.default_rng(seed)
    if r < 1:
        raise ValueError("r must be >= 1")
    if r > len(cs):
        raise ValueError(f"cannot place {r} sensors on {len(cs)} candidates")
    return Placement(tuple(rng.choice(np.asarray(cs.locations), size=r, replace=False)))


def qdeim_placement(b, candidates=None, tie_rtol=1e-12):
    """First r pivots of column-pivoted QR on ``Psi_r.T``.

    Pivoting is greedy on the residual column norm, recomputed at every
    step. Norms within ``tie_rtol`` of the maximum count as ties and the
    lowest column index wins. With ``candidates`` the columns are restricted
    to those cells.
    """
    cols = np.arange(b.m) if candidates is None else np.asarray(candidates.locations)
    if len(cols) < b.r:
        raise ValueError(f"cannot place {b.r} sensors on {len(cols)} candidates")
    R = np.array(b.modes[cols, :].T)  # r x n_cols residual
    chosen = []
    available = np.ones(len(cols), dtype=bool)
    for _ in range(b.r):
        norms = np.where(available, np.sqrt(np.sum(R**2, axis=0)), -1.0)
        top = norms.max()
        j = int(np.flatnonzero(norms >= top * (1.0 - tie_rtol))[0])
        chosen.append(j)
        available[j] = False
        if top <= 0.0:
            continue
        q = R[:, j] / norms[j]
        # two passes of Gram-Schmidt to keep the residual orthogonal
        R -= np.outer(q, q @ R)
        R -= np.outer(q, q @ R)
    return Placement(tuple(int(cols[j]) for j in chosen))


def optimize_placement(ts, cs, b, cfg):
    """Randomized swap search for the placement with lowest training MSE.

    Returns
    -------
    placement : Placement
    trace : (T + 1,) ndarray
        Best MSE after each iteration, entry 0 being the initial placement.
    """
    cs = CandidateSet.all_cells(b.m) if cs is None else cs
    cs.check(b.m)
    r = b.r
    if r >= len(cs):
        raise ValueError(
            f"need more than r={r} candidates to swap, got {len(cs)}"
        )
    rng = np.random.default_rng(cfg.seed)
    if cfg.init == "qdeim":
        current = list(qdeim_placement(b, cs).indices)
    else:
        current = list(random_placement(cs, r, rng).indices)
    eps = placement_mse(current, ts, b)
    trace = np.empty(cfg.iterations + 1)
    trace[0] = eps

    candidates = np.asarray(cs.locations)
    in_use = np.isin(candidates, current)
    for it in range(1, cfg.iterations + 1):
        slot = int(rng.integers(r))
        free = candidates[~in_use]
        new_cell = int(free[rng.integers(free.size)])
        u = rng.random()
        trial = list(current)
        trial[slot] = new_cell
        eps_trial = placement_mse(trial, ts, b)
        if eps_trial < eps and u <= cfg.accept_probability:
            in_use[np.searchsorted(candidates, current[slot])] = False
            in_use[np.searchsorted(candidates, new_cell)] = True
            current, eps = trial, eps_trial
        trace[it] = eps
    return Placement(tuple(current)), trace


def brute_force_placement(ts, cs, b, max_subsets=10**6, tie_rtol=1e-9):
    """Exhaustive minimizer of :func:`placement_mse` over all r-subsets.

    Subsets are visited in lexicographic order and a later subset replaces
    the incumbent only if it is better by more than ``tie_rtol`` relative to
    the data's mean square (so round-off never breaks a tie).
    """
    cs = CandidateSet.all_cells(b.m) if cs is None else cs
    cs.check(b.m)
    n_subsets = math.comb(len(cs), b.r)
    if n_subsets == 0:
        raise ValueError(f"cannot place {b.r} sensors on {len(cs)} candidates")
    if n_subsets > max_subsets:
        raise ValueError(
            f"C({len(cs)}, {b.r}) = {n_subsets} subsets exceeds guard {max_subsets}"
        )
    data = ts.data if hasattr(ts, "data") else np.asarray(ts, dtype=float)
    tol = tie_rtol * float(np.mean(data**2))
    best, best_eps = None, math.inf
    for subset in itertools.combinations(cs.locations, b.r):
        eps = placement_mse(subset, data, b)
        if best is None or eps < best_eps - tol:
            best, best_eps = subset, eps
    return Placement(best), best_eps


# Files =======================================================================

def save_placement(path, p):
    Path(path).write_text("".join(f"{i}\n" for i in p.indices), encoding="ascii")


def load_placement(path):
    idx = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                idx.append(int(text))
            except ValueError:
                raise FormatError(f"expected an integer, got {text!r}", path, lineno)
    if not idx:
        raise FormatError("placement file has no indices", path)
    try:
        return Placement(tuple(idx))
    except ValueError as exc:
        raise FormatError(str(exc), path) from None


def save_trace(path, trace):
    lines = ["iteration,mse"]
    lines.extend(f"{i},{float(e)!r}" for i, e in enumerate(trace))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
