"""SVD basis learning, rank truncation and hard-threshold rank selection."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError
from .fielddata import _format_float, mean_normalize, read_matrix, write_matrix

__all__ = [
    "SvdFactorization",
    "Basis",
    "compute_svd",
    "truncate",
    "truncation_error",
    "svht_lambda",
    "svht_omega",
    "svht_threshold",
    "svht_rank",
    "projection_error",
    "save_basis",
    "load_basis",
]


def _ro(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``centered = left_modes @ diag(singular_values) @ right_modes.T``."""

    left_modes: np.ndarray
    singular_values: np.ndarray
    right_modes: np.ndarray
    mean: np.ndarray

    @property
    def shape(self):
        """``(m, M)`` of the factorized matrix."""
        return self.left_modes.shape[0], self.right_modes.shape[0]

    @property
    def p(self):
        return self.singular_values.shape[0]


@dataclass(frozen=True)
class Basis:
    """Rank-r principal basis plus the mean removed before factorization.

    ``right_modes`` may be ``None`` for a basis read back from disk without
    its temporal modes; only :func:`fieldsense.modeleval.fit_state_space`
    needs them.
    """

    modes: np.ndarray
    singular_values: np.ndarray
    mean: np.ndarray
    right_modes: np.ndarray | None = None

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=float)
        if modes.ndim != 2:
            raise DimensionError("basis modes must be a 2-D matrix")
        m, r = modes.shape
        if r < 1:
            raise DimensionError("basis rank must be >= 1")
        sv = np.asarray(self.singular_values, dtype=float).reshape(-1)
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if sv.size != r:
            raise DimensionError(f"{sv.size} singular values for rank {r}")
        if mean.size != m:
            raise DimensionError(f"mean length {mean.size} != {m} rows")
        object.__setattr__(self, "modes", _ro(modes))
        object.__setattr__(self, "singular_values", _ro(sv))
        object.__setattr__(self, "mean", _ro(mean))
        if self.right_modes is not None:
            rm = np.asarray(self.right_modes, dtype=float)
            if rm.ndim != 2 or rm.shape[1] != r:
                raise DimensionError(f"right modes must have {r} columns")
            object.__setattr__(self, "right_modes", _ro(rm))

    @property
    def r(self):
        return self.modes.shape[1]

    @property
    def m(self):
        return self.modes.shape[0]

    def coefficients(self):
        """Temporal coefficients ``diag(S_r) @ V_r.T``, shape (r, M)."""
        if self.right_modes is None:
            raise ValueError("basis was stored without right singular vectors")
        return self.singular_values[:, None] * self.right_modes.T


def compute_svd(ts):
    """Thin SVD of the mean-centred snapshot matrix.

    Column signs are fixed so that the largest-magnitude entry of every
    left singular vector is positive (first such entry on ties); the
    matching right singular vector is flipped with it.
    """
    if ts.m == 0 or ts.M == 0:
        raise DimensionError("cannot factorize an empty matrix")
    centered, mean = mean_normalize(ts)
    try:
        U, s, Vt = np.linalg.svd(centered.data, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"SVD did not converge: {exc}") from exc
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs
    V = Vt.T * signs
    return SvdFactorization(_ro(U), _ro(s), _ro(V), _ro(mean))


def truncate(f, r):
    if not 1 <= r <= f.p:
        raise ValueError(f"rank must be in [1, {f.p}], got {r}")
    return Basis(
        f.left_modes[:, :r],
        f.singular_values[:r],
        f.mean,
        f.right_modes[:, :r],
    )


def truncation_error(f, r):
    """Squared Frobenius error of the rank-r approximation (discarded energy)."""
    tail = f.singular_values[r:]
    return float(np.sum(tail**2))


def svht_lambda(beta):
    """Optimal hard-threshold coefficient for known noise level."""
    return float(
        np.sqrt(
            2.0 * (beta + 1.0)
            + 8.0 * beta / ((beta + 1.0) + np.sqrt(beta**2 + 14.0 * beta + 1.0))
        )
    )


def svht_omega(beta):
    # polynomial approximation to lambda(beta) / sqrt(median of Marchenko-Pastur)
    return 0.56 * beta**3 - 0.95 * beta**2 + 1.82 * beta + 1.43


def svht_threshold(singular_values, shape, noise_std=None):
    """Hard threshold tau for a spectrum of a matrix of the given shape.

    With ``noise_std`` known: ``lambda(beta) * sqrt(max(shape)) * noise_std``.
    Otherwise ``omega(beta) * median(singular_values)``.
    """
    n_small, n_large = sorted(shape)
    if n_small < 1:
        raise DimensionError("empty matrix")
    beta = n_small / n_large
    if noise_std is not None:
        if noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        return svht_lambda(beta) * np.sqrt(n_large) * noise_std
    return svht_omega(beta) * float(np.median(singular_values))


def svht_rank(f, noise_std=None):
    """Number of singular values strictly above the hard threshold.

    Values at or below the numerical-rank floor
    ``max(m, M) * eps * sigma_1`` never count, so an exactly low-rank
    matrix is not inflated by round-off. At least 1 is returned.
    """
    s = f.singular_values
    m, M = f.shape
    tau = svht_threshold(s, (m, M), noise_std)
    floor = max(m, M) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    return max(int(np.count_nonzero(s > max(tau, floor))), 1)


def projection_error(b, ts):
    """MSE of the orthogonal projection of ``ts`` onto ``mean + span(modes)``."""
    data = ts.data if hasattr(ts, "data") else np.asarray(ts, dtype=float)
    if data.shape[0] != b.m:
        raise DimensionError(f"data has {data.shape[0]} rows, basis has {b.m}")
    centered = data - b.mean[:, None]
    approx = b.modes @ (b.modes.T @ centered) + b.mean[:, None]
    return float(np.mean((data - approx) ** 2))


# Persistence =================================================================

MODES_FILE = "basis_modes.txt"
RIGHT_MODES_FILE = "basis_right_modes.txt"
SIDECAR_FILE = "basis.txt"


def save_basis(b, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(directory / MODES_FILE, b.modes)
    if b.right_modes is not None:
        write_matrix(directory / RIGHT_MODES_FILE, b.right_modes)
    lines = [
        f"r={b.r}",
        "sigma=" + " ".join(_format_float(x) for x in b.singular_values),
        "mean=" + " ".join(_format_float(x) for x in b.mean),
    ]
    (directory / SIDECAR_FILE).write_text("\n".join(lines) + "\n", encoding="ascii")


def _read_sidecar(path):
    values = {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            key, sep, val = text.partition("=")
            if not sep:
                raise FormatError(f"expected key=value, got {text!r}", path, lineno)
            values[key.strip()] = (lineno, val.strip())
    return values


def load_basis(directory):
    directory = Path(directory)
    sidecar = directory / SIDECAR_FILE
    values = _read_sidecar(sidecar)
    for key in ("r", "sigma", "mean"):
        if key not in values:
            raise FormatError(f"missing '{key}=' entry", sidecar)
    lineno, rtext = values["r"]
    try:
        r = int(rtext)
        sigma = np.array([float(x) for x in values["sigma"][1].split()])
        mean = np.array([float(x) for x in values["mean"][1].split()])
    except ValueError as exc:
        raise FormatError(f"bad sidecar value: {exc}", sidecar) from None
    modes = read_matrix(directory / MODES_FILE)
    if modes.shape[1] != r:
        raise FormatError(
            f"r={r} but modes file has {modes.shape[1]} columns", sidecar, lineno
        )
    right = None
    if (directory / RIGHT_MODES_FILE).exists():
        right = read_matrix(directory / RIGHT_MODES_FILE)
    try:
        return Basis(modes, sigma, mean, right)
    except DimensionError as exc:
        raise FormatError(str(exc), sidecar) from None
