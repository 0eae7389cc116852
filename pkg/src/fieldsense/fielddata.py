"""Gridded snapshot data: containers, text I/O, synthetic fields, heatmaps.

Cells are indexed 0-based, row-major over the full ``height x width`` grid.
Only valid cells (``mask == True``) carry data; they are compacted in
ascending cell-index order into the rows of the snapshot matrix, so row
``i`` of a :class:`TrainingSet` is cell ``geometry.valid_cells[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError

__all__ = [
    "GridGeometry",
    "TrainingSet",
    "read_matrix",
    "write_matrix",
    "read_geometry",
    "write_geometry",
    "load_training",
    "save_training",
    "mean_normalize",
    "denormalize",
    "synth_field",
    "snr_noise_std",
    "split_snapshots",
    "export_heatmap",
]


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridGeometry:
    """Rectangular grid with a validity mask (True = sensor-eligible cell)."""

    height: int
    width: int
    mask: np.ndarray

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("grid height and width must be >= 1")
        mask = np.asarray(self.mask, dtype=bool).reshape(-1)
        if mask.size != self.height * self.width:
            raise DimensionError(
                f"mask has {mask.size} entries, expected {self.height * self.width}"
            )
        if not mask.any():
            raise ValueError("geometry has no valid cells")
        object.__setattr__(self, "mask", _frozen(mask))

    @classmethod
    def full(cls, height, width):
        return cls(height, width, np.ones(height * width, dtype=bool))

    @property
    def n_valid(self):
        return int(self.mask.sum())

    @property
    def valid_cells(self):
        """Grid cell index of each data row."""
        return np.flatnonzero(self.mask)

    def cell_coordinates(self):
        """``(row, col)`` grid coordinates of every valid cell, shape (m, 2)."""
        cells = self.valid_cells
        return np.column_stack([cells // self.width, cells % self.width])

    def to_grid(self, values, fill=np.nan):
        """Scatter a length-m vector onto a ``(height, width)`` array."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_valid,):
            raise DimensionError(
                f"field has shape {values.shape}, expected ({self.n_valid},)"
            )
        grid = np.full(self.height * self.width, fill, dtype=float)
        grid[self.mask] = values
        return grid.reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, GridGeometry):
            return NotImplemented
        return (
            self.height == other.height
            and self.width == other.width
            and np.array_equal(self.mask, other.mask)
        )

    __hash__ = None


@dataclass(frozen=True)
class TrainingSet:
    """Snapshot matrix ``data`` (m valid cells x M snapshots) on a grid."""

    data: np.ndarray
    geometry: GridGeometry
    timestamps: np.ndarray | None = field(default=None)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise DimensionError("training data must be a 2-D matrix")
        m, M = data.shape
        if M < 1:
            raise ValueError("M must be >= 1 (at least one snapshot)")
        if m != self.geometry.n_valid:
            raise DimensionError(
                f"dimension mismatch: {m} data rows but "
                f"{self.geometry.n_valid} valid cells in mask"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("training data contains non-finite values")
        object.__setattr__(self, "data", _frozen(data))
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=np.int64).reshape(-1)
            if ts.size != M:
                raise DimensionError(f"{ts.size} timestamps for {M} snapshots")
            if np.any(np.diff(ts) <= 0):
                raise ValueError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", _frozen(ts))

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def M(self):
        return self.data.shape[1]

    def with_data(self, data):
        """Same grid, new matrix; timestamps kept only if M is unchanged."""
        data = np.asarray(data, dtype=float)
        stamps = self.timestamps
        if stamps is not None and data.ndim == 2 and data.shape[1] != stamps.size:
            stamps = None
        return TrainingSet(data, self.geometry, stamps)


# Text formats ================================================================

def _format_float(x):
    # shortest of 15..17 significant digits that round-trips exactly
    for digits in (15, 16, 17):
        s = f"{x:.{digits}g}"
        if float(s) == x:
            return s
    return repr(float(x))


def _content_lines(path):
    """Yield ``(lineno, stripped_text)`` skipping blanks and ``#`` comments."""
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            yield lineno, text


def _parse_header(lines, path, what):
    try:
        lineno, text = next(lines)
    except StopIteration:
        raise FormatError(f"empty {what} file", path) from None
    parts = text.split()
    try:
        if len(parts) != 2:
            raise ValueError
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError(
            f"malformed header {text!r}, expected '<int> <int>'", path, lineno
        ) from None
    if a < 0 or b < 0:
        raise FormatError(f"negative dimension in header {text!r}", path, lineno)
    return lineno, a, b


def read_matrix(path):
    """Read a matrix file: ``"<rows> <cols>"`` header then whitespace rows."""
    path = Path(path)
    lines = _content_lines(path)
    hdr_line, rows, cols = _parse_header(lines, path, "matrix")
    out = np.empty((rows, cols), dtype=float)
    i = 0
    for lineno, text in lines:
        if i >= rows:
            raise FormatError(f"more than the declared {rows} rows", path, lineno)
        parts = text.split()
        if len(parts) != cols:
            raise FormatError(
                f"expected {cols} values, found {len(parts)}", path, lineno
            )
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"bad number: {exc}", path, lineno) from None
        if not all(np.isfinite(vals)):
            raise FormatError("non-finite value", path, lineno)
        out[i] = vals
        i += 1
    if i != rows:
        raise FormatError(
            f"header declares {rows} rows but file has {i}", path, hdr_line
        )
    return out


def write_matrix(path, matrix, comment=None):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise DimensionError("write_matrix expects a 1-D or 2-D array")
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"{matrix.shape[0]} {matrix.shape[1]}")
    for row in matrix:
        lines.append(" ".join(_format_float(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_geometry(path):
    path = Path(path)
    lines = _content_lines(path)
    hdr_line, height, width = _parse_header(lines, path, "geometry")
    if height < 1 or width < 1:
        raise FormatError("grid height and width must be >= 1", path, hdr_line)
    mask = np.zeros((height, width), dtype=bool)
    i = 0
    for lineno, text in lines:
        if i >= height:
            raise FormatError(f"more than the declared {height} rows", path, lineno)
        if len(text) != width or set(text) - {"0", "1"}:
            raise FormatError(
                f"expected {width} characters of '0'/'1', got {text!r}", path, lineno
            )
        mask[i] = [c == "1" for c in text]
        i += 1
    if i != height:
        raise FormatError(
            f"header declares {height} rows but file has {i}", path, hdr_line
        )
    if not mask.any():
        raise FormatError("mask has no valid cells", path, hdr_line)
    return GridGeometry(height, width, mask.reshape(-1))


def write_geometry(path, geometry):
    rows = geometry.mask.reshape(geometry.height, geometry.width)
    lines = [f"{geometry.height} {geometry.width}"]
    lines.extend("".join("1" if v else "0" for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_training(matrix_path, geometry_path):
    """Load a :class:`TrainingSet` from a matrix file and a geometry file."""
    geometry = read_geometry(geometry_path)
    data = read_matrix(matrix_path)
    if data.shape[0] != geometry.n_valid:
        raise FormatError(
            f"dimension mismatch: {data.shape[0]} rows but mask has "
            f"{geometry.n_valid} valid cells",
            matrix_path,
            1,
        )
    if data.shape[1] < 1:
        raise FormatError("M must be >= 1", matrix_path, 1)
    return TrainingSet(data, geometry)


def save_training(ts, matrix_path, geometry_path):
    if ts.M < 1:
        raise ValueError("M must be >= 1")
    write_matrix(matrix_path, ts.data)
    write_geometry(geometry_path, ts.geometry)


# Normalization ===============================================================

def mean_normalize(ts):
    """Subtract the temporal mean of every cell.

    Returns
    -------
    centered : TrainingSet
    mean : (m,) ndarray
        Per-cell mean over the M snapshots.
    """
    mean = ts.data.mean(axis=1)
    mean.setflags(write=False)
    return ts.with_data(ts.data - mean[:, None]), mean


def denormalize(field, mean):
    field = np.asarray(field, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if field.shape[0] != mean.shape[0]:
        raise DimensionError(
            f"field length {field.shape[0]} != mean length {mean.shape[0]}"
        )
    if field.ndim == 2:
        return field + mean[:, None]
    return field + mean


# Synthetic data ==============================================================

def _bump_centers(geometry, n):
    """Spread ``n`` distinct centers over valid cells by farthest-point picking."""
    coords = geometry.cell_coordinates().astype(float)
    mid = np.array([(geometry.height - 1) / 2, (geometry.width - 1) / 2])
    first = int(np.argmin(np.sum((coords - mid) ** 2, axis=1)))
    chosen = [first]
    dist = np.sum((coords - coords[first]) ** 2, axis=1)
    for _ in range(n - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.sum((coords - coords[nxt]) ** 2, axis=1))
    return chosen


def synth_field(geometry, n_modes, M, noise_std=0.0, seed=0):
    """Sum of Gaussian bumps with sinusoidal amplitudes, plus white noise.

    Mode ``k`` (1-based) is a Gaussian bump of width ``max(h, w) / 4``
    centred on a valid cell (centres are spread by farthest-point
    selection, so they depend only on the geometry). Its amplitude is
    ``k**-0.5 * sin(2 pi k t / M + phase_k)`` with seed-derived phases:
    each series completes an integer number of cycles, so every cell has
    zero temporal mean and the noiseless matrix has rank ``n_modes``
    whenever ``M > 2 * n_modes``.
    """
    m = geometry.n_valid
    if not 1 <= n_modes <= m:
        raise ValueError(f"n_modes must be in [1, {m}], got {n_modes}")
    if M < 1:
        raise ValueError("M must be >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)

    coords = geometry.cell_coordinates().astype(float)
    width = max(geometry.height, geometry.width) / 4.0
    centers = coords[_bump_centers(geometry, n_modes)]
    d2 = ((coords[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    bumps = np.exp(-d2 / (2.0 * width**2))  # (m, n_modes)

    k = np.arange(1, n_modes + 1)[:, None]
    t = np.arange(M)[None, :]
    amps = k**-0.5 * np.sin(2.0 * np.pi * k * t / M + phases[:, None])

    data = bumps @ amps
    if noise_std > 0:
        data = data + noise_std * rng.standard_normal(data.shape)
    return TrainingSet(data, geometry, np.arange(M))


def snr_noise_std(clean, snr_db):
    """Noise standard deviation giving ``snr_db`` against mean signal power."""
    clean = np.asarray(clean, dtype=float)
    power = np.mean(clean**2)
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


def split_snapshots(ts, train_fraction=0.8):
    """Contiguous temporal split into (train, test); both keep >= 1 snapshot."""
    if ts.M < 2:
        raise ValueError("need at least 2 snapshots to split")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n_train = min(max(int(round(ts.M * train_fraction)), 1), ts.M - 1)
    stamps = ts.timestamps
    train = TrainingSet(
        ts.data[:, :n_train], ts.geometry,
        None if stamps is None else stamps[:n_train],
    )
    test = TrainingSet(
        ts.data[:, n_train:], ts.geometry,
        None if stamps is None else stamps[n_train:],
    )
    return train, test


# Heatmaps ====================================================================

def export_heatmap(field, geometry, path, format="pgm"):
    """Write a length-m field as a grayscale PGM (P5) or a CSV grid.

    PGM levels are min-max scaled over valid cells (a constant field maps
    to 128) and masked cells are 0. CSV writes ``nan`` for masked cells.
    """
    field = np.asarray(field, dtype=float)
    if not np.all(np.isfinite(field)):
        raise ValueError("heatmap field must be finite")
    grid = geometry.to_grid(field)
    mask = geometry.mask.reshape(geometry.height, geometry.width)
    if format == "pgm":
        lo, hi = field.min(), field.max()
        if hi > lo:
            levels = np.rint((grid - lo) / (hi - lo) * 255.0)
        else:
            levels = np.full(grid.shape, 128.0)
        pixels = np.where(mask, levels, 0.0).astype(np.uint8)
        header = f"P5\n{geometry.width} {geometry.height}\n255\n".encode("ascii")
        Path(path).write_bytes(header + pixels.tobytes())
    elif format == "csv":
        lines = [
            ",".join(_format_float(v) if ok else "nan" for v, ok in zip(row, mrow))
            for row, mrow in zip(grid, mask)
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    else:
        raise ValueError(f"unknown heatmap format {format!r}")
