"""Benchmark harness comparing placement methods on a train/test split."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .basis import compute_svd, projection_error, svht_rank, truncate
from .errors import FieldsenseError
from .placement import (
    AnnealConfig,
    CandidateSet,
    optimize_placement,
    placement_condition,
    placement_mse,
    qdeim_placement,
    random_placement,
)

__all__ = ["BenchRow", "BenchReport", "BenchFailure", "run_benchmark", "REPORT_COLUMNS"]

REPORT_COLUMNS = ("method", "train_mse", "test_mse", "condition_number", "seconds")


@dataclass
class BenchRow:
    method: str
    train_mse: float
    test_mse: float
    condition_number: float
    seconds: float
    placement: tuple | None = None


@dataclass
class BenchReport:
    rank: int
    rows: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    scale: float = 1.0

    def row(self, method):
        for row in self.rows:
            if row.method == method:
                return row
        raise KeyError(method)

    def check(self, rtol=1e-9):
        """Raise if any method beats the projection target on either split."""
        target = self.row("target")
        tol = rtol * self.scale
        for row in self.rows:
            if row.method == "target":
                continue
            for split in ("train_mse", "test_mse"):
                if getattr(row, split) < getattr(target, split) - tol:
                    raise FieldsenseError(
                        f"{row.method} {split}={getattr(row, split)!r} is below "
                        f"the projection target {getattr(target, split)!r}"
                    )

    def write_csv(self, path, timing=True):
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for row in self.rows:
                writer.writerow([
                    row.method,
                    repr(float(row.train_mse)),
                    repr(float(row.test_mse)),
                    repr(float(row.condition_number)),
                    f"{row.seconds:.6f}" if timing else "0",
                ])

    def table(self):
        lines = [f"{'method':<16}{'train_mse':>14}{'test_mse':>14}{'cond':>12}{'seconds':>10}"]
        for row in self.rows:
            lines.append(
                f"{row.method:<16}{row.train_mse:>14.6g}{row.test_mse:>14.6g}"
                f"{row.condition_number:>12.4g}{row.seconds:>10.3f}"
            )
        return "\n".join(lines)


class BenchFailure(FieldsenseError):
    """An arm raised; ``report`` holds the rows finished before it."""

    def __init__(self, method, report, cause):
        self.method = method
        self.report = report
        super().__init__(f"benchmark arm {method!r} failed: {cause}")


def run_benchmark(train, test, rank="svht", iterations=1000, rho=0.9, seed=0,
                  n_random=20, noise_std=None, candidates=None):
    """Score the placement methods on ``train`` and ``test``.

    Arms: projection ``target``, ``anneal_qdeim`` and ``anneal_random``
    (swap search from a Q-DEIM or random start), ``qdeim``, and ``random``
    (median over ``n_random`` seeded draws). The basis, and therefore r,
    comes from the training split.
    """
    f = compute_svd(train)
    r = svht_rank(f, noise_std) if rank == "svht" else int(rank)
    b = truncate(f, r)
    cs = CandidateSet.all_cells(b.m) if candidates is None else candidates
    report = BenchReport(rank=r, scale=float(np.mean(train.data**2)))

    def arm(method, fn):
        t0 = time.perf_counter()
        try:
            row = fn()
        except Exception as exc:
            raise BenchFailure(method, report, exc) from exc
        row.seconds = time.perf_counter() - t0
        report.rows.append(row)

    def target():
        return BenchRow("target", projection_error(b, train),
                        projection_error(b, test), float("nan"), 0.0)

    def anneal(init):
        def run():
            cfg = AnnealConfig(iterations, rho, seed, init)
            p, trace = optimize_placement(train, cs, b, cfg)
            report.traces[f"anneal_{init}"] = trace
            return BenchRow(f"anneal_{init}", float(trace[-1]),
                            placement_mse(p, test, b), placement_condition(p, b),
                            0.0, p.indices)
        return run

    def qdeim():
        p = qdeim_placement(b, cs)
        return BenchRow("qdeim", placement_mse(p, train, b), placement_mse(p, test, b),
                        placement_condition(p, b), 0.0, p.indices)

    def random_arm():
        seeds = np.random.SeedSequence(seed).generate_state(n_random)
        scores = []
        for s in seeds:
            p = random_placement(cs, r, int(s))
            scores.append((placement_mse(p, train, b), placement_mse(p, test, b),
                           placement_condition(p, b)))
        train_m, test_m, cond_m = np.median(np.array(scores), axis=0)
        return BenchRow("random", float(train_m), float(test_m), float(cond_m), 0.0)

    arm("target", target)
    arm("anneal_qdeim", anneal("qdeim"))
    arm("anneal_random", anneal("random"))
    arm("qdeim", qdeim)
    arm("random", random_arm)
    report.check()
    return report
