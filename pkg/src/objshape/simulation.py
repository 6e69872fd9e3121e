"""Outlier-detection simulation on SPD(3) with the affine invariant metric.

Each replicate draws a bulk of ``U diag(exp z) U^T`` matrices with
``z ~ N(0, 1)`` and ``floor(epsilon * n)`` outliers with ``z ~ N(theta_out, 1)``,
then scores four detectors by F1 against the planted outliers:

* ``peel_jump``   -- max peeling, everything up to the largest rise
* ``peel_oracle`` -- max peeling, the first ``floor(epsilon * n)`` removals
* ``lens_oracle`` -- the ``floor(epsilon * n)`` smallest lens depths
* ``lens_jump``   -- lens depths below their largest gap
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .depth import depth_outlier_labels, f1_score, lens_depth
from .metrics import Metric, distance_matrix
from .peeling import detect_outliers_by_jump, oracle_outliers, peel
from .sampling import replicate_rng, sample_spd

__all__ = [
    "METHODS",
    "PAPER_GRID",
    "F1Row",
    "F1Table",
    "OutlierExperimentConfig",
    "run_grid",
    "run_outlier_experiment",
    "run_replicate",
]

METHODS = ("peel_jump", "peel_oracle", "lens_oracle", "lens_jump")
PAPER_GRID = {
    "n": (20, 40, 60, 80, 100),
    "epsilon": (0.05, 0.10),
    "theta_out": (2.0, 4.0),
}
SEPARATION = {"less": 2.0, "more": 4.0}


@dataclass(frozen=True)
class OutlierExperimentConfig:
    n: int
    epsilon: float
    theta_out: float
    replicates: int = 100
    seed: int = 0
    stop_fraction: float = 0.8

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.n < 4:
            raise ValueError("n must be at least 4")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n_outliers < 1:
            raise ValueError("floor(epsilon * n) must be at least 1")
        if self.n_outliers > math.floor(self.stop_fraction * self.n + 1e-12):
            raise ValueError("more outliers than peeled observations")

    @property
    def n_outliers(self) -> int:
        return int(math.floor(self.epsilon * self.n + 1e-12))


def run_replicate(config: OutlierExperimentConfig, replicate: int) -> dict:
    """F1 of each detector on one seeded replicate."""
    rng = replicate_rng(config.seed, replicate)
    k = config.n_outliers
    bulk = sample_spd(rng, 0.0, config.n - k)
    out = sample_spd(rng, config.theta_out, k)
    order = rng.permutation(config.n)
    mats = np.concatenate([bulk, out])[order]
    # position of planted outlier m is where order == n - k + m
    truth = set(np.flatnonzero(order >= config.n - k).tolist())
    D = distance_matrix(mats, Metric.SPD)

    trace = peel(D, "max", config.stop_fraction)
    depths = lens_depth(D)
    labels = {
        "peel_jump": detect_outliers_by_jump(trace).indices,
        "peel_oracle": oracle_outliers(trace, k).indices,
        "lens_oracle": depth_outlier_labels(depths, "oracle", k),
        "lens_jump": depth_outlier_labels(depths, "jump"),
    }
    return {m: f1_score(labels[m], truth) for m in METHODS}


@dataclass(frozen=True)
class F1Row:
    n: int
    epsilon: float
    theta_out: float
    method: str
    mean_f1: float
    se: float
    replicates: int


class F1Table:
    """Mean F1 and Monte Carlo standard error per configuration and method."""

    columns = ("n", "epsilon", "theta_out", "method", "mean_f1", "se", "replicates")

    def __init__(self, rows=None, scores=None):
        self.rows: list[F1Row] = list(rows or [])
        # raw per-replicate scores keyed by (n, epsilon, theta_out, method)
        self.scores: dict = dict(scores or {})

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, n, epsilon, theta_out, method) -> F1Row:
        for row in self.rows:
            if (row.n, row.method) == (n, method) and math.isclose(row.epsilon, epsilon) \
                    and math.isclose(row.theta_out, theta_out):
                return row
        raise KeyError((n, epsilon, theta_out, method))

    def extend(self, other: "F1Table") -> None:
        self.rows.extend(other.rows)
        self.scores.update(other.scores)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            d = asdict(row)
            w.writerow([d["n"], repr(d["epsilon"]), repr(d["theta_out"]), d["method"],
                        repr(d["mean_f1"]), repr(d["se"]), d["replicates"]])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "F1Table":
        rows = []
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                rows.append(F1Row(int(r["n"]), float(r["epsilon"]), float(r["theta_out"]),
                                  r["method"], float(r["mean_f1"]), float(r["se"]),
                                  int(r["replicates"])))
        return cls(rows)

    def to_svg(self, path) -> None:
        """Small multiples: one panel per (epsilon, theta_out), F1 against n."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        eps = sorted({r.epsilon for r in self.rows})
        ths = sorted({r.theta_out for r in self.rows})
        fig, axes = plt.subplots(len(eps), len(ths), figsize=(4 * len(ths), 3 * len(eps)),
                                 squeeze=False, sharey=True)
        markers = dict(zip(METHODS, "osx+"))
        for a, e in enumerate(eps):
            for b, th in enumerate(ths):
                ax = axes[a][b]
                for m in METHODS:
                    pts = sorted((r.n, r.mean_f1) for r in self.rows if r.method == m
                                 and r.epsilon == e and r.theta_out == th)
                    if pts:
                        xs, ys = zip(*pts)
                        ax.plot(xs, ys, marker=markers[m], label=m)
                ax.set_title(f"eps={e:g}, theta_out={th:g}", fontsize=9)
                ax.set_xlabel("n")
                ax.set_ylim(-0.02, 1.02)
        axes[0][0].set_ylabel("mean F1")
        axes[0][0].legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)


def run_outlier_experiment(config: OutlierExperimentConfig, threads: int = 1) -> F1Table:
    """Run all replicates of one configuration and aggregate the F1 scores."""
    reps = range(config.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: run_replicate(config, r), reps))
    else:
        results = [run_replicate(config, r) for r in reps]
    table = F1Table()
    R = config.replicates
    for m in METHODS:
        vals = np.array([res[m] for res in results])
        se = float(vals.std(ddof=1) / math.sqrt(R)) if R > 1 else float("nan")
        table.rows.append(F1Row(config.n, config.epsilon, config.theta_out, m,
                                float(vals.mean()), se, R))
        table.scores[(config.n, config.epsilon, config.theta_out, m)] = vals
    return table


def run_grid(ns=PAPER_GRID["n"], epsilons=PAPER_GRID["epsilon"],
             thetas=PAPER_GRID["theta_out"], replicates: int = 100, seed: int = 0,
             threads: int = 1) -> F1Table:
    """Run every configuration of a grid with a shared root seed.

    Replicate ``r`` uses the same random stream in every configuration, so
    comparisons across separations or sample sizes are paired.
    """
    table = F1Table()
    for n in ns:
        for e in epsilons:
            for th in thetas:
                cfg = OutlierExperimentConfig(n, e, th, replicates, seed)
                table.extend(run_outlier_experiment(cfg, threads))
    return table
