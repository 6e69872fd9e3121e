"""Greedy peeling of a sample by its object shape.

Max-direction peeling repeatedly removes the observation whose deletion
raises the object shape the most; outliers tend to go first and the plot of
shape against step shows a sharp rise once the last one is gone.
Min-direction peeling does the opposite and leaves a near one-dimensional
set of representatives of the dominant direction of variation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import DistanceMatrix
from .shape import DegenerateSampleError, _loo_values

__all__ = [
    "OutlierLabel",
    "PeelingTrace",
    "Representatives",
    "detect_outliers_by_jump",
    "emit_peeling_plot",
    "nearest_neighbor_path",
    "oracle_outliers",
    "path_length",
    "pc1_representatives",
    "peel",
    "read_trace_csv",
    "two_opt",
]

# leave-one-out values this close to the extremum count as tied
TIE_TOL = 1e-12


@dataclass
class PeelingTrace:
    """Result of :func:`peel`.

    ``shapes[0]`` is the full-sample shape and ``shapes[t]`` the shape after
    the ``t`` removals ``removed[:t]``. ``status`` is ``"complete"`` unless
    the run stopped early, in which case ``message`` says why.
    """

    direction: str
    removed: list
    shapes: list
    n: int
    stop_fraction: float
    status: str = "complete"
    message: str = ""

    @property
    def m(self) -> int:
        return len(self.removed)

    @property
    def remaining(self) -> list:
        gone = set(self.removed)
        return [i for i in range(self.n) if i not in gone]

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "n": self.n,
            "stop_fraction": self.stop_fraction,
            "status": self.status,
            "message": self.message,
            "removed": list(self.removed),
            "shapes": list(self.shapes),
        }


@dataclass
class OutlierLabel:
    indices: set
    jump_location: int
    jump_size: float


class _PeelState:
    """Masked squared-distance matrix with per-step aggregates."""

    def __init__(self, D):
        d = np.asarray(D.values if isinstance(D, DistanceMatrix) else D, dtype=float)
        self.b = d * d
        self.alive = np.ones(d.shape[0], dtype=bool)
        self.refresh()

    def refresh(self):
        # rebuilt from the masked matrix each step: same O(n^2) as the scan, and
        # no subtractive drift after a dominant far point leaves
        b = self.b
        self.r = b.sum(axis=1)
        self.q = np.einsum("ij,ij->i", b, b)
        self.frob = float(self.q.sum())

    @property
    def size(self) -> int:
        return int(self.alive.sum())

    def shape(self) -> float:
        if self.frob <= 0.0:
            raise DegenerateSampleError("all observations are identical; object shape undefined")
        return float(np.dot(self.r, self.r) / (self.size * self.frob))

    def loo(self) -> np.ndarray:
        vals = _loo_values(self.b, self.size)
        vals[~self.alive] = np.nan
        return vals

    def remove(self, i: int):
        self.alive[i] = False
        self.b[i, :] = 0.0
        self.b[:, i] = 0.0
        self.refresh()


def _pick(vals: np.ndarray, direction: str) -> int | None:
    ok = ~np.isnan(vals)
    if not ok.any():
        return None
    best = np.nanmax(vals) if direction == "max" else np.nanmin(vals)
    cand = np.flatnonzero(ok & (np.abs(vals - best) <= TIE_TOL))
    return int(cand[0])


def peel(D, direction: str = "max", stop_fraction: float = 0.8,
         n_remove: int | None = None) -> PeelingTrace:
    """Greedy peeling trace of a distance matrix.

    Removes ``floor(stop_fraction * n)`` observations (or exactly
    ``n_remove`` if given). At each step the candidate with the largest
    (``direction="max"``) or smallest (``"min"``) leave-one-out shape is
    removed; ties go to the smallest index. Candidates whose removal would
    leave only coincident points are skipped, and if no candidate is left the
    trace stops early with ``status="degenerate"``.
    """
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    D = DistanceMatrix.coerce(D)
    n = D.n
    if n < 3:
        raise ValueError("peeling needs at least three observations")
    if n_remove is None:
        if not 0.0 < stop_fraction <= 1.0:
            raise ValueError("stop_fraction must lie in (0, 1]")
        n_remove = int(math.floor(stop_fraction * n + 1e-12))
    else:
        if not 0 <= n_remove <= n:
            raise ValueError("n_remove out of range")
        stop_fraction = n_remove / n
    state = _PeelState(D)
    trace = PeelingTrace(direction, [], [state.shape()], n, stop_fraction)
    for _ in range(n_remove):
        vals = state.loo()
        i = _pick(vals, direction)
        if i is None:
            trace.status = "degenerate"
            trace.message = (f"stopped after {trace.m} removals: every remaining candidate "
                             "would leave a sample of identical objects")
            break
        trace.removed.append(i)
        trace.shapes.append(float(vals[i]))
        state.remove(i)
    return trace


def detect_outliers_by_jump(trace: PeelingTrace) -> OutlierLabel:
    """Observations peeled up to and including the largest rise in shape."""
    if trace.m < 1:
        raise ValueError("trace has no removals")
    jumps = np.diff(np.asarray(trace.shapes, dtype=float))
    t = int(np.argmax(jumps))
    size = float(jumps[t])
    if size <= 0:
        return OutlierLabel(set(), 0, size)
    return OutlierLabel(set(trace.removed[:t + 1]), t + 1, size)


def oracle_outliers(trace: PeelingTrace, k: int) -> OutlierLabel:
    """The first ``k`` peeled observations."""
    if not 0 <= k <= trace.m:
        raise ValueError(f"k must lie in 0..{trace.m}")
    jump = float(trace.shapes[k] - trace.shapes[k - 1]) if k > 0 else 0.0
    return OutlierLabel(set(trace.removed[:k]), k, jump)


# -- min peeling and path ordering ------------------------------------------


def path_length(d: np.ndarray, path) -> float:
    path = list(path)
    return float(sum(d[a, b] for a, b in zip(path[:-1], path[1:])))


def nearest_neighbor_path(d: np.ndarray) -> list:
    """Shortest open nearest-neighbour path over all starting points."""
    k = d.shape[0]
    best, best_len = None, math.inf
    for start in range(k):
        path = [start]
        free = np.ones(k, dtype=bool)
        free[start] = False
        while free.any():
            row = np.where(free, d[path[-1]], np.inf)
            nxt = int(np.argmin(row))
            path.append(nxt)
            free[nxt] = False
        length = path_length(d, path)
        if length < best_len - 1e-12:
            best, best_len = path, length
    return best


def two_opt(d: np.ndarray, path) -> list:
    """Improve an open path by segment reversals until none shortens it."""
    path = list(path)
    k = len(path)
    improved = True
    while improved:
        improved = False
        for i in range(k - 1):
            for j in range(i + 1, k):
                a = path[i - 1] if i > 0 else None
                e = path[j + 1] if j < k - 1 else None
                before = (d[a, path[i]] if a is not None else 0.0) + \
                         (d[path[j], e] if e is not None else 0.0)
                after = (d[a, path[j]] if a is not None else 0.0) + \
                        (d[path[i], e] if e is not None else 0.0)
                if after < before - 1e-12:
                    path[i:j + 1] = path[i:j + 1][::-1]
                    improved = True
    return path


@dataclass
class Representatives:
    """Retained set of a min-direction peel, ordered along a short path."""

    indices: list
    path: list
    path_length: float
    nn_length: float
    surplus: float
    trace: PeelingTrace = field(repr=False)


def pc1_representatives(D, n0: int) -> Representatives:
    """Min-peel down to ``n0`` observations and order them as an open path.

    The order comes from the best nearest-neighbour path refined by 2-opt;
    ``surplus`` is ``|path length - d(first, last)|``, zero iff the ordered
    points lie on a metric line.
    """
    D = DistanceMatrix.coerce(D)
    n = D.n
    if not 3 <= n0 < n:
        raise ValueError("need 3 <= n0 < n")
    trace = peel(D, "min", n_remove=n - n0)
    if trace.status != "complete":
        raise DegenerateSampleError(trace.message)
    keep = trace.remaining
    sub = D.values[np.ix_(keep, keep)]
    if not np.any(sub > 0):
        raise DegenerateSampleError("retained observations are all identical")
    nn = nearest_neighbor_path(sub)
    nn_len = path_length(sub, nn)
    local = two_opt(sub, nn)
    length = path_length(sub, local)
    surplus = abs(length - sub[local[0], local[-1]])
    path = [keep[i] for i in local]
    return Representatives(keep, path, length, nn_len, surplus, trace)


# -- output ------------------------------------------------------------------


def _trace_csv_text(trace: PeelingTrace) -> str:
    buf = io.StringIO()
    buf.write(f"# direction={trace.direction}\n")
    buf.write(f"# n={trace.n}\n")
    buf.write(f"# stop_fraction={trace.stop_fraction!r}\n")
    buf.write(f"# status={trace.status}\n")
    if trace.message:
        buf.write(f"# message={trace.message}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "removed_index", "shape"])
    w.writerow([0, "", repr(float(trace.shapes[0]))])
    for t, (j, o) in enumerate(zip(trace.removed, trace.shapes[1:]), start=1):
        w.writerow([t, j, repr(float(o))])
    return buf.getvalue()


def read_trace_csv(path) -> PeelingTrace:
    meta, rows = {}, []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif line.strip():
            body.append(line)
    for row in csv.DictReader(body):
        rows.append(row)
    removed = [int(r["removed_index"]) for r in rows[1:]]
    shapes = [float(r["shape"]) for r in rows]
    return PeelingTrace(
        direction=meta.get("direction", "max"),
        removed=removed,
        shapes=shapes,
        n=int(meta["n"]),
        stop_fraction=float(meta["stop_fraction"]),
        status=meta.get("status", "complete"),
        message=meta.get("message", ""),
    )


def _render_svg(traces, labels, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    markers = "o+x^sv"
    for k, (tr, lab) in enumerate(zip(traces, labels)):
        steps = np.arange(len(tr.shapes))
        ax.plot(steps, tr.shapes, linestyle="none", marker=markers[k % len(markers)],
                markersize=4, label=lab)
        if tr.direction == "max" and tr.m >= 1:
            jump = detect_outliers_by_jump(tr)
            if jump.jump_size > 0:
                t = jump.jump_location
                ax.annotate(f"jump {jump.jump_size:.3f}", xy=(t, tr.shapes[t]),
                            xytext=(t + 1, tr.shapes[t]), fontsize=8,
                            arrowprops={"arrowstyle": "->", "lw": 0.8})
    ax.set_xlabel("step")
    ax.set_ylabel("object shape")
    if any(labels):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_peeling_plot(trace, path, format: str | None = None, labels=None) -> None:
    """Write a peeling trace as CSV or as an SVG scatter of shape vs step.

    For SVG, ``trace`` may be a list of traces which are overlaid.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    traces = list(trace) if isinstance(trace, (list, tuple)) else [trace]
    if fmt == "csv":
        if len(traces) != 1:
            raise ValueError("CSV output holds a single trace")
        path.write_text(_trace_csv_text(traces[0]))
    elif fmt == "svg":
        if labels is None:
            labels = [""] * len(traces) if len(traces) == 1 else \
                [f"trace {k + 1}" for k in range(len(traces))]
        _render_svg(traces, labels, path)
    else:
        raise ValueError(f"unsupported plot format {fmt!r}")
