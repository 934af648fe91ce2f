"""Sink recovery from moments: scores, peeling, and threshold experiments.

For each vertex i, the matrix over rows ``(V \\ i) + (i,)`` and columns
``[S_{., V\\i} | T_{., (V\\i) x (V\\i)}]`` drops rank exactly when i has no
out-edges. The reciprocal condition number of that matrix is a sink score:
small means sink-like.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintMatrix
from .graph import Dag
from .moments import MomentPair, flatten, submatrix
from .simulate import NoiseSpec, derive_rng, empirical_moments, random_parameters, sample_lingam


class DegenerateScoreWarning(UserWarning):
    """A sink-score matrix was identically zero."""


@dataclass(frozen=True)
class SinkScore:
    """Reciprocal condition number of a vertex's sink matrix (small = sink-like)."""

    vertex: int
    score: float
    singular_values: np.ndarray

    def to_json(self) -> dict:
        return {
            "vertex": self.vertex,
            "score": float(self.score),
            "singular_values": [float(s) for s in self.singular_values],
        }


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


def sink_matrix(m: MomentPair, i: int) -> ConstraintMatrix:
    """Moment matrix whose rank drops exactly when i is a sink.

    Rows are the other vertices followed by i; columns are the covariance
    block over V\\i and the third-moment block over (V\\i) x (V\\i).
    """
    n = m.n
    if n < 2:
        raise ValueError("sink matrices need at least two vertices")
    if not 1 <= i <= n:
        raise ValueError(f"vertex {i} outside 1..{n}")
    others = tuple(v for v in range(1, n + 1) if v != i)
    rows = others + (i,)
    values = np.hstack(
        [submatrix(m.cov, rows, others), flatten(m.t3, rows, others, others)]
    )
    t_pairs = tuple((w, z) for w in others for z in others)
    return ConstraintMatrix(
        name=f"sink(i={i})",
        values=values,
        row_labels=rows,
        col_labels=others + t_pairs,
        expected_rank=n - 1,
    )


def sink_scores(m: MomentPair) -> list[SinkScore]:
    """Sink score for every vertex, sorted by vertex label."""
    out = []
    for i in range(1, m.n + 1):
        s = np.linalg.svd(sink_matrix(m, i).values, compute_uv=False)
        if s[0] == 0.0:
            warnings.warn(
                f"sink matrix for vertex {i} is identically zero",
                DegenerateScoreWarning,
                stacklevel=2,
            )
            score = 0.0
        else:
            score = float(s[-1] / s[0])
        out.append(SinkScore(i, score, s))
    return out


def pick_sink(scores: list[SinkScore]) -> int:
    """Vertex with the minimal score; ties break on the smallest label."""
    if not scores:
        raise ValueError("cannot pick a sink from an empty score list")
    best = min(scores, key=lambda sc: (sc.score, sc.vertex))
    return best.vertex


def threshold_sinks(scores: list[SinkScore], t: float) -> tuple[int, ...]:
    """Vertices with score strictly below t; may be empty or plural."""
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    return tuple(sc.vertex for sc in scores if sc.score < t)


@dataclass(frozen=True)
class PeelStep:
    """One round of sink scoring over the vertices still in play."""

    remaining: tuple[int, ...]
    scores: list[SinkScore]
    picked: int


def peel_steps(m: MomentPair) -> list[PeelStep]:
    """Score-and-remove rounds down to a single remaining vertex.

    After a sink is removed the moments are restricted to the remaining
    vertices (deleting a childless vertex leaves the sub-model intact).
    Scores are reported with the original vertex labels.
    """
    remaining = list(range(1, m.n + 1))
    steps: list[PeelStep] = []
    while len(remaining) > 1:
        local = sink_scores(m.restrict(remaining))
        scores = [
            SinkScore(remaining[sc.vertex - 1], sc.score, sc.singular_values)
            for sc in local
        ]
        picked = remaining[pick_sink(local) - 1]
        steps.append(PeelStep(tuple(remaining), scores, picked))
        remaining.remove(picked)
    return steps


def recover_order(m: MomentPair) -> list[int]:
    """Elimination order from repeatedly peeling the best-scoring sink.

    The returned order is reverse topological for the generating graph on
    exact moments.
    """
    steps = peel_steps(m)
    order = [step.picked for step in steps]
    order.extend(v for v in range(1, m.n + 1) if v not in order)
    return order


# -- experiments -------------------------------------------------------------------


DEFAULT_THRESHOLDS: tuple[float, ...] = (
    0.0,
    *np.logspace(-6, 0, 25),
    np.inf,
)


def _run_scores(
    g: Dag,
    noise: NoiseSpec,
    n_samples: int,
    rng: np.random.Generator,
    coeff_range: tuple[float, float],
) -> np.ndarray:
    lam, _ = random_parameters(g, rng, coeff_range)
    x = sample_lingam(g, lam, noise, n_samples, rng)
    return np.array([sc.score for sc in sink_scores(empirical_moments(x))])


def roc_experiment(
    g: Dag,
    noise: NoiseSpec,
    n_samples: int = 5000,
    runs: int = 50,
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
    seed: int = 0,
    coeff_range: tuple[float, float] = (0.3, 1.0),
) -> list[RocPoint]:
    """Threshold sweep of sink flagging over repeated simulated runs.

    Each run draws fresh generic edge coefficients, samples ``n_samples``
    observations, and scores every vertex. For a threshold t, the true
    positive rate is the fraction of (run, sink) pairs flagged and the false
    positive rate the fraction of (run, non-sink) pairs flagged.
    """
    sinks = set(g.sinks())
    if not sinks or len(sinks) == g.n:
        raise ValueError("ROC experiment needs at least one sink and one non-sink")
    if not thresholds:
        raise ValueError("threshold grid is empty")
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}")
    score_rows = np.vstack(
        [
            _run_scores(g, noise, n_samples, derive_rng(seed, run), coeff_range)
            for run in range(runs)
        ]
    )
    sink_cols = [v - 1 for v in range(1, g.n + 1) if v in sinks]
    other_cols = [v - 1 for v in range(1, g.n + 1) if v not in sinks]
    points = []
    for t in thresholds:
        flags = score_rows < t
        points.append(
            RocPoint(
                threshold=float(t),
                tpr=float(flags[:, sink_cols].mean()),
                fpr=float(flags[:, other_cols].mean()),
            )
        )
    return points


@dataclass(frozen=True)
class SinkBarCell:
    """How often each vertex won the sink pick at one sample size."""

    n_samples: int
    counts: dict[int, int]
    seed_path: tuple[int, int]


def sink_bar_experiment(
    g: Dag,
    noise: NoiseSpec,
    sample_sizes: tuple[int, ...],
    runs: int = 50,
    seed: int = 0,
    coeff_range: tuple[float, float] = (0.3, 1.0),
) -> list[SinkBarCell]:
    """Per-sample-size tallies of which vertex the minimal score selects."""
    if not sample_sizes:
        raise ValueError("sample size grid is empty")
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}")
    cells = []
    for cell, n_samples in enumerate(sample_sizes):
        counts = {v: 0 for v in g.vertices}
        for run in range(runs):
            rng = derive_rng(seed, cell, run)
            lam, _ = random_parameters(g, rng, coeff_range)
            x = sample_lingam(g, lam, noise, n_samples, rng)
            picked = pick_sink(sink_scores(empirical_moments(x)))
            counts[picked] += 1
        cells.append(SinkBarCell(int(n_samples), counts, (seed, cell)))
    return cells
