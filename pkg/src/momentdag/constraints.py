"""Rank-constraint matrices over moment blocks and their numeric rank tests.

For moments realizable on a DAG g, the matrix over rows ``pa(v) + (v,)`` and
columns ``[S_{.,nd(v)} | T_{., nd(v) x V}]`` has rank exactly ``|pa(v)|`` for
every vertex v, and that family of rank conditions characterizes realizability
(for positive definite S). The builders here construct those matrices plus
the derived variants used for sources, polytrees, and vertex-set contractions.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .graph import Dag, VertexSet
from .moments import Cov, MomentPair, flatten, r_block, submatrix


class NotPositiveDefiniteError(ValueError):
    """A covariance matrix required to be positive definite is not."""


class RankComputationError(RuntimeError):
    """The SVD failed to converge for a named constraint matrix."""


ColumnLabel = int | tuple[int, int]


@dataclass(frozen=True)
class ConstraintMatrix:
    """A labeled dense matrix with the rank it is expected to have.

    Column labels are vertex labels for S-columns and ``(w, z)`` pairs for
    third-moment columns. ``expected_rank`` is an upper bound certificate for
    the contraction matrices and an exact value for the per-vertex matrices.
    """

    name: str
    values: np.ndarray
    row_labels: tuple[int, ...]
    col_labels: tuple[ColumnLabel, ...]
    expected_rank: int

    def __post_init__(self) -> None:
        a = np.asarray(self.values, dtype=float)
        if a.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(
                f"{self.name}: values shape {a.shape} does not match labels "
                f"({len(self.row_labels)}, {len(self.col_labels)})"
            )
        if not 0 <= self.expected_rank <= min(a.shape):
            raise ValueError(
                f"{self.name}: expected rank {self.expected_rank} outside 0..{min(a.shape)}"
            )
        object.__setattr__(self, "values", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class RankReport:
    """Singular values and the numeric rank decision they imply."""

    singular_values: np.ndarray
    rank: int
    gap_ratio: float
    tolerance: float

    def to_json(self) -> dict:
        return {
            "numeric_rank": self.rank,
            "singular_values": [float(s) for s in self.singular_values],
            "gap_ratio": self.gap_ratio,
            "tolerance": self.tolerance,
        }


def default_tolerance(shape: tuple[int, int]) -> float:
    """Relative singular-value cutoff: max(rows, cols) * eps * 2**10."""
    return max(shape) * np.finfo(float).eps * 2.0**10


def numeric_rank(c: ConstraintMatrix, tol: float | None = None) -> RankReport:
    """Count singular values above ``tol * sigma_1``.

    ``gap_ratio`` is ``sigma_{r+1} / sigma_r`` at the decided rank r, and 0
    when the matrix is (numerically) full rank or has rank 0.
    """
    a = c.values
    if min(a.shape) == 0:
        return RankReport(np.zeros(0), 0, 0.0, tol if tol is not None else 0.0)
    if tol is None:
        tol = default_tolerance(a.shape)
    if not 0.0 < tol < 1.0:
        raise ValueError(f"rank tolerance must lie in (0, 1), got {tol}")
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise RankComputationError(f"SVD did not converge for {c.name}") from exc
    if s[0] == 0.0:
        return RankReport(s, 0, 0.0, tol)
    rank = int(np.sum(s > tol * s[0]))
    gap = float(s[rank] / s[rank - 1]) if 0 < rank < len(s) else 0.0
    return RankReport(s, rank, gap, tol)


# -- matrix builders -----------------------------------------------------------


def _t_columns(m: MomentPair, rows: VertexSet, pairs: list[tuple[int, int]]) -> np.ndarray:
    cols = np.empty((len(rows), len(pairs)))
    for c, (w, z) in enumerate(pairs):
        cols[:, c : c + 1] = flatten(m.t3, rows, (w,), (z,))
    return cols


def build_mv(g: Dag, m: MomentPair, v: int, dedup: bool = False) -> ConstraintMatrix:
    """Per-vertex constraint matrix with rows pa(v) and v over nd(v) blocks.

    Expected rank is ``|pa(v)|``. With ``dedup=True`` the third-moment columns
    duplicated by tensor symmetry are dropped; this never changes the rank.
    """
    if g.n != m.n:
        raise ValueError(f"graph has n={g.n}, moments have n={m.n}")
    pa = g.parents(v)
    nd = g.nondescendants(v)
    rows = pa + (v,)
    t_pairs = [(w, z) for w in nd for z in g.vertices]
    if dedup:
        nd_set = set(nd)
        t_pairs = [(w, z) for w, z in t_pairs if w <= z or z not in nd_set]
    values = np.hstack([submatrix(m.cov, rows, nd), _t_columns(m, rows, t_pairs)])
    return ConstraintMatrix(
        name=f"M_v(v={v})",
        values=values,
        row_labels=rows,
        col_labels=tuple(nd) + tuple(t_pairs),
        expected_rank=len(pa),
    )


def build_mv_reduced(g: Dag, m: MomentPair, v: int) -> ConstraintMatrix:
    """Variant of :func:`build_mv` with third-moment columns restricted to
    pairs ``(w, z)`` with w in nd(v) and z in nd(w) or {v, w}. The rank
    condition is unchanged.
    """
    if g.n != m.n:
        raise ValueError(f"graph has n={g.n}, moments have n={m.n}")
    pa = g.parents(v)
    nd = g.nondescendants(v)
    rows = pa + (v,)
    t_pairs = [
        (w, z)
        for w in nd
        for z in sorted(set(g.nondescendants(w)) | {v, w})
    ]
    values = np.hstack([submatrix(m.cov, rows, nd), _t_columns(m, rows, t_pairs)])
    return ConstraintMatrix(
        name=f"M_v'(v={v})",
        values=values,
        row_labels=rows,
        col_labels=tuple(nd) + tuple(t_pairs),
        expected_rank=len(pa),
    )


def build_generalized(g: Dag, m: MomentPair, v: int, a: Iterable[int]) -> ConstraintMatrix:
    """Contraction matrix for the vertex set ``{v} | a``.

    Rows are the generalized parents of ``{v} | a`` followed by v; columns run
    over the common nondescendants. The last row lies in the span of the
    others, so ``expected_rank`` records the upper bound ``rows - 1`` (clamped
    to the column count); use :func:`last_row_in_span` for the actual check.
    """
    aset = tuple(sorted(set(a)))
    if v in aset:
        raise ValueError(f"vertex v={v} must not lie in the contracted set {aset}")
    group = (v,) + aset
    gpa = g.generalized_parents(group)
    gnd = g.generalized_nondescendants(group)
    rows = gpa + (v,)
    values = r_block(m, rows, gnd)
    t_pairs = [(w, z) for w in gnd for z in g.vertices]
    return ConstraintMatrix(
        name=f"M(v={v}, A={list(aset)})",
        values=values,
        row_labels=rows,
        col_labels=tuple(gnd) + tuple(t_pairs),
        expected_rank=min(len(rows) - 1, values.shape[1]),
    )


def build_source_matrix(m: MomentPair, w: int, v: int) -> ConstraintMatrix:
    """The 2 x 2 matrix ``[s_ww t_www; s_vw t_vww]``; rank 1 when w is a source."""
    if v == w:
        raise ValueError("source test needs two distinct vertices")
    values = np.array(
        [
            [m.cov[w, w], m.t3[w, w, w]],
            [m.cov[v, w], m.t3[v, w, w]],
        ]
    )
    return ConstraintMatrix(
        name=f"source(w={w}, v={v})",
        values=values,
        row_labels=(w, v),
        col_labels=(w, (w, w)),
        expected_rank=1,
    )


def build_trek_matrix(g: Dag, m: MomentPair, v: int, w: int) -> ConstraintMatrix:
    """Two-row matrix over trek-aligned columns for an adjacent polytree pair.

    S-columns are vertices k whose treks to v and to w share a top; T-columns
    are pairs (l, m) whose 3-treks with v and with w share a top. All 2-minors
    vanish on exact polytree moments, so the expected rank is 1.
    """
    if not g.is_polytree():
        raise ValueError("trek matrices are only defined on polytrees")
    if (v, w) not in g.edges and (w, v) not in g.edges:
        raise ValueError(f"vertices {v} and {w} are not adjacent in the skeleton")
    s_cols = []
    for k in g.vertices:
        tv, tw = g.trek_top(v, k), g.trek_top(w, k)
        if tv is not None and tv == tw:
            s_cols.append(k)
    t_pairs = []
    for l in g.vertices:
        for mm in range(l, g.n + 1):
            tv, tw = g.trek_top3(v, l, mm), g.trek_top3(w, l, mm)
            if tv is not None and tv == tw:
                t_pairs.append((l, mm))
    values = np.hstack(
        [submatrix(m.cov, (v, w), s_cols), _t_columns(m, (v, w), t_pairs)]
    )
    return ConstraintMatrix(
        name=f"trek(v={v}, w={w})",
        values=values,
        row_labels=(v, w),
        col_labels=tuple(s_cols) + tuple(t_pairs),
        expected_rank=min(1, values.shape[1]),
    )


# -- span and definiteness checks ----------------------------------------------


@dataclass(frozen=True)
class SpanCheck:
    """Least-squares test of whether the last row lies in the other rows' span."""

    in_span: bool
    residual: float
    coefficients: np.ndarray


def last_row_in_span(c: ConstraintMatrix, tol: float = 1e-9) -> SpanCheck:
    """Accept when the least-squares residual is at most ``tol`` times the
    last row's norm."""
    a = c.values
    if a.shape[0] < 1:
        raise ValueError(f"{c.name}: no rows")
    top, last = a[:-1], a[-1]
    if top.shape[0] == 0 or a.shape[1] == 0:
        # Nothing to project onto: in span only if the last row is zero.
        resid = float(np.linalg.norm(last))
        return SpanCheck(resid == 0.0, resid, np.zeros(top.shape[0]))
    coeffs, *_ = np.linalg.lstsq(top.T, last, rcond=None)
    resid = float(np.linalg.norm(last - top.T @ coeffs))
    return SpanCheck(resid <= tol * np.linalg.norm(last), resid, coeffs)


def check_positive_definite(cov: Cov, tol: float | None = None) -> None:
    """Require the smallest eigenvalue to exceed ``tol`` times the largest."""
    if tol is None:
        tol = default_tolerance(cov.values.shape)
    eigs = np.linalg.eigvalsh(cov.values)
    if eigs.size == 0 or eigs[0] <= tol * max(eigs[-1], 0.0) or eigs[-1] <= 0.0:
        raise NotPositiveDefiniteError(
            f"covariance is not numerically positive definite "
            f"(eigenvalue range [{eigs[0]:.3e}, {eigs[-1]:.3e}])"
        )


# -- the per-vertex verification sweep -------------------------------------------


@dataclass(frozen=True)
class VertexCheck:
    vertex: int
    expected_rank: int
    report: RankReport
    passed: bool

    def to_json(self) -> dict:
        return {
            "v": self.vertex,
            "expected_rank": self.expected_rank,
            "numeric_rank": self.report.rank,
            "singular_values": [float(s) for s in self.report.singular_values],
            "gap_ratio": self.report.gap_ratio,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: list[VertexCheck] = field(default_factory=list)
    accepted: bool = False

    def to_json(self) -> dict:
        return {
            "vertices": [c.to_json() for c in self.checks],
            "accepted": self.accepted,
        }

    def failing_vertices(self) -> list[int]:
        return [c.vertex for c in self.checks if not c.passed]


def verify_graph(g: Dag, m: MomentPair, tol: float | None = None) -> VerificationReport:
    """Run the per-vertex rank test for every vertex of g.

    Accepts exactly when every matrix has numeric rank ``|pa(v)|``. S must be
    numerically positive definite; otherwise the rank characterization does
    not apply and a :class:`NotPositiveDefiniteError` is raised.
    """
    if g.n != m.n:
        raise ValueError(f"graph has n={g.n}, moments have n={m.n}")
    check_positive_definite(m.cov, tol)
    checks = []
    for v in g.vertices:
        c = build_mv(g, m, v)
        report = numeric_rank(c, tol)
        checks.append(VertexCheck(v, c.expected_rank, report, report.rank == c.expected_rank))
    return VerificationReport(checks, all(c.passed for c in checks))
