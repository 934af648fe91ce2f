"""Second- and third-order moment containers and the model parametrization.

The covariance matrix is ``s_ij = E[X_i X_j]`` and the third-moment tensor is
``t_ijk = E[X_i X_j X_k]`` for a mean-zero random vector X that solves the
structural equations ``X_v = sum_u lambda_uv X_u + eps_v`` on a DAG.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .graph import Dag, VertexSet


@lru_cache(maxsize=None)
def _sym_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lookup table from (i, j, k) to the packed position of its sorted triple.

    Returns ``(lut, triples)`` where ``lut`` has shape (n, n, n) and
    ``triples`` lists the distinct sorted triples (0-based) in packed order.
    """
    lut = np.empty((n, n, n), dtype=np.intp)
    triples = []
    pos = 0
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                for perm in set(permutations((i, j, k))):
                    lut[perm] = pos
                triples.append((i, j, k))
                pos += 1
    return lut, np.asarray(triples, dtype=np.intp).reshape(pos, 3)


def packed_size(n: int) -> int:
    """Number of distinct entries of a symmetric order-3 tensor on n indices."""
    return n * (n + 1) * (n + 2) // 6


def distinct_triples(n: int) -> np.ndarray:
    """The sorted 0-based index triples of the packed storage, in order."""
    return _sym_index(n)[1]


class Cov:
    """Symmetric second-moment matrix."""

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        a = np.asarray(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"covariance must be square, got shape {a.shape}")
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-8 * max(scale, 1.0)):
            raise ValueError("covariance matrix is not symmetric")
        self.values = a

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        return float(self.values[i - 1, j - 1])


class Tensor3:
    """Fully symmetric order-3 tensor stored as its distinct sorted-index entries.

    Storage keeps one value per index multiset, so symmetry under all six
    index permutations holds exactly by construction.
    """

    __slots__ = ("_n", "packed")

    def __init__(self, n: int, packed) -> None:
        p = np.asarray(packed, dtype=float)
        if p.shape != (packed_size(n),):
            raise ValueError(
                f"packed storage for n={n} needs {packed_size(n)} entries, got {p.shape}"
            )
        self._n = n
        self.packed = p

    @property
    def n(self) -> int:
        return self._n

    @classmethod
    def zeros(cls, n: int) -> Tensor3:
        return cls(n, np.zeros(packed_size(n)))

    @classmethod
    def from_full(cls, full) -> Tensor3:
        """Pack a dense array, validating symmetry up to round-off."""
        a = np.asarray(full, dtype=float)
        if a.ndim != 3 or len(set(a.shape)) != 1:
            raise ValueError(f"expected a cubic array, got shape {a.shape}")
        n = a.shape[0]
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
            if not np.allclose(a, a.transpose(perm), rtol=0.0, atol=1e-8 * max(scale, 1.0)):
                raise ValueError("tensor is not symmetric under index permutation")
        _, triples = _sym_index(n)
        return cls(n, a[triples[:, 0], triples[:, 1], triples[:, 2]])

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[tuple[int, int, int, float]]) -> Tensor3:
        """Build from 1-based ``(i, j, k, value)`` items; missing entries are 0."""
        lut, _ = _sym_index(n)
        packed = np.zeros(packed_size(n))
        for i, j, k, val in entries:
            if not all(1 <= x <= n for x in (i, j, k)):
                raise ValueError(f"tensor index ({i}, {j}, {k}) outside 1..{n}")
            packed[lut[i - 1, j - 1, k - 1]] = float(val)
        return cls(n, packed)

    def __getitem__(self, ijk: tuple[int, int, int]) -> float:
        i, j, k = ijk
        lut, _ = _sym_index(self._n)
        return float(self.packed[lut[i - 1, j - 1, k - 1]])

    def full(self) -> np.ndarray:
        """Materialize the dense (n, n, n) array."""
        lut, _ = _sym_index(self._n)
        return self.packed[lut]

    def entries(self) -> list[tuple[int, int, int, float]]:
        """Distinct entries as 1-based sorted-index items."""
        _, triples = _sym_index(self._n)
        return [
            (int(i) + 1, int(j) + 1, int(k) + 1, float(v))
            for (i, j, k), v in zip(triples, self.packed)
        ]


class EdgeWeights:
    """Structural coefficients ``lambda_ji`` supported on a set of edges.

    Entries off the declared support are identically zero.
    """

    __slots__ = ("_n", "_values")

    def __init__(self, n: int, values: Mapping[tuple[int, int], float] = ()) -> None:
        self._n = n
        vals: dict[tuple[int, int], float] = {}
        for (j, i), lam in dict(values).items():
            if not (1 <= j <= n and 1 <= i <= n) or j == i:
                raise ValueError(f"bad edge ({j}, {i}) for n={n}")
            vals[(int(j), int(i))] = float(lam)
        self._values = vals

    @property
    def n(self) -> int:
        return self._n

    @property
    def support(self) -> frozenset[tuple[int, int]]:
        return frozenset(self._values)

    def __getitem__(self, ji: tuple[int, int]) -> float:
        return self._values.get((ji[0], ji[1]), 0.0)

    def items(self) -> list[tuple[int, int, float]]:
        return [(j, i, v) for (j, i), v in sorted(self._values.items())]

    def matrix(self) -> np.ndarray:
        """Dense n x n matrix with ``lambda_ji`` at (j-1, i-1)."""
        lam = np.zeros((self._n, self._n))
        for (j, i), v in self._values.items():
            lam[j - 1, i - 1] = v
        return lam

    @classmethod
    def from_matrix(cls, mat, edges: Iterable[tuple[int, int]] | None = None) -> EdgeWeights:
        a = np.asarray(mat, dtype=float)
        n = a.shape[0]
        values = {}
        if edges is None:
            js, is_ = np.nonzero(a)
            pairs = [(int(j) + 1, int(i) + 1) for j, i in zip(js, is_)]
        else:
            pairs = [(j, i) for j, i in edges]
        for j, i in pairs:
            values[(j, i)] = float(a[j - 1, i - 1])
        return cls(n, values)


@dataclass(frozen=True)
class NoiseMoments:
    """Per-vertex noise variance (positive) and third moment."""

    omega2: np.ndarray
    omega3: np.ndarray

    def __post_init__(self) -> None:
        w2 = np.asarray(self.omega2, dtype=float)
        w3 = np.asarray(self.omega3, dtype=float)
        if w2.ndim != 1 or w3.shape != w2.shape:
            raise ValueError("omega2 and omega3 must be 1-D arrays of equal length")
        if np.any(w2 <= 0):
            raise ValueError("every noise variance must be positive")
        object.__setattr__(self, "omega2", w2)
        object.__setattr__(self, "omega3", w3)

    @property
    def n(self) -> int:
        return self.omega2.shape[0]


@dataclass(frozen=True)
class MomentPair:
    """A covariance matrix and a third-moment tensor of matching dimension."""

    cov: Cov
    t3: Tensor3

    def __post_init__(self) -> None:
        if self.cov.n != self.t3.n:
            raise ValueError(
                f"dimension mismatch: covariance n={self.cov.n}, tensor n={self.t3.n}"
            )

    @property
    def n(self) -> int:
        return self.cov.n

    def restrict(self, vertices: Iterable[int]) -> MomentPair:
        """Moments of the sub-vector indexed by `vertices` (in the given order)."""
        idx = [v - 1 for v in vertices]
        if not idx:
            raise ValueError("cannot restrict to an empty vertex set")
        sub_cov = self.cov.values[np.ix_(idx, idx)]
        sub_full = self.t3.full()[np.ix_(idx, idx, idx)]
        return MomentPair(Cov(sub_cov), Tensor3.from_full(sub_full))


# -- the forward parametrization ---------------------------------------------


def structural_inverse(g: Dag, lam: EdgeWeights) -> np.ndarray:
    """The matrix B with ``B[u, i]`` summing edge-weight products over paths u ~> i.

    B equals the inverse of (I - Lambda); it is accumulated column by column
    along a topological order, which is exact for acyclic support (no general
    matrix inversion is involved).
    """
    n = g.n
    if lam.n != n:
        raise ValueError(f"edge weights are for n={lam.n}, graph has n={n}")
    extra = lam.support - g.edges
    if extra:
        raise ValueError(f"edge weights off the graph support: {sorted(extra)}")
    b = np.zeros((n, n))
    for v in g.topological_order():
        b[v - 1, v - 1] = 1.0
        for u in g.parents(v):
            b[:, v - 1] += lam[u, v] * b[:, u - 1]
    return b


def forward_moments(g: Dag, lam: EdgeWeights, noise: NoiseMoments) -> MomentPair:
    """Exact model moments for the structural equations on g.

    ``S = B^T diag(omega2) B`` and ``t_ijk = sum_u omega3_u B_ui B_uj B_uk``
    with B the path-sum matrix of :func:`structural_inverse`.
    """
    if noise.n != g.n:
        raise ValueError(f"noise moments are for n={noise.n}, graph has n={g.n}")
    b = structural_inverse(g, lam)
    s = (b.T * noise.omega2) @ b
    s = (s + s.T) / 2.0
    _, triples = _sym_index(g.n)
    ii, jj, kk = triples[:, 0], triples[:, 1], triples[:, 2]
    packed = (noise.omega3[:, None] * b[:, ii] * b[:, jj] * b[:, kk]).sum(axis=0)
    return MomentPair(Cov(s), Tensor3(g.n, packed))


# -- block extraction ---------------------------------------------------------


def submatrix(cov: Cov, rows: Iterable[int], cols: Iterable[int]) -> np.ndarray:
    """The |rows| x |cols| block of S with the given 1-based labels."""
    ri = [v - 1 for v in rows]
    ci = [v - 1 for v in cols]
    return cov.values[np.ix_(ri, ci)]


def flatten(t: Tensor3, a: Iterable[int], b: Iterable[int], c: Iterable[int]) -> np.ndarray:
    """The |a| x (|b| |c|) unfolding with rows a and columns (b, c), b-major."""
    ai = np.asarray([v - 1 for v in a], dtype=np.intp)
    bi = np.asarray([v - 1 for v in b], dtype=np.intp)
    ci = np.asarray([v - 1 for v in c], dtype=np.intp)
    lut, _ = _sym_index(t.n)
    block = t.packed[lut[np.ix_(ai, bi, ci)]]
    return block.reshape(len(ai), len(bi) * len(ci))


def r_block(m: MomentPair, a: Iterable[int], b: Iterable[int]) -> np.ndarray:
    """The block ``[ S_{a,b} | T_{a, b x V} ]`` of width |b| (n + 1)."""
    a = tuple(a)
    b = tuple(b)
    return np.hstack([submatrix(m.cov, a, b), flatten(m.t3, a, b, m_vertices(m))])


def m_vertices(m: MomentPair) -> VertexSet:
    return tuple(range(1, m.n + 1))


# -- file format ---------------------------------------------------------------


def moments_to_json(m: MomentPair) -> dict:
    """JSON document: full S row-major plus distinct T entries ``[i, j, k, value]``."""
    return {
        "n": m.n,
        "S": [[float(x) for x in row] for row in m.cov.values],
        "T": [[i, j, k, v] for i, j, k, v in m.t3.entries()],
    }


def moments_from_json(data: dict) -> MomentPair:
    try:
        n = int(data["n"])
        s = np.asarray(data["S"], dtype=float)
        entries = [(int(i), int(j), int(k), float(v)) for i, j, k, v in data["T"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad moments document: {exc}") from exc
    if s.shape != (n, n):
        raise ValueError(f"S must be {n} x {n}, got shape {s.shape}")
    for i, j, k, _ in entries:
        if not (i <= j <= k):
            raise ValueError(f"T entry indices must be sorted, got ({i}, {j}, {k})")
    return MomentPair(Cov(s), Tensor3.from_entries(n, entries))


def save_moments(m: MomentPair, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(moments_to_json(m), fh)
        fh.write("\n")


def load_moments(path) -> MomentPair:
    with open(path, "r", encoding="utf-8") as fh:
        return moments_from_json(json.load(fh))
