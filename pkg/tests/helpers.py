"""Shared graphs, generators, and independent oracles for the test suite.

Oracles here recompute expected quantities by a different route than the
library (explicit closures, dense inversion, brute-force enumeration) so the
tests are not circular.
"""

from __future__ import annotations

import itertools

import numpy as np

import momentdag as md


def fig1() -> md.Dag:
    """Complete DAG on three vertices: 1->2, 1->3, 2->3."""
    return md.Dag(3, [(1, 2), (1, 3), (2, 3)])


def line3() -> md.Dag:
    """Path 1->2->3."""
    return md.Dag(3, [(1, 2), (2, 3)])


def complete_dag(n: int) -> md.Dag:
    return md.Dag(n, [(j, i) for j in range(1, n + 1) for i in range(j + 1, n + 1)])


def fig5() -> md.Dag:
    return complete_dag(5)


def random_dag(rng: np.random.Generator, n: int, p: float = 0.5) -> md.Dag:
    """Random DAG: random order, each forward pair an edge with probability p."""
    order = rng.permutation(np.arange(1, n + 1))
    edges = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                edges.append((int(order[a]), int(order[b])))
    return md.Dag(n, edges)


def random_polytree(rng: np.random.Generator, n: int) -> md.Dag:
    """Random tree skeleton with every edge oriented at random."""
    edges = []
    for v in range(2, n + 1):
        u = int(rng.integers(1, v))
        if rng.random() < 0.5:
            edges.append((u, v))
        else:
            edges.append((v, u))
    return md.Dag(n, edges)


def all_dags(n: int):
    """Every labeled DAG on vertices 1..n."""
    pairs = [(j, i) for j in range(1, n + 1) for i in range(1, n + 1) if j != i]
    for mask in range(2 ** len(pairs)):
        edges = [pairs[b] for b in range(len(pairs)) if mask >> b & 1]
        if any((i, j) in edges for j, i in edges):
            continue
        try:
            yield md.Dag(n, edges)
        except md.CycleError:
            continue


def reachability_oracle(n: int, edges) -> np.ndarray:
    """Transitive closure by repeated boolean matrix powers."""
    adj = np.zeros((n, n), dtype=bool)
    for j, i in edges:
        adj[j - 1, i - 1] = True
    reach = adj.copy()
    for _ in range(n):
        reach = reach | (reach @ adj)
    return reach


def trek_top_oracle(g: md.Dag, v: int, w: int) -> int | None:
    """Brute force: the unique common ancestor whose two paths share no edge.

    Enumerates every vertex t, takes the unique directed paths t ~> v and
    t ~> w in the polytree, and keeps t when those paths are edge-disjoint.
    """
    tops = []
    for t in g.vertices:
        pv = _unique_path(g, t, v)
        pw = _unique_path(g, t, w)
        if pv is None or pw is None:
            continue
        ev = set(zip(pv, pv[1:]))
        ew = set(zip(pw, pw[1:]))
        if not ev & ew:
            tops.append(t)
    assert len(tops) <= 1, f"polytree should admit at most one simple trek, got {tops}"
    return tops[0] if tops else None


def _unique_path(g: md.Dag, s: int, t: int) -> list[int] | None:
    if s == t:
        return [s]
    prev = {s: 0}
    stack = [s]
    while stack:
        u = stack.pop()
        for c in g.children(u):
            if c not in prev:
                prev[c] = u
                stack.append(c)
    if t not in prev:
        return None
    path = [t]
    while path[-1] != s:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def forward_moments_oracle(g: md.Dag, lam: md.EdgeWeights, noise: md.NoiseMoments):
    """Dense-inversion triple-sum evaluation of the model moments."""
    n = g.n
    b = np.linalg.inv(np.eye(n) - lam.matrix())
    w2, w3 = noise.omega2, noise.omega3
    s = np.zeros((n, n))
    t = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            s[i, j] = sum(w2[u] * b[u, i] * b[u, j] for u in range(n))
            for k in range(n):
                t[i, j, k] = sum(w3[u] * b[u, i] * b[u, j] * b[u, k] for u in range(n))
    return s, t


def substitution_coefficients(
    g: md.Dag, lam: md.EdgeWeights, v: int, a
) -> dict[int, float]:
    """Eliminate the vertices of `a` from v's structural equation.

    Repeatedly replaces any remaining coefficient on u in `a` by coefficients
    on u's parents (multiplying through by the edge weights); acyclicity
    guarantees termination. The result expresses X_v as a combination of
    variables outside `a` plus noise independent of the common nondescendants.
    """
    aset = set(a)
    coeffs = {u: lam[u, v] for u in g.parents(v)}
    while True:
        inside = [u for u in coeffs if u in aset]
        if not inside:
            return coeffs
        u = inside[0]
        cu = coeffs.pop(u)
        for x in g.parents(u):
            coeffs[x] = coeffs.get(x, 0.0) + cu * lam[x, u]


def max_normalized_minor(cm: md.ConstraintMatrix) -> float:
    """Largest |det| over all full-height column choices, with unit columns."""
    a = cm.values
    k, c = a.shape
    if c < k or k == 0:
        return 0.0
    norms = np.linalg.norm(a, axis=0)
    norms[norms == 0.0] = 1.0
    b = (a / norms).T  # rows of b are the normalized columns
    picks = np.array(list(itertools.combinations(range(c), k)))
    dets = np.linalg.det(b[picks])
    return float(np.max(np.abs(dets)))


def count_inversions(values) -> int:
    """Adjacent increases in a sequence expected to be nonincreasing."""
    return sum(1 for a, b in zip(values, values[1:]) if b > a)


def normalized_det2(mat: np.ndarray) -> float:
    """|det| of a 2 x 2 matrix after scaling its columns to unit norm."""
    norms = np.linalg.norm(mat, axis=0)
    norms[norms == 0.0] = 1.0
    return float(abs(np.linalg.det(mat / norms)))
