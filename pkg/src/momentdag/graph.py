"""Directed acyclic graphs and the vertex-set queries used by moment constraints.

Vertices carry 1-based integer labels. An edge is an ordered pair ``(j, i)``
meaning ``j -> i``, i.e. j is a direct cause of i.
"""

from __future__ import annotations

import heapq
import json
import re
from collections.abc import Iterable
from functools import cached_property

VertexSet = tuple[int, ...]


class CycleError(ValueError):
    """Edge set admits no topological order."""

    def __init__(self, cycle: list[int]) -> None:
        self.cycle = list(cycle)
        witness = " -> ".join(str(v) for v in self.cycle)
        super().__init__(f"edge set contains a directed cycle: {witness}")


class Dag:
    """Immutable directed acyclic graph on vertices 1..n.

    Construction validates labels, rejects self-loops, collapses duplicate
    edges, and fails with a :class:`CycleError` (naming a witness cycle) if
    the edge set is not acyclic. All queries are read-only.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()) -> None:
        if n < 0:
            raise ValueError(f"vertex count must be nonnegative, got {n}")
        edge_set: set[tuple[int, int]] = set()
        for j, i in edges:
            j, i = int(j), int(i)
            if not (1 <= j <= n and 1 <= i <= n):
                raise ValueError(f"edge ({j}, {i}) uses a vertex outside 1..{n}")
            if j == i:
                raise ValueError(f"self-loop at vertex {j}")
            edge_set.add((j, i))
        self._n = n
        self._edges = frozenset(edge_set)
        self._child_map: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
        self._parent_map: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
        for j, i in sorted(edge_set):
            self._child_map[j].append(i)
            self._parent_map[i].append(j)
        self._topo = self._toposort()

    # -- basic structure ---------------------------------------------------

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self._edges

    @property
    def vertices(self) -> VertexSet:
        return tuple(range(1, self._n + 1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._n, self._edges))

    def __repr__(self) -> str:
        edges = ", ".join(f"{j}->{i}" for j, i in sorted(self._edges))
        return f"Dag(n={self._n}, edges=[{edges}])"

    def _check_vertex(self, v: int) -> int:
        if not (1 <= v <= self._n):
            raise ValueError(f"vertex {v} outside 1..{self._n}")
        return v

    def _toposort(self) -> list[int]:
        # Kahn's algorithm with a min-heap so equal in-degree ties break on
        # the smallest label, making the order deterministic.
        indeg = {v: len(self._parent_map[v]) for v in self.vertices}
        ready = [v for v in self.vertices if indeg[v] == 0]
        heapq.heapify(ready)
        order: list[int] = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self._child_map[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) < self._n:
            raise CycleError(self._find_cycle({v for v in self.vertices if indeg[v] > 0}))
        return order

    def _find_cycle(self, remaining: set[int]) -> list[int]:
        # Every vertex in `remaining` has an in-edge from `remaining`, so
        # walking parents must revisit a vertex.
        start = min(remaining)
        seen: dict[int, int] = {}
        path = [start]
        seen[start] = 0
        v = start
        while True:
            v = next(p for p in self._parent_map[v] if p in remaining)
            if v in seen:
                cycle = path[seen[v]:]
                cycle.reverse()
                return cycle + [cycle[0]]
            seen[v] = len(path)
            path.append(v)

    # -- combinatorial queries ----------------------------------------------

    def parents(self, v: int) -> VertexSet:
        """Vertices with an edge into v."""
        self._check_vertex(v)
        return tuple(self._parent_map[v])

    def children(self, v: int) -> VertexSet:
        """Vertices v has an edge into."""
        self._check_vertex(v)
        return tuple(self._child_map[v])

    @cached_property
    def _reachable(self) -> dict[int, frozenset[int]]:
        # reachable[v] = vertices w != v with a directed path v ~> w.
        # Walk the topological order backwards so children are finished first.
        out: dict[int, frozenset[int]] = {}
        for v in reversed(self._topo):
            acc: set[int] = set()
            for c in self._child_map[v]:
                acc.add(c)
                acc |= out[c]
            out[v] = frozenset(acc)
        return out

    def descendants(self, v: int) -> VertexSet:
        """Vertices reachable from v by a directed path, excluding v."""
        self._check_vertex(v)
        return tuple(sorted(self._reachable[v]))

    def nondescendants(self, v: int) -> VertexSet:
        """Vertices w != v with no directed path v ~> w."""
        self._check_vertex(v)
        reach = self._reachable[v]
        return tuple(w for w in self.vertices if w != v and w not in reach)

    def generalized_parents(self, a: Iterable[int]) -> VertexSet:
        """Vertices outside `a` with an edge pointing into `a`."""
        aset = {self._check_vertex(v) for v in a}
        if not aset:
            raise ValueError("generalized parents need a nonempty vertex set")
        out: set[int] = set()
        for v in aset:
            out.update(self._parent_map[v])
        return tuple(sorted(out - aset))

    def generalized_nondescendants(self, a: Iterable[int]) -> VertexSet:
        """Common nondescendants of every vertex in `a`."""
        aset = {self._check_vertex(v) for v in a}
        if not aset:
            raise ValueError("generalized nondescendants need a nonempty vertex set")
        common: set[int] | None = None
        for v in aset:
            nd = set(self.nondescendants(v))
            common = nd if common is None else common & nd
        assert common is not None
        return tuple(sorted(common))

    def sources(self) -> VertexSet:
        """Vertices with no incoming edges."""
        return tuple(v for v in self.vertices if not self._parent_map[v])

    def sinks(self) -> VertexSet:
        """Vertices with no outgoing edges."""
        return tuple(v for v in self.vertices if not self._child_map[v])

    def topological_order(self) -> list[int]:
        """Order with every edge pointing forward; smallest-label tie-break."""
        return list(self._topo)

    # -- polytree queries ---------------------------------------------------

    def is_polytree(self) -> bool:
        """True iff the undirected skeleton is a (connected) tree."""
        if self._n == 0:
            return False
        if len(self._edges) != self._n - 1:
            return False
        # n-1 edges + connected => acyclic skeleton.
        seen = {1}
        stack = [1]
        while stack:
            v = stack.pop()
            for w in self._child_map[v] + self._parent_map[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self._n

    def _skeleton_path(self, v: int, w: int) -> list[int]:
        # Unique path in the tree skeleton; caller guarantees a polytree.
        prev: dict[int, int] = {v: 0}
        stack = [v]
        while stack and w not in prev:
            u = stack.pop()
            for x in self._child_map[u] + self._parent_map[u]:
                if x not in prev:
                    prev[x] = u
                    stack.append(x)
        path = [w]
        while path[-1] != v:
            path.append(prev[path[-1]])
        path.reverse()
        return path

    def trek_top(self, v: int, w: int) -> int | None:
        """Common source of the unique simple trek between v and w, if any.

        Only defined on polytrees. The top is the unique vertex on the
        skeleton path between v and w with no path edge pointing into it;
        a collider anywhere on the path means no trek exists.
        """
        self._check_vertex(v)
        self._check_vertex(w)
        if not self.is_polytree():
            raise ValueError("trek tops are only defined on polytrees")
        if v == w:
            return v
        path = self._skeleton_path(v, w)
        top: int | None = None
        for idx, u in enumerate(path):
            indeg = 0
            if idx > 0 and (path[idx - 1], u) in self._edges:
                indeg += 1
            if idx + 1 < len(path) and (path[idx + 1], u) in self._edges:
                indeg += 1
            if indeg == 2:
                return None  # collider blocks every trek on this path
            if indeg == 0:
                top = u
        return top

    def trek_top3(self, v: int, l: int, m: int) -> int | None:
        """Common source of the simple 3-trek with sinks v, l, m, if any.

        Computed as the shared top of the pairwise treks (v, l) and (v, m):
        when those tops coincide, that vertex is the lowest common ancestor
        of all three sinks and hence the top of their simple 3-trek.
        """
        t1 = self.trek_top(v, l)
        t2 = self.trek_top(v, m)
        if t1 is None or t2 is None or t1 != t2:
            return None
        return t1


# -- parsing and serialization ----------------------------------------------

_EDGE_RE = re.compile(r"^(\d+)\s*->\s*(\d+)$")


def parse_dag(text: str) -> Dag:
    """Parse an edge-list document into a :class:`Dag`.

    The format is a line ``n=<int>`` followed by edges ``j -> i``; ``#``
    starts a comment. Edge items may also be separated by ``;`` or ``,``.
    """
    items: list[str] = []
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0]
        for chunk in re.split(r"[;,]", line):
            chunk = chunk.strip()
            if chunk:
                items.append(chunk)
    if not items:
        raise ValueError("empty graph document: expected a leading 'n=<int>' line")
    head = items[0].replace(" ", "")
    if not head.startswith("n="):
        raise ValueError(f"expected leading 'n=<int>', got {items[0]!r}")
    try:
        n = int(head[2:])
    except ValueError:
        raise ValueError(f"bad vertex count in {items[0]!r}") from None
    edges = []
    for item in items[1:]:
        match = _EDGE_RE.match(item)
        if match is None:
            raise ValueError(f"bad edge item {item!r}: expected 'j -> i'")
        edges.append((int(match.group(1)), int(match.group(2))))
    return Dag(n, edges)


def dag_from_json(data: dict) -> Dag:
    """Build a :class:`Dag` from ``{"n": int, "edges": [[j, i], ...]}``."""
    try:
        n = int(data["n"])
        edges = [(int(j), int(i)) for j, i in data.get("edges", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad graph document: {exc}") from exc
    return Dag(n, edges)


def dag_to_json(g: Dag) -> dict:
    return {"n": g.n, "edges": [list(e) for e in sorted(g.edges)]}


def load_dag(path) -> Dag:
    """Load a graph from a file holding either the text or the JSON format."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return dag_from_json(json.loads(text))
    return parse_dag(text)
