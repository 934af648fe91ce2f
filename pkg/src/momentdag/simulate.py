"""Sampling from linear structural models with non-Gaussian noise.

All randomness flows through numpy's counter-based Philox generator seeded
with ``SeedSequence``; experiment cells derive independent streams with
``derive_rng(seed, *path)`` so parallel or reordered execution cannot change
results.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .graph import Dag
from .moments import (
    Cov,
    EdgeWeights,
    MomentPair,
    NoiseMoments,
    Tensor3,
    distinct_triples,
)


class DegenerateDataWarning(UserWarning):
    """Sample data has a zero-variance column."""


def make_rng(seed: int | np.random.Generator) -> np.random.Generator:
    """Philox generator for an integer seed; pass through existing generators."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent child generator for an experiment cell.

    The stream is keyed by the base seed and the integer path (for example
    ``(cell, run)``), so each cell is reproducible in isolation.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


# -- noise distributions --------------------------------------------------------


@dataclass(frozen=True)
class GammaNoise:
    """Gamma(shape, scale) shifted by -shape*scale so the mean is zero."""

    shape: float = 5.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("gamma noise needs positive shape and scale")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.shape, self.scale, size) - self.shape * self.scale

    def moments(self) -> tuple[float, float]:
        return self.shape * self.scale**2, 2.0 * self.shape * self.scale**3

    def to_json(self) -> dict:
        return {"dist": "gamma", "shape": self.shape, "scale": self.scale, "center": True}


@dataclass(frozen=True)
class UniformNoise:
    """Uniform on (-half_width, half_width)."""

    half_width: float = 1.0

    def __post_init__(self) -> None:
        if self.half_width <= 0:
            raise ValueError("uniform noise needs a positive half width")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(-self.half_width, self.half_width, size)

    def moments(self) -> tuple[float, float]:
        return self.half_width**2 / 3.0, 0.0

    def to_json(self) -> dict:
        return {"dist": "uniform", "half_width": self.half_width}


@dataclass(frozen=True)
class RademacherNoise:
    """Equal-probability +/- scale."""

    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("rademacher noise needs a positive scale")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.scale * (2.0 * rng.integers(0, 2, size) - 1.0)

    def moments(self) -> tuple[float, float]:
        return self.scale**2, 0.0

    def to_json(self) -> dict:
        return {"dist": "rademacher", "scale": self.scale}


@dataclass(frozen=True)
class TwoPointNoise:
    """Asymmetric two-point distribution with mean zero and variance scale**2.

    Takes ``scale * sqrt((1-p)/p)`` with probability p, else the negative
    value balancing the mean; the third moment is
    ``scale**3 (1 - 2p) / sqrt(p (1-p))``.
    """

    p: float = 0.2
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise ValueError("two-point probability must lie strictly in (0, 1)")
        if self.scale <= 0:
            raise ValueError("two-point noise needs a positive scale")

    def _values(self) -> tuple[float, float]:
        hi = self.scale * sqrt((1.0 - self.p) / self.p)
        lo = -self.scale * sqrt(self.p / (1.0 - self.p))
        return hi, lo

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        hi, lo = self._values()
        return np.where(rng.random(size) < self.p, hi, lo)

    def moments(self) -> tuple[float, float]:
        mu3 = self.scale**3 * (1.0 - 2.0 * self.p) / sqrt(self.p * (1.0 - self.p))
        return self.scale**2, mu3

    def to_json(self) -> dict:
        return {"dist": "two_point", "p": self.p, "scale": self.scale}


NoiseDist = GammaNoise | UniformNoise | RademacherNoise | TwoPointNoise


@dataclass(frozen=True)
class NoiseSpec:
    """Per-vertex noise distributions, all mean-zero with finite third moments."""

    dists: tuple[NoiseDist, ...]

    @property
    def n(self) -> int:
        return len(self.dists)

    @classmethod
    def gamma(cls, n: int, shape: float = 5.0, scale: float = 1.0) -> NoiseSpec:
        return cls(tuple(GammaNoise(shape, scale) for _ in range(n)))

    def moments(self) -> NoiseMoments:
        pairs = [d.moments() for d in self.dists]
        return NoiseMoments(
            np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
        )

    def sample(self, rng: np.random.Generator, n_samples: int) -> np.ndarray:
        out = np.empty((n_samples, self.n))
        for col, dist in enumerate(self.dists):
            out[:, col] = dist.sample(rng, n_samples)
        return out

    def to_json(self) -> list[dict]:
        return [{"v": v + 1, **d.to_json()} for v, d in enumerate(self.dists)]

    @classmethod
    def from_json(cls, data: list[dict]) -> NoiseSpec:
        by_vertex: dict[int, NoiseDist] = {}
        for item in data:
            v = int(item["v"])
            kind = item["dist"]
            if kind == "gamma":
                if not item.get("center", True):
                    raise ValueError("gamma noise must be centered (mean zero)")
                dist: NoiseDist = GammaNoise(
                    float(item.get("shape", 5.0)), float(item.get("scale", 1.0))
                )
            elif kind == "uniform":
                dist = UniformNoise(float(item.get("half_width", 1.0)))
            elif kind == "rademacher":
                dist = RademacherNoise(float(item.get("scale", 1.0)))
            elif kind == "two_point":
                dist = TwoPointNoise(
                    float(item.get("p", 0.2)), float(item.get("scale", 1.0))
                )
            else:
                raise ValueError(f"unknown noise distribution {kind!r}")
            if v in by_vertex:
                raise ValueError(f"duplicate noise entry for vertex {v}")
            by_vertex[v] = dist
        n = len(by_vertex)
        if sorted(by_vertex) != list(range(1, n + 1)):
            raise ValueError("noise spec must cover vertices 1..n exactly once")
        return cls(tuple(by_vertex[v] for v in range(1, n + 1)))


# -- sampling and estimation ------------------------------------------------------


def sample_lingam(
    g: Dag,
    lam: EdgeWeights,
    noise: NoiseSpec,
    n_samples: int,
    seed: int | np.random.Generator,
) -> np.ndarray:
    """Draw ``n_samples`` independent rows of X by propagating noise along g."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")
    if noise.n != g.n:
        raise ValueError(f"noise spec is for n={noise.n}, graph has n={g.n}")
    rng = make_rng(seed)
    eps = noise.sample(rng, n_samples)
    x = np.empty_like(eps)
    for v in g.topological_order():
        col = eps[:, v - 1].copy()
        for u in g.parents(v):
            col += lam[u, v] * x[:, u - 1]
        x[:, v - 1] = col
    return x


def empirical_moments(x: np.ndarray, chunk_rows: int | None = None) -> MomentPair:
    """Raw second and third moments of the column-centered sample.

    Uses 1/N normalization. The third-moment tensor is accumulated one
    distinct sorted-index entry at a time, so it is symmetric exactly.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D sample array with at least two rows")
    n_samples, n = x.shape
    xc = x - x.mean(axis=0)
    dead = [int(c) + 1 for c in range(n) if not np.any(xc[:, c])]
    if dead:
        warnings.warn(
            f"zero-variance sample columns: {dead}", DegenerateDataWarning, stacklevel=2
        )
    cov = xc.T @ xc / n_samples
    cov = (cov + cov.T) / 2.0
    triples = distinct_triples(n)
    ii, jj, kk = triples[:, 0], triples[:, 1], triples[:, 2]
    if chunk_rows is None:
        chunk_rows = max(1, 8_000_000 // max(len(triples), 1))
    acc = np.zeros(len(triples))
    for start in range(0, n_samples, chunk_rows):
        xs = xc[start : start + chunk_rows]
        acc += (xs[:, ii] * xs[:, jj] * xs[:, kk]).sum(axis=0)
    return MomentPair(Cov(cov), Tensor3(n, acc / n_samples))


def random_parameters(
    g: Dag,
    seed: int | np.random.Generator,
    coeff_range: tuple[float, float] = (0.3, 1.0),
    skew_floor: float = 0.2,
) -> tuple[EdgeWeights, NoiseMoments]:
    """Generic parameter draw: coefficients bounded away from zero, skewed noise.

    Coefficient magnitudes are uniform on ``coeff_range`` with random sign,
    variances are uniform on [0.5, 2], and third-moment magnitudes are at
    least ``skew_floor``.
    """
    lo, hi = coeff_range
    if not 0.0 < lo <= hi:
        raise ValueError(f"coefficient range must satisfy 0 < lo <= hi, got {coeff_range}")
    if skew_floor <= 0:
        raise ValueError(f"skew floor must be positive, got {skew_floor}")
    rng = make_rng(seed)
    values = {}
    for j, i in sorted(g.edges):
        sign = 1.0 - 2.0 * rng.integers(0, 2)
        values[(j, i)] = sign * rng.uniform(lo, hi)
    omega2 = rng.uniform(0.5, 2.0, g.n)
    signs = 1.0 - 2.0 * rng.integers(0, 2, g.n)
    omega3 = signs * rng.uniform(skew_floor, skew_floor + 1.0, g.n)
    return EdgeWeights(g.n, values), NoiseMoments(omega2, omega3)
