"""Constructive recovery of structural parameters from exact moments.

Given moments (S, T) and a candidate DAG, the edge coefficients into each
vertex solve the covariance block system ``S_{pa(v), pa(v)} x = S_{pa(v), v}``.
Transporting S and T back through ``I - Lambda`` must then produce diagonal
noise-moment arrays; the size of the off-diagonal residue is the membership
certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import (
    NotPositiveDefiniteError,
    VerificationReport,
    build_mv,
    check_positive_definite,
    verify_graph,
)
from .graph import Dag
from .moments import Cov, EdgeWeights, MomentPair, Tensor3


def recover_lambda(g: Dag, m: MomentPair, use_all_columns: bool = False) -> EdgeWeights:
    """Edge coefficients expressing each vertex's moment rows in its parents'.

    The default solves the always-well-posed covariance block system per
    vertex. ``use_all_columns=True`` instead least-squares fits the full
    constraint-matrix row (useful with noisy empirical moments).
    """
    if g.n != m.n:
        raise ValueError(f"graph has n={g.n}, moments have n={m.n}")
    values: dict[tuple[int, int], float] = {}
    for v in g.vertices:
        pa = g.parents(v)
        if not pa:
            continue
        if use_all_columns:
            c = build_mv(g, m, v)
            coeffs, *_ = np.linalg.lstsq(c.values[:-1].T, c.values[-1], rcond=None)
        else:
            pi = [u - 1 for u in pa]
            s_pp = m.cov.values[np.ix_(pi, pi)]
            s_pv = m.cov.values[pi, v - 1]
            try:
                coeffs = np.linalg.solve(s_pp, s_pv)
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefiniteError(
                    f"parent covariance block for vertex {v} is numerically singular"
                ) from exc
        for u, lam in zip(pa, coeffs):
            values[(u, v)] = float(lam)
    return EdgeWeights(g.n, values)


def compute_omega2(s: Cov, lam: EdgeWeights) -> np.ndarray:
    """The full matrix ``(I - Lambda)^T S (I - Lambda)``.

    Returned without any diagonality assumption so that the off-diagonal
    part can be tested.
    """
    if s.n != lam.n:
        raise ValueError(f"covariance has n={s.n}, edge weights have n={lam.n}")
    m = np.eye(s.n) - lam.matrix()
    return m.T @ s.values @ m


def compute_omega3(t: Tensor3, lam: EdgeWeights) -> np.ndarray:
    """The full tensor obtained by contracting ``I - Lambda`` onto every mode of T."""
    if t.n != lam.n:
        raise ValueError(f"tensor has n={t.n}, edge weights have n={lam.n}")
    m = np.eye(t.n) - lam.matrix()
    return np.einsum("abc,ai,bj,ck->ijk", t.full(), m, m, m, optimize=True)


def _relative_offdiag(full: np.ndarray, diag: np.ndarray, offdiag_mask: np.ndarray) -> float:
    max_off = float(np.max(np.abs(full[offdiag_mask]))) if offdiag_mask.any() else 0.0
    if max_off == 0.0:
        return 0.0
    max_diag = float(np.max(np.abs(diag)))
    return np.inf if max_diag == 0.0 else max_off / max_diag


@dataclass(frozen=True)
class IdentificationResult:
    """Recovered parameters plus how far the noise moments are from diagonal."""

    lam: EdgeWeights
    omega2: np.ndarray
    omega3: np.ndarray

    @property
    def omega2_diag(self) -> np.ndarray:
        return np.diag(self.omega2).copy()

    @property
    def omega3_diag(self) -> np.ndarray:
        n = self.omega3.shape[0]
        idx = np.arange(n)
        return self.omega3[idx, idx, idx].copy()

    @property
    def offdiag_residual_2(self) -> float:
        n = self.omega2.shape[0]
        mask = ~np.eye(n, dtype=bool)
        return _relative_offdiag(self.omega2, self.omega2_diag, mask)

    @property
    def offdiag_residual_3(self) -> float:
        n = self.omega3.shape[0]
        mask = np.ones((n, n, n), dtype=bool)
        idx = np.arange(n)
        mask[idx, idx, idx] = False
        return _relative_offdiag(self.omega3, self.omega3_diag, mask)


@dataclass(frozen=True)
class MembershipDecision:
    """Outcome of a realizability test with its parameter witness."""

    accepted: bool
    verification: VerificationReport
    identification: IdentificationResult

    def to_json(self) -> dict:
        ident = self.identification
        return {
            "lambda": [[j, i, v] for j, i, v in ident.lam.items()],
            "omega2_diag": [float(x) for x in ident.omega2_diag],
            "omega3_diag": [float(x) for x in ident.omega3_diag],
            "offdiag_residual_2": float(ident.offdiag_residual_2),
            "offdiag_residual_3": float(ident.offdiag_residual_3),
            "accepted": self.accepted,
        }


def membership_test(
    g: Dag,
    m: MomentPair,
    rank_tol: float | None = None,
    diag_tol: float = 1e-8,
    use_all_columns: bool = False,
) -> MembershipDecision:
    """Decide whether (S, T) is realizable on g and return the witness.

    Accepts exactly when every per-vertex rank check passes, the recovered
    noise arrays are diagonal up to ``diag_tol`` (relative to the largest
    diagonal magnitude, strict <=), and the recovered variances are positive.
    """
    check_positive_definite(m.cov, rank_tol)
    verification = verify_graph(g, m, rank_tol)
    lam = recover_lambda(g, m, use_all_columns=use_all_columns)
    omega2 = compute_omega2(m.cov, lam)
    omega3 = compute_omega3(m.t3, lam)
    ident = IdentificationResult(lam, omega2, omega3)
    accepted = (
        verification.accepted
        and ident.offdiag_residual_2 <= diag_tol
        and ident.offdiag_residual_3 <= diag_tol
        and bool(np.all(ident.omega2_diag > 0.0))
    )
    return MembershipDecision(accepted, verification, ident)
