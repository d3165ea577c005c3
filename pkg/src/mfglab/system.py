"""Discrete residual and linearization of the congestion system.

For a state (u, m, lam) on a TorusGrid the residual is

    r_u = u - lap(u) + m^alpha H_lam(x, Q) + V_lam(x, m)
    r_m = m - lap(m) - div(DpH_lam(x, Q) m) - 1,        Q = grad(u) / m^alpha,

built from the grid operators of :mod:`mfglab.grid`.  The Jacobian is
the exact derivative of this discrete residual: differentiating the
pointwise coefficients under the (linear) grid operators gives, for a
perturbation w = (v, f),

    row 1:  v - lap(v) + alpha m^(alpha-1) f (H - Q.DpH) + DpH.grad(v)
            + dV/dm f
    row 2:  f - lap(f) - div[ DpH f + m^(1-alpha) DppH grad(v)
            - alpha f DppH Q ],

with every Hamiltonian derivative evaluated at (x, Q).  The assembled
sparse matrix applies exactly this operator, so Newton converges
quadratically on the discrete system.

The swap map P(v, f) = (f, -v) and the bilinear form

    B_lam[w1, w2] = integrate( L_lam(w1) . P w2 )

turn the linearization into the monotonicity test used to certify
uniqueness: at a solution of the lam = 1 system with a potential that
decreases in m, B_lam[w, w] <= 0 with equality only for f = 0 and
grad(v) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import TorusGrid
from .hamiltonian import (SIGN_CONVENTIONS, HamiltonianEval, blend_eval,
                          potential_eval)


@dataclass
class MFGState:
    """Value function u, density m, and homotopy weight lam."""

    grid: TorusGrid
    u: np.ndarray
    m: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=float).ravel()
        self.m = np.asarray(self.m, dtype=float).ravel()
        if self.u.size != self.grid.npoints or self.m.size != self.grid.npoints:
            raise ValueError("state fields must match the grid size")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"homotopy weight must lie in [0,1], got {self.lam}")

    def copy(self) -> "MFGState":
        return MFGState(self.grid, self.u.copy(), self.m.copy(), self.lam)


@dataclass
class ResidualPair:
    r_u: np.ndarray
    r_m: np.ndarray

    @property
    def sup_norm(self) -> float:
        return max(float(np.max(np.abs(self.r_u))),
                   float(np.max(np.abs(self.r_m))))

    def stack(self) -> np.ndarray:
        return np.concatenate([self.r_u, self.r_m])


@dataclass
class PerturbationPair:
    v: np.ndarray
    f: np.ndarray

    def stack(self) -> np.ndarray:
        return np.concatenate([self.v, self.f])


@dataclass(frozen=True, eq=False)
class MFGModels:
    """Problem data: congestion exponent, Hamiltonian family, potential."""

    grid: TorusGrid
    alpha: float
    gamma: float
    a: np.ndarray
    b: np.ndarray
    sign: str = "paper_literal"

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError(f"congestion exponent must be positive, got {self.alpha}")
        if np.any(np.asarray(self.a) <= 0.0):
            raise ValueError("coefficient field a must be strictly positive")

    def hamiltonian(self, p, lam: float) -> HamiltonianEval:
        return blend_eval(p, self.a, self.gamma, lam)

    def potential(self, m, lam: float):
        return potential_eval(m, self.b, lam, self.sign)

    def trivial_state(self) -> MFGState:
        """Exact root of the lam = 0 system: constant u, unit density.

        With m = 1 and u constant the density equation is satisfied
        (the base Hamiltonian has zero momentum gradient at p = 0) and
        the value equation reads u + 1 + V_0(x, 1) = 0, so
        u = -(1 + sigma * atan(1)).
        """
        sigma = SIGN_CONVENTIONS[self.sign]
        u0 = -(1.0 + sigma * math.atan(1.0))
        n = self.grid.npoints
        return MFGState(self.grid, np.full(n, u0), np.ones(n), 0.0)


def _check_density(m: np.ndarray) -> None:
    if np.min(m) <= 0.0:
        raise ValueError("density must be strictly positive on the grid")


@lru_cache(maxsize=8)
def operator_matrices(grid: TorusGrid):
    """Sparse (identity, per-axis gradient, compact Laplacian) matrices.

    Built from the same stencil definitions as the grid operators so the
    assembled Jacobian and the roll-based residual share one calculus.
    """
    N = grid.npoints
    h = grid.h
    idx = np.arange(N).reshape(grid.shape)
    rows = np.arange(N)
    eye = sp.identity(N, format="csr")
    grads = []
    lap = sp.csr_matrix((N, N))
    for ax in range(grid.d):
        up = np.roll(idx, -1, axis=ax).ravel()
        dn = np.roll(idx, 1, axis=ax).ravel()
        g = sp.coo_matrix(
            (np.concatenate([np.full(N, 0.5 / h), np.full(N, -0.5 / h)]),
             (np.concatenate([rows, rows]), np.concatenate([up, dn]))),
            shape=(N, N)).tocsr()
        grads.append(g)
        lap = lap + sp.coo_matrix(
            (np.concatenate([np.full(N, 1.0 / h**2), np.full(N, 1.0 / h**2),
                             np.full(N, -2.0 / h**2)]),
             (np.concatenate([rows, rows, rows]),
              np.concatenate([up, dn, rows]))),
            shape=(N, N)).tocsr()
    return eye, tuple(grads), lap


@dataclass
class _Linearization:
    """Pointwise coefficients of the linearized operator at a state."""

    Q: np.ndarray               # (N, d)
    ev: HamiltonianEval
    density_coupling: np.ndarray  # (N,) coefficient of f in the u-row
    W: np.ndarray               # (N, d) transported vector DpH - alpha DppH.Q
    m_scale: np.ndarray         # (N,)  m^(1-alpha)


def _linearize(state: MFGState, models: MFGModels) -> _Linearization:
    _check_density(state.m)
    grid = state.grid
    alpha = models.alpha
    Du = grid.gradient(state.u)
    ma = state.m**alpha
    Q = Du / ma[:, None]
    ev = models.hamiltonian(Q, state.lam)
    _, DmV = models.potential(state.m, state.lam)
    q_dot = np.einsum("ki,ki->k", Q, ev.DpH)
    density_coupling = alpha * state.m ** (alpha - 1.0) * (ev.H - q_dot) + DmV
    hess_q = np.einsum("kij,kj->ki", ev.DppH, Q)
    W = ev.DpH - alpha * hess_q
    return _Linearization(Q, ev, density_coupling, W, state.m ** (1.0 - alpha))


def residual(state: MFGState, models: MFGModels) -> ResidualPair:
    """Discrete residual of the coupled system at the given state."""
    _check_density(state.m)
    grid = state.grid
    Du = grid.gradient(state.u)
    ma = state.m**models.alpha
    Q = Du / ma[:, None]
    ev = models.hamiltonian(Q, state.lam)
    V, _ = models.potential(state.m, state.lam)
    r_u = state.u - grid.laplacian(state.u) + ma * ev.H + V
    flux = ev.DpH * state.m[:, None]
    r_m = state.m - grid.laplacian(state.m) - grid.divergence(flux) - 1.0
    return ResidualPair(r_u, r_m)


def assemble_jacobian(state: MFGState, models: MFGModels) -> sp.csr_matrix:
    """Sparse 2N x 2N derivative of the discrete residual, blocks

    [[ duu, dum ],      duu = I - lap + DpH . grad
     [ dmu, dmm ]]      dum = diag(density coupling)
                        dmu = -div( m^(1-alpha) DppH grad . )
                        dmm = I - lap - div( W . )
    """
    lin = _linearize(state, models)
    eye, grads, lap = operator_matrices(state.grid)
    d = state.grid.d

    duu = eye - lap
    for ax in range(d):
        duu = duu + sp.diags(lin.ev.DpH[:, ax]) @ grads[ax]

    dum = sp.diags(lin.density_coupling)

    dmu = sp.csr_matrix(eye.shape)
    for i in range(d):
        for j in range(d):
            dmu = dmu - grads[i] @ sp.diags(lin.m_scale * lin.ev.DppH[:, i, j]) @ grads[j]

    dmm = eye - lap
    for ax in range(d):
        dmm = dmm - grads[ax] @ sp.diags(lin.W[:, ax])

    return sp.bmat([[duu, dum], [dmu, dmm]], format="csr")


def apply_linearized(state: MFGState, models: MFGModels,
                     w: PerturbationPair) -> PerturbationPair:
    """Action of the linearized operator on w = (v, f) via grid operators."""
    lin = _linearize(state, models)
    grid = state.grid
    v, f = w.v, w.f
    Dv = grid.gradient(v)
    row1 = (v - grid.laplacian(v) + lin.density_coupling * f
            + np.einsum("ki,ki->k", lin.ev.DpH, Dv))
    flux = (lin.ev.DpH * f[:, None]
            + lin.m_scale[:, None] * np.einsum("kij,kj->ki", lin.ev.DppH, Dv)
            - models.alpha * f[:, None] * np.einsum("kij,kj->ki", lin.ev.DppH, lin.Q))
    row2 = f - grid.laplacian(f) - grid.divergence(flux)
    return PerturbationPair(row1, row2)


def apply_swap(w: PerturbationPair) -> PerturbationPair:
    """P(v, f) = (f, -v); P^2 = -I and <Pw, w> = 0."""
    return PerturbationPair(w.f.copy(), -w.v)


def bilinear_form(w1: PerturbationPair, w2: PerturbationPair,
                  state: MFGState, models: MFGModels) -> float:
    """B[w1, w2] = integrate( L(w1) . P w2 )."""
    lw = apply_linearized(state, models, w1)
    pw = apply_swap(w2)
    grid = state.grid
    return grid.integrate(lw.v * pw.v + lw.f * pw.f)


def write_matrix_coo(matrix: sp.spmatrix, path) -> None:
    """Debug dump in `row col value` coordinate text format."""
    coo = matrix.tocoo()
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")
