"""Damped Newton corrector and adaptive homotopy continuation.

The driver starts from the explicit root of the lam = 0 system and
follows solutions to lam = 1: a zeroth-order predictor (the previous
solution) feeds a damped Newton corrector at each step; failed steps
shrink the lam increment, cheap successes grow it.  Density positivity
is enforced inside the line search, never by projecting m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .system import MFGModels, MFGState, assemble_jacobian, residual

REACHED_ONE = "reached_one"
STEP_UNDERFLOW = "step_underflow"
NEWTON_DIVERGENCE = "newton_divergence"


class SolverError(Exception):
    """Base class for corrector failures."""


class NewtonDivergenceError(SolverError):
    """Iteration or backtrack budget exhausted without convergence."""


class SingularSystemError(SolverError):
    """Direct factorization failed or produced an unusable solution."""


@dataclass(frozen=True)
class NewtonConfig:
    tol_residual: float = 1e-10
    max_iters: int = 30
    min_m_floor: float = 1e-8
    backtrack_factor: float = 0.5
    max_backtracks: int = 25

    def __post_init__(self) -> None:
        if min(self.tol_residual, self.max_iters, self.min_m_floor,
               self.backtrack_factor, self.max_backtracks) <= 0:
            raise ValueError("Newton configuration values must be positive")
        if self.backtrack_factor >= 1.0:
            raise ValueError("backtrack factor must be < 1")


@dataclass(frozen=True)
class ContinuationConfig:
    lambda_step_init: float = 0.1
    lambda_step_min: float = 1e-4
    grow_factor: float = 1.5
    shrink_factor: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.lambda_step_min <= self.lambda_step_init <= 1.0:
            raise ValueError("need 0 < step_min <= step_init <= 1")
        if self.grow_factor <= 1.0 or not 0.0 < self.shrink_factor < 1.0:
            raise ValueError("need grow > 1 and 0 < shrink < 1")


@dataclass
class NewtonResult:
    state: MFGState
    iters: int
    residual_norm: float
    history: list[float]


@dataclass
class PathStep:
    lam: float
    state: MFGState
    iters: int
    residual_norm: float
    min_m: float

    def log_line(self) -> str:
        return (f"lambda={self.lam:.17g} iters={self.iters} "
                f"residual={self.residual_norm:.17g} min_m={self.min_m:.17g}")


@dataclass
class SolvePath:
    steps: list[PathStep] = field(default_factory=list)
    status: str = REACHED_ONE

    @property
    def reached_one(self) -> bool:
        return self.status == REACHED_ONE

    @property
    def lambdas(self) -> list[float]:
        return [s.lam for s in self.steps]

    @property
    def final_state(self) -> MFGState:
        return self.steps[-1].state

    @property
    def total_iters(self) -> int:
        return sum(s.iters for s in self.steps)

    def log_lines(self) -> list[str]:
        return [s.log_line() for s in self.steps]


def solve_direct(matrix: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """LU solve with a backward-error gate of 1e-10."""
    if not np.all(np.isfinite(matrix.data)):
        raise SingularSystemError("system matrix has non-finite entries")
    try:
        factor = splu(matrix.tocsc())
        x = factor.solve(rhs)
    except RuntimeError as exc:
        raise SingularSystemError(f"factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("factorization produced non-finite solution")
    denom = max(float(np.linalg.norm(rhs)), 1e-300)
    backward = float(np.linalg.norm(matrix @ x - rhs)) / denom
    if backward > 1e-10:
        raise SingularSystemError(
            f"numerically rank-deficient system (backward error {backward:.3e})")
    return x


def newton_solve(init: MFGState, lam: float, models: MFGModels,
                 cfg: NewtonConfig = NewtonConfig()) -> NewtonResult:
    """Damped Newton on the discrete system at fixed lam.

    Each iteration solves J delta = -F by direct factorization, then
    backtracks over t in {1, beta, beta^2, ...}, accepting the first t
    that keeps min(m + t delta_m) above max(floor, 0.1 min m) and
    reduces the sup-norm residual.
    """
    if float(np.min(init.m)) <= cfg.min_m_floor:
        raise ValueError("initial density at or below the positivity floor")
    state = MFGState(init.grid, init.u.copy(), init.m.copy(), lam)
    res = residual(state, models)
    rnorm = res.sup_norm
    history = [rnorm]

    for it in range(cfg.max_iters):
        if rnorm < cfg.tol_residual:
            return NewtonResult(state, it, rnorm, history)
        jac = assemble_jacobian(state, models)
        delta = solve_direct(jac, -res.stack())
        n = state.grid.npoints
        du, dm = delta[:n], delta[n:]

        m_guard = max(cfg.min_m_floor, 0.1 * float(np.min(state.m)))
        t = 1.0
        accepted = False
        for _ in range(cfg.max_backtracks + 1):
            m_trial = state.m + t * dm
            if float(np.min(m_trial)) > m_guard:
                trial = MFGState(state.grid, state.u + t * du, m_trial, lam)
                res_trial = residual(trial, models)
                if res_trial.sup_norm < rnorm:
                    state, res, rnorm = trial, res_trial, res_trial.sup_norm
                    history.append(rnorm)
                    accepted = True
                    break
            t *= cfg.backtrack_factor
        if not accepted:
            raise NewtonDivergenceError(
                f"line search stalled at lambda={lam:.6g} (residual {rnorm:.3e})")

    if rnorm < cfg.tol_residual:
        return NewtonResult(state, cfg.max_iters, rnorm, history)
    raise NewtonDivergenceError(
        f"no convergence in {cfg.max_iters} iterations at lambda={lam:.6g} "
        f"(residual {rnorm:.3e})")


def continuation_run(models: MFGModels,
                     newton_cfg: NewtonConfig = NewtonConfig(),
                     cont_cfg: ContinuationConfig = ContinuationConfig(),
                     log=None) -> SolvePath:
    """Follow the solution branch from lam = 0 to lam = 1.

    Returns a SolvePath whose status is reached_one on success,
    step_underflow when the adaptive step shrinks below its minimum, or
    newton_divergence when the corrector fails with the step already at
    the floor (no adaptation left to spend); failures are carried in
    the status, never raised.
    """
    state = models.trivial_state()
    res = residual(state, models)
    path = SolvePath()
    path.steps.append(PathStep(0.0, state, 0, res.sup_norm,
                               float(np.min(state.m))))
    if log is not None:
        log(path.steps[-1].log_line())

    lam = 0.0
    step = cont_cfg.lambda_step_init
    while lam < 1.0:
        target = min(1.0, lam + step)
        try:
            result = newton_solve(state, target, models, newton_cfg)
        except SolverError:
            if step <= cont_cfg.lambda_step_min:
                path.status = NEWTON_DIVERGENCE
                return path
            step *= cont_cfg.shrink_factor
            if step < cont_cfg.lambda_step_min:
                path.status = STEP_UNDERFLOW
                return path
            continue
        state = result.state
        lam = target
        path.steps.append(PathStep(lam, state, result.iters,
                                   result.residual_norm,
                                   float(np.min(state.m))))
        if log is not None:
            log(path.steps[-1].log_line())
        if result.iters <= 4:
            step *= cont_cfg.grow_factor
    path.status = REACHED_ONE
    return path
