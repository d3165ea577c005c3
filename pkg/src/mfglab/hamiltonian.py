"""Hamiltonian and potential models for the congestion system.

Three Hamiltonian kinds share one evaluation interface:

- ``example``: the convex dual of the movement cost
  L(x,v) = a(x) (1 + |v|^2)^(gamma'/2), with gamma in (1,2),
  1/gamma + 1/gamma' = 1 and a(x) > 0.  There is no closed form for
  H(x,p); the optimal speed s = |v| solves the scalar monotone equation

      gamma' a s (1 + s^2)^(gamma'/2 - 1) = |p|,

  after which

      v    = -s p/|p|,
      H    = a ((gamma'-1) s^2 - 1) (1 + s^2)^(gamma'/2 - 1),
      DpH  = -v,
      DppH = (D^2_vv L)^{-1}
           = 1/c * (I - (gamma'-2) v v^T / (1 + (gamma'-1) s^2)),
      c    = gamma' a (1 + s^2)^(gamma'/2 - 1),

  where the Hessian inverse is the closed-form rank-one-update inverse
  of D^2_vv L = c (I + (gamma'-2) v v^T / (1 + s^2)).

- ``power``: the homotopy base H(p) = (1 + |p|^2)^(gamma/2) with the
  analytic gradient and Hessian.

- ``blend``: the convex combination
  H_lam = lam * example + (1 - lam) * power, component by component.

The potential blends V(x,m) = b(x) - arctan(m) against a pure arctan(m)
leg: V_lam = lam * V + sigma (1 - lam) * arctan(m).  With sigma = +1
("paper_literal") the lam < 1 potential increases in m; sigma = -1
("monotone") keeps V_lam strictly decreasing in m for every lam.  Both
conventions coincide at lam = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import TorusGrid

SIGN_CONVENTIONS = {"paper_literal": 1.0, "monotone": -1.0}

_EPS = np.finfo(float).eps


def conjugate_exponent(gamma: float) -> float:
    """gamma' with 1/gamma + 1/gamma' = 1; maps (1,2) onto (2,inf)."""
    return gamma / (gamma - 1.0)


# -- optimal-speed inversion -------------------------------------------


def _speed_map(s, a, gp):
    return gp * a * s * (1.0 + s * s) ** (0.5 * gp - 1.0)


def _speed_map_deriv(s, a, gp):
    return gp * a * (1.0 + s * s) ** (0.5 * gp - 2.0) * (1.0 + (gp - 1.0) * s * s)


def solve_optimal_speed(p_mag, a, gamma_prime: float, tol: float = 1e-12,
                        max_iter: int = 200):
    """Invert gamma' a s (1+s^2)^(gamma'/2-1) = |p| for the speed s >= 0.

    The map is strictly increasing in s, so the root is unique.
    Safeguarded Newton with a bisection bracket; the initial guess
    s0 = (|p| / (gamma' a))^(1/(gamma'-1)) is the exact large-|p|
    asymptote and always overshoots the root, so Newton descends
    monotonically on this convex map.  Accepts scalars or arrays.
    """
    p = np.asarray(p_mag, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p).copy()
    av = np.broadcast_to(np.asarray(a, dtype=float), p.shape).copy()
    if np.any(p < 0.0):
        raise ValueError("momentum magnitude must be nonnegative")
    if np.any(av <= 0.0):
        raise ValueError("cost coefficient a must be positive")
    if gamma_prime <= 2.0:
        raise ValueError("conjugate exponent must exceed 2")
    gp = float(gamma_prime)

    s = (p / (gp * av)) ** (1.0 / (gp - 1.0))
    lo = np.zeros_like(p)
    hi = np.maximum(2.0 * s, 1.0)
    for _ in range(200):
        short = _speed_map(hi, av, gp) < p
        if not short.any():
            break
        hi[short] *= 2.0

    # absolute tolerance with a relative floor for very large momenta
    tol_arr = np.maximum(tol, 8.0 * _EPS * p)
    done = np.zeros(p.shape, dtype=bool)
    for _ in range(max_iter):
        g = _speed_map(s, av, gp) - p
        done |= np.abs(g) <= tol_arr
        if done.all():
            break
        lo = np.where((g < 0.0) & ~done, s, lo)
        hi = np.where((g > 0.0) & ~done, s, hi)
        trial = s - g / _speed_map_deriv(s, av, gp)
        outside = (trial <= lo) | (trial >= hi)
        trial = np.where(outside, 0.5 * (lo + hi), trial)
        s = np.where(done, s, trial)
    else:
        raise RuntimeError("optimal-speed iteration failed to converge "
                           "(malformed Hamiltonian model)")
    return float(s[0]) if scalar else s


# -- evaluation bundles ------------------------------------------------


@dataclass
class HamiltonianEval:
    """Pointwise H, DpH, DppH plus the optimal velocity v = -DpH."""

    H: np.ndarray        # (N,)
    DpH: np.ndarray      # (N, d)
    DppH: np.ndarray     # (N, d, d)
    v_opt: np.ndarray    # (N, d)
    s_opt: np.ndarray    # (N,)


def _promote(p):
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        return p[None, :], True
    if p.ndim != 2:
        raise ValueError("momentum must have shape (d,) or (N, d)")
    return p, False


def _squeeze(ev: HamiltonianEval, single: bool) -> HamiltonianEval:
    if single:
        return HamiltonianEval(ev.H[0], ev.DpH[0], ev.DppH[0], ev.v_opt[0],
                               ev.s_opt[0])
    return ev


def example_eval(p, a, gamma: float) -> HamiltonianEval:
    """Evaluate the congestion-cost dual Hamiltonian at momenta p."""
    p2, single = _promote(p)
    n, d = p2.shape
    gp = conjugate_exponent(gamma)
    av = np.broadcast_to(np.asarray(a, dtype=float), (n,))

    p_mag = np.linalg.norm(p2, axis=1)
    s = np.atleast_1d(solve_optimal_speed(p_mag, av, gp))
    with np.errstate(invalid="ignore", divide="ignore"):
        phat = np.where(p_mag[:, None] > 0.0, p2 / p_mag[:, None], 0.0)

    s2 = s * s
    w = (1.0 + s2) ** (0.5 * gp - 1.0)
    H = av * ((gp - 1.0) * s2 - 1.0) * w
    v = -s[:, None] * phat
    DpH = -v

    c = gp * av * w
    eye = np.eye(d)[None, :, :]
    vv = v[:, :, None] * v[:, None, :]
    DppH = (eye - (gp - 2.0) * vv / (1.0 + (gp - 1.0) * s2)[:, None, None]) \
        / c[:, None, None]
    return _squeeze(HamiltonianEval(H, DpH, DppH, v, s), single)


def example_lagrangian(v, a, gamma: float):
    """Movement cost L(x,v) = a (1 + |v|^2)^(gamma'/2)."""
    v2, single = _promote(v)
    gp = conjugate_exponent(gamma)
    av = np.broadcast_to(np.asarray(a, dtype=float), (v2.shape[0],))
    L = av * (1.0 + np.sum(v2 * v2, axis=1)) ** (0.5 * gp)
    return float(L[0]) if single else L


def power_eval(p, gamma: float) -> HamiltonianEval:
    """Evaluate the homotopy base H(p) = (1 + |p|^2)^(gamma/2)."""
    p2, single = _promote(p)
    n, d = p2.shape
    q = np.sum(p2 * p2, axis=1)
    w = (1.0 + q) ** (0.5 * gamma - 1.0)
    H = (1.0 + q) ** (0.5 * gamma)
    DpH = gamma * w[:, None] * p2
    eye = np.eye(d)[None, :, :]
    pp = p2[:, :, None] * p2[:, None, :]
    DppH = gamma * w[:, None, None] * eye \
        + gamma * (gamma - 2.0) * ((1.0 + q) ** (0.5 * gamma - 2.0))[:, None, None] * pp
    v = -DpH
    s = np.linalg.norm(v, axis=1)
    return _squeeze(HamiltonianEval(H, DpH, DppH, v, s), single)


def blend_eval(p, a, gamma: float, lam: float) -> HamiltonianEval:
    """Convex combination lam * example + (1-lam) * power, per component."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"blend weight must lie in [0,1], got {lam}")
    if lam == 1.0:
        return example_eval(p, a, gamma)
    if lam == 0.0:
        return power_eval(p, gamma)
    ex = example_eval(p, a, gamma)
    pw = power_eval(p, gamma)
    H = lam * ex.H + (1.0 - lam) * pw.H
    DpH = lam * ex.DpH + (1.0 - lam) * pw.DpH
    DppH = lam * ex.DppH + (1.0 - lam) * pw.DppH
    v = -DpH
    s = np.linalg.norm(np.atleast_2d(v), axis=1)
    if np.ndim(H) == 0:
        s = s[0]
    return HamiltonianEval(H, DpH, DppH, v, s)


def potential_eval(m, b, lam: float, sign: str = "paper_literal"):
    """V_lam(x,m) and its m-derivative.

    V_lam = lam (b(x) - arctan m) + sigma (1 - lam) arctan m, m > 0.
    """
    if sign not in SIGN_CONVENTIONS:
        raise ValueError(f"unknown sign convention {sign!r}")
    sigma = SIGN_CONVENTIONS[sign]
    mv = np.asarray(m, dtype=float)
    if np.any(mv <= 0.0):
        raise ValueError("density must be positive")
    bv = np.asarray(b, dtype=float)
    at = np.arctan(mv)
    V = lam * (bv - at) + sigma * (1.0 - lam) * at
    DmV = (-lam + sigma * (1.0 - lam)) / (1.0 + mv * mv)
    return V, DmV


# -- model containers --------------------------------------------------


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """Configured Hamiltonian: kind in {example, power, blend}."""

    kind: str
    gamma: float
    a: np.ndarray | float | None = None
    lam: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("example", "power", "blend"):
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        if not 1.0 < self.gamma < 2.0:
            raise ValueError(f"growth exponent must lie in (1,2), got {self.gamma}")
        if self.kind in ("example", "blend"):
            if self.a is None or np.any(np.asarray(self.a) <= 0.0):
                raise ValueError("example Hamiltonian needs a positive coefficient a")
        if self.kind == "blend":
            if self.lam is None or not 0.0 <= self.lam <= 1.0:
                raise ValueError("blend needs a weight lam in [0,1]")

    @property
    def gamma_prime(self) -> float:
        return conjugate_exponent(self.gamma)

    def evaluate(self, p) -> HamiltonianEval:
        if self.kind == "example":
            return example_eval(p, self.a, self.gamma)
        if self.kind == "power":
            return power_eval(p, self.gamma)
        return blend_eval(p, self.a, self.gamma, self.lam)


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """Configured potential leg of the homotopy."""

    b: np.ndarray | float
    sign: str = "paper_literal"
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.sign not in SIGN_CONVENTIONS:
            raise ValueError(f"unknown sign convention {self.sign!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"blend weight must lie in [0,1], got {self.lam}")

    def evaluate(self, m, lam: float | None = None):
        return potential_eval(m, self.b, self.lam if lam is None else lam, self.sign)


# -- coefficient-field presets ------------------------------------------


def coefficient_field(grid: TorusGrid, descriptor: str) -> np.ndarray:
    """Build a named or inline-Fourier coefficient field on the grid.

    Presets: ``one`` -> 1, ``sin_bump`` -> 1 + 0.5 sin(2 pi x1),
    ``cos_bump`` -> 0.5 cos(2 pi x1).  Inline:
    ``fourier:c0,s1,c1[,s2,c2,...]`` meaning
    c0 + sum_k [ s_k sin(2 pi k x1) + c_k cos(2 pi k x1) ].
    """
    x1 = grid.coords()[:, 0]
    if descriptor == "one":
        return np.ones(grid.npoints)
    if descriptor == "sin_bump":
        return 1.0 + 0.5 * np.sin(2.0 * np.pi * x1)
    if descriptor == "cos_bump":
        return 0.5 * np.cos(2.0 * np.pi * x1)
    if descriptor.startswith("fourier:"):
        try:
            coeffs = [float(tok) for tok in descriptor[len("fourier:"):].split(",")]
        except ValueError as exc:
            raise ValueError(f"bad Fourier coefficient list in {descriptor!r}") from exc
        if not coeffs:
            raise ValueError(f"empty Fourier coefficient list in {descriptor!r}")
        out = np.full(grid.npoints, coeffs[0])
        pairs = coeffs[1:]
        for k in range(0, len(pairs), 2):
            mode = k // 2 + 1
            out += pairs[k] * np.sin(2.0 * np.pi * mode * x1)
            if k + 1 < len(pairs):
                out += pairs[k + 1] * np.cos(2.0 * np.pi * mode * x1)
        return out
    raise ValueError(f"unknown coefficient field descriptor {descriptor!r}")


# -- parameter admissibility --------------------------------------------


@dataclass(frozen=True)
class Condition:
    name: str
    statement: str
    satisfied: bool
    margin: float


@dataclass(frozen=True)
class AdmissibilityReport:
    gamma: float
    alpha: float
    d: int
    conditions: tuple[Condition, ...]

    @property
    def admissible(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    def violated(self) -> list[Condition]:
        return [c for c in self.conditions if not c.satisfied]


def check_parameter_admissibility(gamma: float, alpha: float, d: int) -> AdmissibilityReport:
    """Evaluate every (gamma, alpha, d) inequality with its margin.

    Margins are positive when satisfied; the overall verdict is the
    conjunction.  The second-order interpolation condition is vacuous
    for d <= 2 and reported with infinite margin there.
    """
    conds = []

    m = min(gamma - 1.0, 2.0 - gamma)
    conds.append(Condition("gamma_subquadratic", "1 < gamma < 2", m > 0.0, m))

    m = min(alpha, 2.0 - alpha)
    conds.append(Condition("alpha_range", "0 < alpha < 2", m > 0.0, m))

    if alpha > 0.0:
        m = 4.0 + 2.0 / alpha - d
    else:
        m = float("inf") if d < 4 else float(4 - d)
    conds.append(Condition("dimension_bound", "d < 4 + 2/alpha", m > 0.0, m))

    m = 1.0 + 1.0 / (1.0 + 2.0 * alpha) - gamma if alpha > -0.5 else float("nan")
    conds.append(Condition(
        "gamma_alpha_coupling", "gamma < 1 + 1/(1 + 2 alpha)", m > 0.0, m))

    if gamma > 1.0:
        m = (2.0 - gamma) / (2.0 * (gamma - 1.0)) - alpha
    else:
        m = float("inf")
    conds.append(Condition(
        "inverse_moment_range", "alpha < (2 - gamma)/(2 (gamma - 1))", m > 0.0, m))

    if d <= 2:
        conds.append(Condition(
            "second_order_interpolation",
            "2 (alpha+1) / ((gamma-1) alpha (d-2)) > 1 (vacuous for d <= 2)",
            True, float("inf")))
    else:
        val = 2.0 * (alpha + 1.0) / ((gamma - 1.0) * alpha * (d - 2.0))
        conds.append(Condition(
            "second_order_interpolation",
            "2 (alpha+1) / ((gamma-1) alpha (d-2)) > 1",
            val > 1.0, val - 1.0))

    return AdmissibilityReport(gamma, alpha, d, tuple(conds))


# -- structural assumption audit -----------------------------------------


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    statement: str
    passed: bool
    constants: dict
    detail: str = ""


@dataclass(frozen=True)
class AssumptionAudit:
    model_kind: str
    gamma: float
    alpha: float
    radius: float
    checks: tuple[AssumptionCheck, ...]
    alpha_tilde_inf: float = field(default=float("inf"))

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _fit_lower_linear(lhs: np.ndarray, h: np.ndarray) -> tuple[float, float]:
    """Largest c on a sweep with moderate C such that lhs >= c*h - C."""
    budget = 10.0 * (1.0 + float(np.median(np.abs(h))))
    best = (0.0, float(np.max(-lhs, initial=0.0)))
    for c in np.linspace(0.05, 2.0, 40):
        need = max(0.0, float(np.max(c * h - lhs)))
        if need <= budget:
            best = (float(c), need)
    return best


def audit_assumptions(model: HamiltonianModel, alpha: float,
                      radius: float = 50.0, n_radii: int = 48,
                      d: int = 2, max_x_samples: int = 64) -> AssumptionAudit:
    """Sample-box audit of the structural conditions on H.

    Checks, over momenta p = r e_1 with r in [0, radius] and all sampled
    values of the coefficient a(x):

    - H(x,0) <= 0;
    - DpH.p - H >= c H - C with (c, C) fitted by a least-violation sweep;
    - gamma-growth: H / |p|^gamma stays positive with bounded spread at
      large |p| (fitted c, enclosing C reported);
    - |DpH| <= C (|p|^(gamma-1) + 1), with the log-log growth slope at
      large |p| fitted and compared to gamma - 1;
    - DppH > 0 together with the pointwise congestion margin
      DpH.p - H - (alpha/4) p.DppH.p > 0.  For the example kind the
      admissible-exponent field alpha_tilde = 4 (1/(gamma' s^2) + 1/gamma)
      is reported with its infimum over the sample box.

    Verdicts for the fitted inequalities mean "holds with the fitted
    constants on this sample box", not absolute proofs.  Failures are
    reported, never raised.
    """
    gamma = model.gamma
    if model.kind == "power":
        a_samples = np.asarray([1.0])
    else:
        a_all = np.atleast_1d(np.asarray(model.a, dtype=float)).ravel()
        stride = max(1, a_all.size // max_x_samples)
        a_samples = np.unique(a_all[::stride])

    def evaluate(a_vals, r_vals):
        aa, rr = [x.ravel() for x in np.meshgrid(a_vals, r_vals, indexing="ij")]
        P = np.zeros((rr.size, d))
        P[:, 0] = rr
        if model.kind == "example":
            return example_eval(P, aa, gamma), P, rr
        if model.kind == "power":
            return power_eval(P, gamma), P, rr
        return blend_eval(P, aa, gamma, model.lam), P, rr

    # box samples carry the envelope constants and pointwise margins;
    # growth exponents are fitted on a far ladder where the asymptotic
    # power law has set in
    ev, P, rr = evaluate(a_samples, np.linspace(0.0, radius, n_radii))
    a_far = np.asarray([np.min(a_samples), np.median(a_samples), np.max(a_samples)])
    r_far = np.geomspace(50.0 * max(radius, 1.0), 5000.0 * max(radius, 1.0), 12)
    ev_far, _, rr_far = evaluate(a_far, r_far)

    p_dot = np.einsum("ki,ki->k", ev.DpH, P)
    lhs = p_dot - ev.H
    checks = []

    # H at zero momentum
    at_zero = rr == 0.0
    worst = float(np.max(ev.H[at_zero]))
    checks.append(AssumptionCheck(
        "zero_momentum_sign", "H(x,0) <= 0", worst <= 0.0,
        {"max_H_at_zero": worst}))

    # action bounds energy from below
    c_fit, c_need = _fit_lower_linear(lhs, ev.H)
    checks.append(AssumptionCheck(
        "action_controls_energy", "DpH.p - H >= c H - C", c_fit > 0.0,
        {"c": c_fit, "C": c_need}))

    # gamma growth envelope
    ratio = ev_far.H / rr_far**gamma
    if np.all(ratio > 0.0):
        c_geo = float(np.exp(np.mean(np.log(ratio))))
        spread = float(np.max(ratio) / np.min(ratio))
        env = float(np.max(np.abs(ev.H - c_geo * rr**gamma)))
        ok = spread <= 10.0
    else:
        c_geo, spread, env, ok = 0.0, float("inf"), float("inf"), False
    checks.append(AssumptionCheck(
        "gamma_growth", "c |p|^gamma - C <= H <= c |p|^gamma + C", ok,
        {"c": c_geo, "C": env, "spread": spread}))

    # gradient growth
    dp_mag = np.linalg.norm(ev.DpH, axis=1)
    c_grad = float(np.max(dp_mag / (1.0 + rr ** (gamma - 1.0))))
    dp_far = np.linalg.norm(ev_far.DpH, axis=1)
    pos = dp_far > 0.0
    slope = float(np.polyfit(np.log(rr_far[pos]), np.log(dp_far[pos]), 1)[0])
    checks.append(AssumptionCheck(
        "gradient_growth", "|DpH| <= C (|p|^(gamma-1) + 1)",
        slope <= gamma - 1.0 + 0.05, {"C": c_grad, "growth_slope": slope}))

    # Hessian positivity and congestion margin
    eigs = np.linalg.eigvalsh(np.atleast_3d(ev.DppH).reshape(-1, d, d))
    min_eig = float(np.min(eigs))
    quad = np.einsum("ki,kij,kj->k", P, ev.DppH, P)
    margin = lhs - 0.25 * alpha * quad
    min_margin = float(np.min(margin))
    constants = {"min_eig_DppH": min_eig, "min_margin": min_margin}
    alpha_tilde_inf = float("inf")
    if model.kind == "example":
        s2 = ev.s_opt**2
        gp = conjugate_exponent(gamma)
        with np.errstate(divide="ignore"):
            alpha_tilde = 4.0 * (1.0 / (gp * s2) + 1.0 / gamma)
        alpha_tilde_inf = float(np.min(alpha_tilde))
        constants["alpha_tilde_inf"] = alpha_tilde_inf
    checks.append(AssumptionCheck(
        "hessian_and_congestion_margin",
        "DppH > 0 and DpH.p - H > (alpha/4) p.DppH.p",
        min_eig > 0.0 and min_margin > 0.0, constants))

    return AssumptionAudit(model.kind, gamma, alpha, radius, tuple(checks),
                           alpha_tilde_inf)
