"""Symmetry classification of autonomous unit-noise Fokker-Planck equations.

Every such equation has the trivial symmetries Z0 = d/dt, Z1 = u d/du and
Z_zeta = zeta d/du (zeta any solution).  Beyond those, the classification of
Cicogna and Vitali runs on gamma(x) = -(1/2) (f^2 + f_x)_x:

  case I    gamma_xx == 0:  four nontrivial vector fields (the symmetry
            algebra is isomorphic to that of the heat equation);
  case II   gamma_xx != 0 but (gamma_x + nu1)(x + nu0) + 3 gamma == 0 has a
            constant solution (nu0, nu1): two nontrivial fields;
  case III  otherwise: none.

Fields are returned as X = tau(t) d/dt + xi(x,t) d/dx + phi1(x,t) u d/du and
verified against the determining system by an independent residual routine.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import expr as ex
from . import ito as it
from .errors import IndeterminateError, ValidationError
from .expr import Expr
from .fokker_planck import FPEquation

RECOVERY_TOL = 1e-7

#: acceptance threshold for determining-equation residuals of emitted fields
FIELD_RESIDUAL_TOL = 1e-8


class FPCase(str, enum.Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    CASE_III = "CaseIII"


@dataclass(frozen=True)
class VectorField:
    """X = tau d/dt + xi d/dx + (phi0 + phi1 u) d/du."""

    tau: Expr
    xi: Expr
    phi1: Expr
    phi0: Expr = ex.ZERO
    name: str = ""

    def describe(self) -> str:
        parts = []
        if self.tau != ex.ZERO:
            parts.append(f"({self.tau}) d/dt")
        if self.xi != ex.ZERO:
            parts.append(f"({self.xi}) d/dx")
        if self.phi1 != ex.ZERO:
            parts.append(f"({self.phi1}) u d/du")
        if self.phi0 != ex.ZERO:
            parts.append(f"({self.phi0}) d/du")
        return " + ".join(parts) if parts else "0"


def Z0() -> VectorField:
    """Time translation (autonomous equations only)."""
    return VectorField(ex.ONE, ex.ZERO, ex.ZERO, name="Z0")


def Z1() -> VectorField:
    """Scaling u -> lambda u (linear homogeneity)."""
    return VectorField(ex.ZERO, ex.ZERO, ex.ONE, name="Z1")


def Z_zeta(zeta: Expr) -> VectorField:
    """Superposition symmetry zeta d/du for a solution zeta."""
    return VectorField(ex.ZERO, ex.ZERO, ex.ZERO, phi0=zeta, name="Z_zeta")


@dataclass(frozen=True)
class FPClass:
    case: FPCase
    gamma: Expr
    mu: tuple[float, float, float] | None = None
    nu0: float | None = None
    nu1: float | None = None
    b: float | None = None
    c: float | None = None
    zeta: float | None = None

    @property
    def nontrivial_count(self) -> int:
        return {FPCase.CASE_I: 4, FPCase.CASE_II: 2, FPCase.CASE_III: 0}[self.case]


# ---------------------------------------------------------------------------
# gamma and the trichotomy

def gamma(f: Expr, sigma: Expr | None = None) -> Expr:
    """gamma = -(1/2) d/dx (f^2 + sigma^2 f_x); the unit-noise form is
    -(1/2) (2 f f_x + f_xx)."""
    sigma = sigma if sigma is not None else ex.ONE
    inner = ex.add(ex.mul(f, f),
                   ex.mul(ex.mul(sigma, sigma), ex.differentiate(f, "x")))
    return ex.mul(ex.const(-0.5), ex.differentiate(inner, "x"))


def _scaled_spread(values: np.ndarray) -> tuple[float, float]:
    center = float(np.median(values))
    spread = float(np.max(np.abs(values - center)))
    return center, spread


def _sample_points(domain, n=64, avoid: float | None = None, gap: float = 0.0):
    xs = ex.chebyshev_nodes(*it.interior(domain), n)
    if avoid is not None:
        xs = xs[np.abs(xs - avoid) > gap]
    return xs


def classify_fp(fpe: FPEquation, domain: tuple[float, float] | None = None) -> FPClass:
    """Run the trichotomy for an autonomous unit-noise equation.

    Case I parameters (mu0, mu1, mu2) with f_x + f^2 = mu0 + mu1 x + mu2 x^2
    are recovered from a 3-point Vandermonde solve and validated residually;
    case II parameters come from :func:`solve_G_constants` plus a linear fit
    of gamma to c - b/(x+nu0)^3 - (nu1/4) x.
    """
    domain = domain or fpe.domain
    if not ex.is_identically_zero_on_box(
            ex.sub(fpe.sigma, ex.ONE),
            {"x": it.interior(domain), "t": (0.0, 1.0)}):
        raise ValidationError("classification requires unit noise; normalize first")
    f = fpe.f
    if "t" in ex.free_variables(f):
        if not ex.is_identically_zero_on_box(
                ex.differentiate(f, "t"), {"x": it.interior(domain), "t": (0.0, 1.0)}):
            raise ValidationError("classification requires an autonomous drift")
        f = ex.substitute(f, "t", 0.0)

    gam = gamma(f)
    gam_xx = ex.differentiate(ex.differentiate(gam, "x"), "x")

    if ex.is_identically_zero(gam_xx, domain):
        mu = _recover_mu(f, domain)
        return FPClass(FPCase.CASE_I, gam, mu=mu)

    nus = solve_G_constants(gam, domain)
    if nus is None:
        return FPClass(FPCase.CASE_III, gam)
    nu0, nu1 = nus
    b, c = _fit_gamma_form(gam, nu0, nu1, domain)
    zeta = _recover_zeta(f, nu0, nu1, b, c, domain)
    if abs(c + 0.25 * nu0 * nu1) > RECOVERY_TOL * (1.0 + abs(c)):
        raise IndeterminateError(
            f"case II fit violates the constraint c = -nu0 nu1 / 4 (c={c:.3e})")
    return FPClass(FPCase.CASE_II, gam, nu0=nu0, nu1=nu1, b=b, c=c, zeta=zeta)


def _recover_mu(f: Expr, domain) -> tuple[float, float, float]:
    q = ex.add(ex.differentiate(f, "x"), ex.mul(f, f))
    qf = ex.lambdify(q, ("x",))
    pts = ex.chebyshev_nodes(*it.interior(domain), 3)
    V = np.vander(pts, 3, increasing=True)
    mu = np.linalg.solve(V, qf(pts))
    p = ex.add(ex.linear(mu[0], mu[1], ex.X),
               ex.mul(ex.const(float(mu[2])), ex.powc(ex.X, 2.0)))
    if not ex.is_identically_zero(ex.sub(q, p), domain, eps=RECOVERY_TOL):
        raise IndeterminateError(
            "gamma_xx vanished but f_x + f^2 did not fit a quadratic")
    return float(mu[0]), float(mu[1]), float(mu[2])


def solve_G_constants(gamma_expr: Expr, domain,
                      eps: float = RECOVERY_TOL) -> tuple[float, float] | None:
    """Constants (nu0, nu1) with (gamma_x + nu1)(x + nu0) + 3 gamma == 0.

    Expanding gives gamma_x x + 3 gamma + nu0 gamma_x + nu1 x + mu = 0 with
    mu = nu0 nu1; three sample points fix the linear system in (nu0, nu1,
    mu), the product consistency and a 64-point residual accept or reject.
    Returns None when no constants exist (the case III route).
    """
    gam_f = ex.lambdify(gamma_expr, ("x",))
    gam_x = ex.differentiate(gamma_expr, "x")
    gam_xf = ex.lambdify(gam_x, ("x",))

    rng = np.random.default_rng(0)
    a, b = it.interior(domain)
    solution = None
    for attempt in range(5):
        if attempt == 0:
            pts = ex.chebyshev_nodes(a, b, 3)
        else:
            pts = rng.uniform(a, b, size=3)
        gx = gam_xf(pts)
        g = gam_f(pts)
        if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(g))):
            continue
        A = np.column_stack([gx, pts, np.ones(3)])
        rhs = -(pts * gx + 3.0 * g)
        try:
            nu0, nu1, mu = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        solution = (float(nu0), float(nu1), float(mu))
        break
    if solution is None:
        raise IndeterminateError("could not form the 3-point system for G = 0")
    nu0, nu1, mu = solution
    if abs(mu - nu0 * nu1) > eps * (1.0 + abs(nu0 * nu1)):
        return None

    xs = _sample_points(domain, 64, avoid=-nu0, gap=0.02 * (domain[1] - domain[0]))
    gx, g = gam_xf(xs), gam_f(xs)
    G = (gx + nu1) * (xs + nu0) + 3.0 * g
    scale = np.maximum.reduce([np.abs(gx * xs), np.abs(nu1 * xs),
                               np.abs(3 * g), np.ones_like(xs)])
    if not np.all(np.isfinite(G)) or np.max(np.abs(G) / (1.0 + scale)) > eps:
        return None
    return float(nu0), float(nu1)


def _fit_gamma_form(gam: Expr, nu0: float, nu1: float, domain) -> tuple[float, float]:
    """Least-squares fit of gamma to c - b/(x+nu0)^3 - (nu1/4) x, seeded from
    the linear solution and polished over all four parameters."""
    gap = 0.05 * (domain[1] - domain[0])
    xs = _sample_points(domain, 64, avoid=-nu0, gap=gap)
    gv = ex.lambdify(gam, ("x",))(xs)
    target = gv + 0.25 * nu1 * xs
    A = np.column_stack([np.ones_like(xs), -1.0 / (xs + nu0) ** 3])
    (c, b), *_ = np.linalg.lstsq(A, target, rcond=None)

    def resid(p):
        n0, n1, bb, cc = p
        return gv - (cc - bb / (xs + n0) ** 3 - 0.25 * n1 * xs)

    try:
        sol = least_squares(resid, x0=[nu0, nu1, b, c], method="lm", xtol=1e-14)
        if sol.success and np.max(np.abs(sol.fun)) <= np.max(np.abs(resid([nu0, nu1, b, c]))):
            b, c = float(sol.x[2]), float(sol.x[3])
    except Exception:
        pass

    final = np.max(np.abs(gv - (c - b / (xs + nu0) ** 3 - 0.25 * nu1 * xs)))
    if final > RECOVERY_TOL * (1.0 + float(np.max(np.abs(gv)))):
        raise IndeterminateError("gamma does not match the case II closed form")
    return float(b), float(c)


def _recover_zeta(f: Expr, nu0, nu1, b, c, domain) -> float:
    q = ex.add(ex.differentiate(f, "x"), ex.mul(f, f))
    gap = 0.05 * (domain[1] - domain[0])
    xs = _sample_points(domain, 64, avoid=-nu0, gap=gap)
    vals = ex.lambdify(q, ("x",))(xs) + b / (nu0 + xs) ** 2 + 2 * c * xs \
        - 0.25 * nu1 * xs ** 2
    zeta, spread = _scaled_spread(vals)
    if spread > RECOVERY_TOL * (1.0 + abs(zeta)):
        raise IndeterminateError("the case II Riccati constant is not constant")
    return zeta


# ---------------------------------------------------------------------------
# explicit vector fields

def _field_from_tau_chi(tau: Expr, chi: Expr, g: Expr, f: Expr, name: str) -> VectorField:
    """Field with xi = chi + x tau'/2 and
    phi1 = -x chi' + chi f + x f tau'/2 - x^2 tau''/4 + g."""
    tau_t = ex.differentiate(tau, "t")
    tau_tt = ex.differentiate(tau_t, "t")
    chi_t = ex.differentiate(chi, "t")
    xi = ex.add(chi, ex.mul(ex.mul(ex.const(0.5), ex.X), tau_t))
    phi1 = ex.add(
        ex.add(ex.sub(ex.mul(chi, f), ex.mul(ex.X, chi_t)),
               ex.sub(ex.mul(ex.mul(ex.mul(ex.const(0.5), ex.X), f), tau_t),
                      ex.mul(ex.mul(ex.const(0.25), ex.powc(ex.X, 2.0)), tau_tt))),
        g)
    return VectorField(tau, xi, phi1, name=name)


def _trig(a: float, kind: str) -> Expr:
    """cos(a t) or sin(a t) as an external node with exact derivatives."""
    if kind == "cos":
        return ex.external(f"cos({a:g}*t)", lambda t: math.cos(a * t), ("t",),
                           {"t": lambda: ex.mul(ex.const(-a), _trig(a, "sin"))})
    return ex.external(f"sin({a:g}*t)", lambda t: math.sin(a * t), ("t",),
                       {"t": lambda: ex.mul(ex.const(a), _trig(a, "cos"))})


def _check_mu(mu, f, domain):
    mu0, mu1, mu2 = mu
    q = ex.add(ex.differentiate(f, "x"), ex.mul(f, f))
    p = ex.add(ex.linear(mu0, mu1, ex.X), ex.mul(ex.const(mu2), ex.powc(ex.X, 2.0)))
    if not ex.is_identically_zero(ex.sub(q, p), domain, eps=RECOVERY_TOL):
        raise ValidationError(
            "(mu0, mu1, mu2) do not satisfy f_x + f^2 = mu0 + mu1 x + mu2 x^2")


def case_i_vector_fields(mu0: float, mu1: float, mu2: float, f: Expr,
                         domain: tuple[float, float]) -> list[VectorField]:
    """The four nontrivial fields of a maximal-symmetry equation.

    For mu2 > 0 these are the closed exponential forms; for mu2 <= 0 the
    scalar equations tau''' = 4 mu2 tau' and chi'' - mu2 chi = (3/4) mu1 tau'
    are solved in their polynomial (mu2 = 0) or trigonometric (mu2 < 0)
    fundamental systems and phi1 is reconstructed the same way.
    """
    _check_mu((mu0, mu1, mu2), f, domain)
    x, t = ex.X, ex.T

    if mu2 > 1e-9 * (1.0 + abs(mu0) + abs(mu1)):
        s = math.sqrt(mu2)
        m = mu1 / (2 * mu2)
        xm = ex.add(x, ex.const(m))
        zeta_q = ex.add(
            ex.add(ex.mul(ex.const(s), ex.powc(x, 2.0)),
                   ex.mul(ex.const(mu1 / s), x)),
            ex.const(mu0 / (2 * s) + mu1 ** 2 / (8 * mu2 * s)))
        e2p = ex.exp(ex.mul(ex.const(2 * s), t))
        e2m = ex.exp(ex.mul(ex.const(-2 * s), t))
        e1p = ex.exp(ex.mul(ex.const(s), t))
        e1m = ex.exp(ex.mul(ex.const(-s), t))
        half = ex.const(0.5)

        def ufactor(envelope, sign):
            inner = ex.sub(ex.mul(f, xm),
                           ex.add(ex.mul(ex.const(sign), zeta_q), half))
            return ex.mul(ex.mul(half, envelope), inner)

        x1 = VectorField(ex.div(e2p, ex.const(2 * s)),
                         ex.mul(ex.mul(half, xm), e2p),
                         ufactor(e2p, +1.0), name="X1")
        x2 = VectorField(ex.neg(ex.div(e2m, ex.const(2 * s))),
                         ex.mul(ex.mul(half, xm), e2m),
                         ufactor(e2m, -1.0), name="X2")
        x3 = VectorField(ex.ZERO, e1p,
                         ex.mul(e1p, ex.sub(f, ex.mul(ex.const(s), xm))), name="X3")
        x4 = VectorField(ex.ZERO, e1m,
                         ex.mul(e1m, ex.add(f, ex.mul(ex.const(s), xm))), name="X4")
        return [x1, x2, x3, x4]

    if abs(mu2) <= 1e-9 * (1.0 + abs(mu0) + abs(mu1)):
        t2, t3, t4 = ex.powc(t, 2.0), ex.powc(t, 3.0), ex.powc(t, 4.0)
        branches = [
            (t, ex.mul(ex.const(3 * mu1 / 8), t2),
             ex.sub(ex.mul(ex.const(-(mu1 ** 2) / 16), t3),
                    ex.mul(ex.const(0.5 * mu0), t))),
            (t2, ex.mul(ex.const(mu1 / 4), t3),
             ex.sub(ex.sub(ex.mul(ex.const(-(mu1 ** 2) / 32), t4),
                           ex.mul(ex.const(0.5 * mu0), t2)),
                    ex.mul(ex.const(0.5), t))),
            (ex.ZERO, ex.ONE, ex.mul(ex.const(-0.5 * mu1), t)),
            (ex.ZERO, t, ex.mul(ex.const(-0.25 * mu1), t2)),
        ]
        return [_field_from_tau_chi(tau, chi, g, f, name=f"X{i + 1}")
                for i, (tau, chi, g) in enumerate(branches)]

    # mu2 < 0: trigonometric branch; g(t) comes from the quadrature of
    # g' = -tau''/4 - mu1 chi / 2 - mu0 tau' / 2
    s = math.sqrt(-mu2)
    fields = []
    branches = [
        (_trig(2 * s, "cos"), ex.mul(ex.const(mu1 / (2 * s)), _trig(2 * s, "sin"))),
        (_trig(2 * s, "sin"), ex.mul(ex.const(-mu1 / (2 * s)), _trig(2 * s, "cos"))),
        (ex.ZERO, _trig(s, "cos")),
        (ex.ZERO, _trig(s, "sin")),
    ]
    for i, (tau, chi) in enumerate(branches):
        tau_t = ex.differentiate(tau, "t")
        tau_tt = ex.differentiate(tau_t, "t")
        gp = ex.add(ex.mul(ex.const(-0.25), tau_tt),
                    ex.add(ex.mul(ex.const(-0.5 * mu1), chi),
                           ex.mul(ex.const(-0.5 * mu0), tau_t)))
        g = ex.antiderivative(gp, "t", name=f"g{i + 1}")
        fields.append(_field_from_tau_chi(tau, chi, g, f, name=f"X{i + 1}"))
    return fields


def case_ii_vector_fields(nu0: float, nu1: float, zeta: float, f: Expr,
                          domain: tuple[float, float]) -> list[VectorField]:
    """The two nontrivial fields of a case II equation.

    (b, c) are re-fitted from f and the constraint c = -nu0 nu1 / 4 is
    enforced before construction.  nu1 > 0 uses the closed exponential
    forms with rho = nu0^2 nu1 / 4 - zeta; nu1 <= 0 solves tau''' = nu1 tau'
    with chi = nu0 tau' / 2 in the matching fundamental system.
    """
    b, c = _fit_bc(f, nu0, nu1, zeta, domain)
    if abs(c + 0.25 * nu0 * nu1) > RECOVERY_TOL * (1.0 + abs(c) + abs(nu0 * nu1)):
        raise ValidationError(
            f"constraint c = -nu0 nu1/4 violated: c={c:.6g}, nu0 nu1={nu0 * nu1:.6g}")
    x, t = ex.X, ex.T

    if nu1 > 1e-9 * (1.0 + abs(nu0) + abs(zeta)):
        r = math.sqrt(nu1)
        rho = nu0 ** 2 * nu1 / 4.0 - zeta
        xn = ex.add(x, ex.const(nu0))
        ep = ex.exp(ex.mul(ex.const(r), t))
        em = ex.exp(ex.mul(ex.const(-r), t))
        half = ex.const(0.5)

        def ufactor(envelope, sign):
            quad_term = ex.mul(ex.const(sign * r / 2), ex.powc(xn, 2.0))
            inner = ex.add(ex.sub(ex.mul(f, xn), quad_term),
                           ex.const(sign * rho / r - 0.5))
            return ex.mul(ex.mul(half, envelope), inner)

        x1 = VectorField(ex.div(ep, ex.const(r)), ex.mul(ex.mul(half, xn), ep),
                         ufactor(ep, +1.0), name="X1")
        x2 = VectorField(ex.neg(ex.div(em, ex.const(r))), ex.mul(ex.mul(half, xn), em),
                         ufactor(em, -1.0), name="X2")
        return [x1, x2]

    if abs(nu1) <= 1e-9 * (1.0 + abs(nu0) + abs(zeta)):
        t2 = ex.powc(t, 2.0)
        branches = [
            (t, ex.const(0.5 * nu0), ex.mul(ex.const(0.5 * nu0 * c - 0.5 * zeta), t)),
            (t2, ex.mul(ex.const(nu0), t),
             ex.sub(ex.mul(ex.const(0.5 * nu0 * c - 0.5 * zeta), t2),
                    ex.mul(ex.const(0.5), t))),
        ]
        return [_field_from_tau_chi(tau, chi, g, f, name=f"X{i + 1}")
                for i, (tau, chi, g) in enumerate(branches)]

    s = math.sqrt(-nu1)
    fields = []
    for i, tau in enumerate([_trig(s, "cos"), _trig(s, "sin")]):
        tau_t = ex.differentiate(tau, "t")
        tau_tt = ex.differentiate(tau_t, "t")
        chi = ex.mul(ex.const(0.5 * nu0), tau_t)
        gp = ex.add(ex.mul(ex.const(0.5 * nu0 * c - 0.5 * zeta), tau_t),
                    ex.mul(ex.const(-0.25), tau_tt))
        g = ex.antiderivative(gp, "t", name=f"g{i + 1}")
        fields.append(_field_from_tau_chi(tau, chi, g, f, name=f"X{i + 1}"))
    return fields


def _fit_bc(f: Expr, nu0, nu1, zeta, domain) -> tuple[float, float]:
    """(b, c) from f_x + f^2 = -b/(nu0+x)^2 - 2 c x + (nu1/4) x^2 + zeta."""
    q = ex.add(ex.differentiate(f, "x"), ex.mul(f, f))
    gap = 0.05 * (domain[1] - domain[0])
    xs = _sample_points(domain, 64, avoid=-nu0, gap=gap)
    qv = ex.lambdify(q, ("x",))(xs)
    target = qv - 0.25 * nu1 * xs ** 2 - zeta
    A = np.column_stack([-1.0 / (nu0 + xs) ** 2, -2.0 * xs])
    (b, c), res, *_ = np.linalg.lstsq(A, target, rcond=None)
    fitted = -b / (nu0 + xs) ** 2 - 2 * c * xs
    if np.max(np.abs(fitted - target)) > RECOVERY_TOL * (1.0 + np.max(np.abs(qv))):
        raise ValidationError(
            "f does not match the case II drift family for these (nu0, nu1, zeta)")
    return float(b), float(c)


# ---------------------------------------------------------------------------
# independent verification: the determining system as residuals

def fp_determining_residual(fpe: FPEquation, X: VectorField, grid=None,
                            tspan: tuple[float, float] = (0.0, 1.0)) -> float:
    """Sup-norm over an (x, t) grid of the determining-system residuals

        xi_x - tau_t / 2
        phi1_x + xi_t - f tau_t / 2 - xi f_x - tau f_t
        phi1_t + tau_t f_x + tau f_xt + xi f_xx + f phi1_x - phi1_xx / 2

    (the time-derivative terms vanish for autonomous drifts) plus, when a
    phi0 component is present, the requirement that phi0 solves the
    equation itself.
    """
    f = fpe.f
    f_x = ex.differentiate(f, "x")
    f_xx = ex.differentiate(f_x, "x")
    f_t = ex.differentiate(f, "t")
    f_xt = ex.differentiate(f_x, "t")
    tau_t = ex.differentiate(X.tau, "t")
    xi_x = ex.differentiate(X.xi, "x")
    xi_t = ex.differentiate(X.xi, "t")
    p1_x = ex.differentiate(X.phi1, "x")
    p1_t = ex.differentiate(X.phi1, "t")
    p1_xx = ex.differentiate(p1_x, "x")

    half = ex.const(0.5)
    r0 = ex.sub(xi_x, ex.mul(half, tau_t))
    r1 = ex.sub(ex.add(p1_x, xi_t),
                ex.add(ex.mul(ex.mul(half, f), tau_t),
                       ex.add(ex.mul(X.xi, f_x), ex.mul(X.tau, f_t))))
    r2 = ex.add(ex.add(p1_t, ex.mul(tau_t, f_x)),
                ex.add(ex.add(ex.mul(X.tau, f_xt), ex.mul(X.xi, f_xx)),
                       ex.sub(ex.mul(f, p1_x), ex.mul(half, p1_xx))))
    residuals = [r0, r1, r2]

    if X.phi0 != ex.ZERO:
        p0_x = ex.differentiate(X.phi0, "x")
        p0_xx = ex.differentiate(p0_x, "x")
        p0_t = ex.differentiate(X.phi0, "t")
        residuals.append(ex.add(ex.add(p0_t, ex.mul(f, p0_x)),
                                ex.sub(ex.mul(f_x, X.phi0), ex.mul(half, p0_xx))))

    if grid is None:
        xs = np.linspace(*it.interior(fpe.domain), 11)
        ts = np.linspace(*tspan, 11)
        grid = np.meshgrid(xs, ts, indexing="ij")
    gx, gt = grid
    worst = 0.0
    for r in residuals:
        vals = ex.lambdify(r, ("x", "t"))(gx, gt)
        if not np.all(np.isfinite(vals)):
            raise ValidationError("residual grid touches a singularity of f")
        worst = max(worst, float(np.max(np.abs(vals))))
    return worst
