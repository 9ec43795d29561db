"""Maximal-symmetry drifts via the Weber equation.

A drift f gives a maximal-symmetry Fokker-Planck equation exactly when
f' + f^2 = p(x) = mu0 + mu1 x + mu2 x^2.  The logarithmic substitution
f = u'/u linearizes this Riccati equation to u'' = p(x) u (the Weber
equation), whose solutions are parabolic cylinder functions; for mu2 > 0
an affine change of variable z = (4/mu2)^(1/4) (sqrt(mu2) x + mu1 /
(2 sqrt(mu2))) brings it to the standard form

    v'' + (lambda + 1/2 - z^2/4) v = 0,
    lambda = mu1^2 / (8 mu2^(3/2)) - mu0 / (2 sqrt(mu2)) - 1/2,

with D(n, z) = 2^(-n/2) exp(-z^2/4) H_n(z / sqrt 2) at integer lambda = n.
Drift generation composes a positive Weber solution with f = u'/u and
post-validates that gamma_xx of the result vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import expr as ex
from .errors import ValidationError
from .expr import Expr

#: anchor for the asymptotic normalization of the numeric D branch
Z_ANCHOR = 12.0

#: lambda is treated as a non-negative integer within this tolerance
INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class WeberProblem:
    """Reduction of u'' = p(x) u to the standard form, for mu2 > 0."""

    mu: tuple[float, float, float]
    z_slope: float
    z_offset: float
    lam: float

    def z_of_x(self, x):
        return self.z_slope * np.asarray(x, dtype=float) + self.z_offset

    def x_of_z(self, z):
        return (np.asarray(z, dtype=float) - self.z_offset) / self.z_slope


def riccati_to_weber(mu0: float, mu1: float, mu2: float) -> WeberProblem:
    if mu2 <= 0:
        raise ValidationError("the standard-form reduction requires mu2 > 0")
    s = math.sqrt(mu2)
    z_slope = (4.0 / mu2) ** 0.25 * s
    z_offset = (4.0 / mu2) ** 0.25 * mu1 / (2.0 * s)
    lam = mu1 ** 2 / (8.0 * mu2 * s) - mu0 / (2.0 * s) - 0.5
    return WeberProblem((mu0, mu1, mu2), z_slope, z_offset, lam)


def hermite(n: int, z):
    """Physicists' Hermite polynomial by the recurrence
    H_{n+1} = 2 z H_n - 2 n H_{n-1}."""
    if n < 0 or n != int(n):
        raise ValidationError("hermite order must be a non-negative integer")
    z = np.asarray(z, dtype=float)
    h_prev = np.ones_like(z)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * z
    for k in range(1, int(n)):
        h, h_prev = 2.0 * z * h - 2.0 * k * h_prev, h
    return h if h.ndim else float(h)


def _integer_lambda(lam: float) -> int | None:
    n = round(lam)
    if n >= 0 and abs(lam - n) <= INTEGER_TOL:
        return int(n)
    return None


_D_CACHE: dict[float, tuple] = {}


def _asymptotic_D(lam: float, z: float) -> tuple[float, float]:
    """Value and derivative of D(lam, .) at large z from the series
    z^lam e^{-z^2/4} (1 - lam(lam-1)/(2 z^2) + (lam)_4 / (8 z^4));
    truncation is far below the inward integration's own error."""
    a1 = -lam * (lam - 1) / 2.0
    a2 = lam * (lam - 1) * (lam - 2) * (lam - 3) / 8.0
    series = 1.0 + a1 / z ** 2 + a2 / z ** 4
    d_series = -2.0 * a1 / z ** 3 - 4.0 * a2 / z ** 5
    v = z ** lam * math.exp(-z * z / 4.0) * series
    dv = v * (lam / z - z / 2.0) + z ** lam * math.exp(-z * z / 4.0) * d_series
    return v, dv


def parabolic_cylinder_D(lam: float, z: float) -> float:
    """D(lam, z) for real argument.

    Non-negative integer lam uses the Hermite closed form; otherwise the
    standard-form ODE is integrated inward from z = 12 with the asymptotic
    normalization D ~ z^lam e^{-z^2/4} (the recessive direction, so the
    integration is self-stabilizing).  Arguments beyond the anchor are
    rejected.
    """
    n = _integer_lambda(lam)
    if n is not None:
        return float(2.0 ** (-n / 2.0) * math.exp(-z * z / 4.0)
                     * hermite(n, z / math.sqrt(2.0)))
    if z > Z_ANCHOR:
        raise ValidationError(
            f"z={z} beyond the integration range (anchor z={Z_ANCHOR})")
    if z == Z_ANCHOR:
        return _asymptotic_D(lam, z)[0]

    cached = _D_CACHE.get(lam)
    if cached is None or z < cached[0]:
        z_min = min(z, -6.0)
        v0, dv0 = _asymptotic_D(lam, Z_ANCHOR)
        # integrate with unit-scaled data (the equation is linear) so the
        # relative error control is uniform despite e^{-z^2/4} at the anchor
        sol = solve_ivp(
            lambda s, y: [y[1], (s * s / 4.0 - lam - 0.5) * y[0]],
            (Z_ANCHOR, z_min), [1.0, dv0 / v0], method="DOP853",
            rtol=1e-12, atol=1e-14, dense_output=True)
        if not sol.success:
            raise ValidationError(f"integration of the Weber equation failed: {sol.message}")
        cached = (z_min, sol, v0)
        _D_CACHE[lam] = cached
    return float(cached[1].sol(z)[0] * cached[2])


# ---------------------------------------------------------------------------
# drift generation

def _hermite_poly_expr(n: int, arg: Expr) -> Expr:
    """H_n(arg) as an expression, via the same recurrence."""
    h_prev: Expr = ex.ONE
    if n == 0:
        return h_prev
    h: Expr = ex.mul(ex.const(2.0), arg)
    for k in range(1, n):
        h, h_prev = ex.sub(ex.mul(ex.mul(ex.const(2.0), arg), h),
                           ex.mul(ex.const(2.0 * k), h_prev)), h
    return h


def generate_max_symmetry_drift(mu0: float, mu1: float, mu2: float,
                                domain: tuple[float, float],
                                branch: str = "auto",
                                f0: float = 0.0) -> Expr:
    """A drift f = u'/u with u > 0 solving u'' = (mu0 + mu1 x + mu2 x^2) u.

    branch "hermite" builds the closed form u = D(n, z(x)) (requires mu2 > 0
    and integer lambda); "numeric" integrates the Weber equation from the
    left end of the domain with data (u, u') = (1, f0); "auto" prefers the
    Hermite branch when it applies.  The result is post-validated: gamma_xx
    of the generated drift must vanish identically on the domain.
    """
    if branch not in ("auto", "hermite", "numeric"):
        raise ValidationError(f"unknown branch {branch!r}")
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise ValidationError("empty domain")

    use_hermite = False
    if branch in ("auto", "hermite") and mu2 > 0:
        lam = riccati_to_weber(mu0, mu1, mu2).lam
        use_hermite = _integer_lambda(lam) is not None
    if branch == "hermite" and not use_hermite:
        raise ValidationError(
            "the Hermite branch needs mu2 > 0 and a non-negative integer lambda")

    if use_hermite:
        wp = riccati_to_weber(mu0, mu1, mu2)
        n = _integer_lambda(wp.lam)
        z = ex.linear(wp.z_offset, wp.z_slope, ex.X)
        u = ex.mul(ex.const(2.0 ** (-n / 2.0)),
                   ex.mul(ex.exp(ex.mul(ex.const(-0.25), ex.powc(z, 2.0))),
                          _hermite_poly_expr(n, ex.div(z, ex.sqrt(ex.const(2.0))))))
        u_fn = ex.lambdify(u, ("x",))
        _require_positive(u_fn, (a, b))
        f = ex.div(ex.differentiate(u, "x"), u)
    else:
        f = _numeric_drift(mu0, mu1, mu2, (a, b), f0)

    _validate_case_i(f, (a, b))
    return f


def _numeric_drift(mu0, mu1, mu2, domain, f0) -> Expr:
    a, b = domain
    pad = 1e-3 * (b - a)
    sol = solve_ivp(
        lambda x, y: [y[1], (mu0 + mu1 * x + mu2 * x * x) * y[0]],
        (a, b + pad), [1.0, float(f0)], method="DOP853",
        rtol=1e-12, atol=1e-14, dense_output=True)
    if not sol.success:
        raise ValidationError(f"integration of the Weber equation failed: {sol.message}")
    dense = sol.sol
    _require_positive(lambda x: dense(x)[0], domain)

    p = ex.add(ex.linear(mu0, mu1, ex.X), ex.mul(ex.const(mu2), ex.powc(ex.X, 2.0)))

    def u_node() -> Expr:
        return ex.external("u", lambda x: float(dense(x)[0]), ("x",),
                           {"x": up_node})

    def up_node() -> Expr:
        return ex.external("u'", lambda x: float(dense(x)[1]), ("x",),
                           {"x": lambda: ex.mul(p, u_node())})

    return ex.div(up_node(), u_node())


def _require_positive(u_fn, domain, n: int = 513):
    xs = np.linspace(domain[0], domain[1], n)
    vals = np.asarray([float(u_fn(x)) for x in xs])
    if np.all(vals > 0):
        return
    # bisect the first sign change for the error message
    flips = np.nonzero(vals[:-1] * vals[1:] <= 0)[0]
    if flips.size == 0:
        raise ValidationError("the Weber solution u is not positive on the domain")
    lo, hi = xs[flips[0]], xs[flips[0] + 1]
    f_lo = float(u_fn(lo))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if float(u_fn(mid)) * f_lo > 0:
            lo = mid
        else:
            hi = mid
    raise ValidationError(
        f"the Weber solution u vanishes near x = {0.5 * (lo + hi):.10g}; the "
        "drift has a pole there, restrict the domain to one side")


def _validate_case_i(f: Expr, domain, tol: float = 1e-9):
    from .fp_symmetry import gamma

    gam_xx = ex.differentiate(ex.differentiate(gamma(f), "x"), "x")
    if not ex.is_identically_zero(gam_xx, domain, eps=tol):
        raise ValidationError("generated drift failed the gamma_xx == 0 validation")


def gamma_xx_residual(f: Expr, domain, n: int = 64) -> float:
    """Scaled sup of gamma_xx of f on the domain (reported by the CLI)."""
    from .fp_symmetry import gamma

    gam_xx = ex.differentiate(ex.differentiate(gamma(f), "x"), "x")
    worst = 0.0
    for x in ex.chebyshev_nodes(*domain, n):
        try:
            v, scale = ex.evaluate_with_scale(gam_xx, {"x": float(x)})
        except ex.EvalDomainError:
            continue
        worst = max(worst, abs(v) / (1.0 + scale))
    return worst
