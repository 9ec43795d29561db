"""Kozlov substitution y = integral dx / phi and pathwise integration.

Rectifying a time-preserving symmetry generator phi(x,t,w) of a unit-noise
Ito equation turns it into dy = F(t,w) dt + S(t,w) dw.  When phi does not
depend on w this is a proper Ito equation; otherwise F and S carry the
Wiener value and the equation is a *generalized* Ito equation, integrable
realization by realization:

    y(t) = y(0) + int_0^t F(s, w(s)) ds + int_0^t S(s, w(s)) dw(s)

with the dw integral read in the Ito (left-point) sense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import expr as ex
from . import ito as it
from .errors import PathDomainError, ValidationError
from .expr import Expr
from .ito import ItoEquation

#: x-independence acceptance threshold for the transformed coefficients
INDEPENDENCE_TOL = 1e-8


# ---------------------------------------------------------------------------
# Wiener paths

@dataclass(frozen=True)
class WienerPath:
    """One realization of the driving process on a uniform grid, w(0) = 0.
    Bit-exact reproducible from (seed, dt, T)."""

    times: np.ndarray
    values: np.ndarray
    seed: int
    dt: float
    T: float

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def coarsen(self, factor: int) -> "WienerPath":
        """Same realization on a grid coarsened by an integer factor."""
        n = self.times.size - 1
        if factor < 1 or n % factor:
            raise ValidationError(f"cannot coarsen {n} steps by {factor}")
        return WienerPath(self.times[::factor].copy(), self.values[::factor].copy(),
                          self.seed, self.dt * factor, self.T)


def wiener_path(seed: int, dt: float, T: float) -> WienerPath:
    if dt <= 0 or T <= 0:
        raise ValidationError("dt and T must be positive")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ValidationError("T must be an integer multiple of dt")
    rng = np.random.default_rng(seed)
    inc = rng.standard_normal(n) * np.sqrt(dt)
    values = np.concatenate([[0.0], np.cumsum(inc)])
    return WienerPath(np.linspace(0.0, T, n + 1), values, int(seed), float(dt), float(T))


def wiener_substream(master_seed: int, index: int, dt: float, T: float) -> WienerPath:
    """Independent path from a per-index substream of the master seed."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    rng = np.random.default_rng(ss)
    n = int(round(T / dt))
    inc = rng.standard_normal(n) * np.sqrt(dt)
    values = np.concatenate([[0.0], np.cumsum(inc)])
    return WienerPath(np.linspace(0.0, T, n + 1), values, int(master_seed),
                      float(dt), float(T))


# ---------------------------------------------------------------------------
# the substitution itself

@dataclass(frozen=True)
class KozlovTransform:
    """y(x,t,w) with dy/dx = 1/phi, plus an inverse.

    ``kind`` records the recognized shape: "linear" when phi is x-free
    (y = x/phi), "exponential" when phi_x/phi is a constant beta
    (y = -1/(beta phi)), and "quadrature" otherwise.
    """

    phi: Expr
    domain: tuple[float, float]
    kind: str
    expr: Expr
    beta: float | None = None
    x_ref: float = 0.0

    def value(self, x: float, t: float = 0.0, w: float = 0.0) -> float:
        return ex.evaluate(self.expr, {"x": float(x), "t": float(t), "w": float(w)})

    def inverse(self, y: float, t: float = 0.0, w: float = 0.0) -> float:
        if self.kind == "linear":
            return float(y) * ex.evaluate(self.phi, {"x": 0.0, "t": t, "w": w})
        if self.kind == "exponential":
            amp = ex.evaluate(self.phi, {"x": 0.0, "t": t, "w": w})
            arg = -1.0 / (self.beta * float(y) * amp)
            if arg <= 0.0:
                raise PathDomainError(
                    f"inverse Kozlov map undefined: -1/(beta y A) = {arg:.3e} <= 0")
            return float(np.log(arg) / self.beta)
        lo, hi = it.interior(self.domain, margin=1e-6)
        g = lambda u: self.value(u, t, w) - float(y)
        glo, ghi = g(lo), g(hi)
        if glo * ghi > 0:
            raise PathDomainError(f"y={y} outside the image of the Kozlov map")
        return float(brentq(g, lo, hi, xtol=1e-12))


def _phi_nonzero(phi: Expr, domain, tspan=(0.0, 1.0), wspan=it.DEFAULT_WSPAN) -> None:
    fn = ex.lambdify(phi, ("x", "t", "w"))
    xs = ex.chebyshev_nodes(*it.interior(domain), 16)
    ts = ex.chebyshev_nodes(*tspan, 5)
    ws = ex.chebyshev_nodes(*wspan, 5)
    vals = fn(xs[:, None, None], ts[None, :, None], ws[None, None, :])
    if not np.all(np.isfinite(vals)):
        raise ValidationError("phi is singular inside the sampling box")
    if np.min(vals) * np.max(vals) <= 0 or np.min(np.abs(vals)) <= 1e-12 * (
            1.0 + np.max(np.abs(vals))):
        raise ValidationError("phi vanishes inside the domain; the Kozlov map "
                              "is undefined")


def _quadrature_node(integrand: Expr, x_ref: float, label: str) -> ex.External:
    """Node for Q(x,t,w) = integral_{x_ref}^{x} integrand dx' with all three
    partials registered (d/dx is the integrand; d/dt and d/dw commute with
    the integral)."""

    g = ex.lambdify(integrand, ("x", "t", "w"))

    def fn(x: float, t: float, w: float) -> float:
        val, _ = quad(lambda u: float(g(u, t, w)), x_ref, x,
                      epsabs=1e-12, epsrel=1e-12, limit=200)
        return val

    return ex.external(
        label, fn, ("x", "t", "w"),
        {
            "x": lambda: integrand,
            "t": lambda: _quadrature_node(ex.differentiate(integrand, "t"),
                                          x_ref, label + "_t"),
            "w": lambda: _quadrature_node(ex.differentiate(integrand, "w"),
                                          x_ref, label + "_w"),
        })


def kozlov_map(phi: Expr, domain: tuple[float, float]) -> KozlovTransform:
    """Build y = integral dx/phi, in closed form for the x-free and
    exponential generator shapes and by quadrature otherwise."""
    _phi_nonzero(phi, domain)
    box = {"x": it.interior(domain), "t": (0.0, 1.0), "w": it.DEFAULT_WSPAN}
    bounds = {v: box[v] for v in (ex.free_variables(phi) | {"x"})}

    phi_x = ex.differentiate(phi, "x")
    if ex.is_identically_zero_on_box(phi_x, bounds):
        return KozlovTransform(phi, domain, "linear", ex.div(ex.X, phi))

    ratio = ex.div(phi_x, phi)
    constant = all(
        ex.is_identically_zero_on_box(ex.differentiate(ratio, v), bounds)
        for v in ("x", "t", "w"))
    if constant:
        mid = {v: 0.5 * (lo + hi) for v, (lo, hi) in bounds.items()}
        mid.setdefault("t", 0.5)
        mid.setdefault("w", 0.0)
        beta = float(ex.evaluate(ratio, mid))
        expr = ex.div(ex.const(-1.0), ex.mul(ex.const(beta), phi))
        return KozlovTransform(phi, domain, "exponential", expr, beta=beta)

    x_ref = 0.5 * (domain[0] + domain[1])
    node = _quadrature_node(ex.div(ex.ONE, phi), x_ref, "y")
    return KozlovTransform(phi, domain, "quadrature", node, x_ref=x_ref)


# ---------------------------------------------------------------------------
# the transformed equation

@dataclass(frozen=True)
class GeneralizedItoEquation:
    """dy = F(t,w) dt + S(t,w) dw.  ``deterministic`` is set when the source
    generator had no w-dependence, in which case F and S are w-free and the
    equation is a proper Ito equation."""

    F: Expr
    S: Expr
    transform: KozlovTransform
    x_anchor: float
    deterministic: bool

    def F_at(self, t: float, w: float) -> float:
        return ex.evaluate(self.F, {"t": float(t), "w": float(w)})

    def S_at(self, t: float, w: float) -> float:
        return ex.evaluate(self.S, {"t": float(t), "w": float(w)})


def transform_equation(eq: ItoEquation, tr: KozlovTransform,
                       tspan=(0.0, 1.0), wspan=it.DEFAULT_WSPAN) -> GeneralizedItoEquation:
    """Apply the Ito formula to y along dx = f dt + dw (x and w share the
    same driving increments):

        F = y_t + f y_x + (y_xx + 2 y_xw + y_ww) / 2,      S = y_x + y_w.

    Both must come out independent of x; a residual x-dependence means the
    transform was not built from a symmetry and is rejected.
    """
    if not eq.unit_noise:
        raise ValidationError("transform_equation requires unit noise; normalize first")
    y = tr.expr
    y_x = ex.differentiate(y, "x")
    y_w = ex.differentiate(y, "w")
    lap = ex.add(ex.differentiate(y_x, "x"),
                 ex.add(ex.mul(ex.const(2.0), ex.differentiate(y_x, "w")),
                        ex.differentiate(y_w, "w")))
    G = ex.add(ex.differentiate(y, "t"),
               ex.add(ex.mul(eq.f, y_x), ex.mul(ex.const(0.5), lap)))
    S_full = ex.add(y_x, y_w)

    for label, expr_ in (("F", G), ("S", S_full)):
        if not _x_independent(expr_, eq.domain, tspan, wspan):
            raise ValidationError(
                f"transformed coefficient {label} still depends on x; "
                "the generator is not a symmetry of this equation")

    x0 = 0.5 * (eq.domain[0] + eq.domain[1])
    F = ex.substitute(G, "x", x0)
    S = ex.substitute(S_full, "x", x0)
    deterministic = ex.is_identically_zero_on_box(
        ex.differentiate(tr.phi, "w"),
        {"x": it.interior(eq.domain), "t": tspan, "w": wspan})
    return GeneralizedItoEquation(F, S, tr, x0, deterministic)


def _x_independent(e: Expr, domain, tspan, wspan, tol=INDEPENDENCE_TOL) -> bool:
    xs = ex.chebyshev_nodes(*it.interior(domain), 7)
    ts = np.linspace(*tspan, 4)
    ws = np.linspace(*wspan, 4)
    for t in ts:
        for w in ws:
            vals, scale = [], 1.0
            for x in xs:
                try:
                    v, s = ex.evaluate_with_scale(
                        e, {"x": float(x), "t": float(t), "w": float(w)})
                except ex.EvalDomainError:
                    continue
                vals.append(v)
                scale = max(scale, s)
            if len(vals) >= 2 and np.ptp(vals) > tol * (1.0 + scale):
                return False
    return True


# ---------------------------------------------------------------------------
# pathwise integration

def integrate_path(geq: GeneralizedItoEquation, path: WienerPath,
                   y0: float) -> np.ndarray:
    """y on the path grid: trapezoid rule for the dt integral, left-point
    (Ito) sums for the dw integral."""
    F_fn = ex.lambdify(geq.F, ("t", "w"))
    S_fn = ex.lambdify(geq.S, ("t", "w"))
    Fv = F_fn(path.times, path.values)
    Sv = S_fn(path.times, path.values)
    if not (np.all(np.isfinite(Fv)) and np.all(np.isfinite(Sv))):
        raise PathDomainError("F or S not finite along the path")
    dt = path.dt
    dW = path.increments()
    drift = np.concatenate([[0.0], np.cumsum(0.5 * dt * (Fv[1:] + Fv[:-1]))])
    noise = np.concatenate([[0.0], np.cumsum(Sv[:-1] * dW)])
    return y0 + drift + noise


def map_back(geq: GeneralizedItoEquation, y: np.ndarray,
             path: WienerPath) -> np.ndarray:
    """x(t) = inverse Kozlov map of y(t) along the same path."""
    tr = geq.transform
    out = np.empty_like(y)
    for i, (yi, ti, wi) in enumerate(zip(y, path.times, path.values)):
        try:
            out[i] = tr.inverse(float(yi), float(ti), float(wi))
        except PathDomainError as e:
            raise PathDomainError(f"at t={ti:.6g}: {e}") from e
    return out


def kozlov_solve(eq: ItoEquation, n_paths: int, dt: float, T: float, seed: int,
                 x0: float | None = None, tspan=None):
    """End-to-end pathwise integration through the symmetry: classify,
    rectify, integrate each substream path, and map back to x."""
    from .symmetry import SymmetryKind, classify

    cls = classify(eq, tspan=tspan or (0.0, max(T, 1.0)))
    if cls.kind == SymmetryKind.NO_SYMMETRY:
        raise ValidationError("equation admits no standard symmetry; "
                              "Kozlov integration does not apply")
    tr = kozlov_map(cls.generator, eq.domain)
    geq = transform_equation(eq, tr, tspan=(0.0, max(T, 1.0)))
    x_start = 0.5 * (eq.domain[0] + eq.domain[1]) if x0 is None else float(x0)
    results = []
    for j in range(n_paths):
        path = wiener_substream(seed, j, dt, T)
        y0 = tr.value(x_start, 0.0, 0.0)
        y = integrate_path(geq, path, y0)
        x = map_back(geq, y, path)
        results.append((path, y, x))
    return cls, geq, results
