"""Scalar Ito equations dx = f(x,t) dt + sigma(x,t) dw.

Holds the equation model, the change of variable that normalizes the noise
coefficient to one, the Ito Laplacian, and the residuals of the determining
equations that a candidate time-preserving symmetry generator phi(x,t,w)
must satisfy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import expr as ex
from .errors import EvalDomainError, NotSupportedError, ValidationError
from .expr import Expr

DEFAULT_TSPAN = (0.0, 1.0)
DEFAULT_WSPAN = (-2.0, 2.0)

#: default residual grid: 11 x 11 x 11 points over (x, t, w)
GRID_POINTS = 11

#: acceptance tolerance for the determining-equation residuals
SYMMETRY_TOL = 1e-8


def interior(domain: tuple[float, float], margin: float = 0.05) -> tuple[float, float]:
    """Shrink an open interval so sample grids avoid its endpoints."""
    a, b = domain
    d = (b - a) * margin
    return a + d, b - d


@dataclass(frozen=True)
class ItoEquation:
    """Immutable scalar Ito equation with an open spatial domain."""

    f: Expr
    sigma: Expr
    domain: tuple[float, float]
    autonomous: bool

    @property
    def unit_noise(self) -> bool:
        return self.sigma == ex.ONE or self.sigma == ex.Const(1.0)

    def to_json(self) -> dict:
        return {"drift": str(self.f), "sigma": str(self.sigma),
                "domain": list(self.domain)}


def ito_equation(f: Expr | str, sigma: Expr | str = "1",
                 domain: tuple[float, float] = (-10.0, 10.0),
                 tspan: tuple[float, float] = DEFAULT_TSPAN) -> ItoEquation:
    """Validating constructor.

    Rejects a noise coefficient that vanishes anywhere on the sampled
    domain box, and computes the autonomy flag by identity testing the time
    derivatives of both coefficients.
    """
    if isinstance(f, str):
        f = ex.parse(f)
    if isinstance(sigma, str):
        sigma = ex.parse(sigma)
    a, b = float(domain[0]), float(domain[1])
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise ValidationError(f"domain must be a finite open interval, got {domain}")
    bad = (ex.free_variables(f) | ex.free_variables(sigma)) - {"x", "t"}
    if bad:
        raise ValidationError("equation coefficients may depend on x and t only")

    box = {"x": interior((a, b)), "t": tspan}
    sig = ex.lambdify(sigma, ("x", "t"))
    xs = ex.chebyshev_nodes(*interior((a, b)), 32)
    ts = ex.chebyshev_nodes(*tspan, 8)
    vals = sig(xs[:, None], ts[None, :])
    if not np.all(np.isfinite(vals)):
        raise ValidationError("sigma is singular inside the domain")
    scale = float(np.max(np.abs(vals)))
    if np.min(np.abs(vals)) <= 1e-12 * (1.0 + scale) or np.min(vals) * np.max(vals) < 0:
        raise ValidationError("sigma must be nonzero throughout the domain")

    autonomous = (ex.is_identically_zero_on_box(ex.differentiate(f, "t"), box)
                  and ex.is_identically_zero_on_box(ex.differentiate(sigma, "t"), box))
    return ItoEquation(f, sigma, (a, b), autonomous)


def equation_from_json(doc: dict | str) -> ItoEquation:
    """Load from the equation file schema
    ``{"drift": <expr>, "sigma": <expr>, "domain": [a, b]}``."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        drift = doc["drift"]
        domain = doc["domain"]
    except (KeyError, TypeError) as e:
        raise ValidationError(f"equation document missing field: {e}") from e
    sigma = doc.get("sigma", "1")
    if not (isinstance(domain, (list, tuple)) and len(domain) == 2):
        raise ValidationError("domain must be a two-element array [a, b]")
    return ito_equation(drift, sigma, (float(domain[0]), float(domain[1])))


# ---------------------------------------------------------------------------
# noise normalization

@dataclass(frozen=True)
class Transform:
    """Monotone change of variable x -> xi with xi' = 1/sigma(x).

    ``forward_expr`` is set when the map has a closed form (constant sigma);
    otherwise the map is evaluated by adaptive quadrature from ``x_ref`` and
    inverted by a bracketed root find.
    """

    sigma: Expr
    domain: tuple[float, float]
    x_ref: float
    forward_expr: Expr | None = None

    def forward(self, x: float) -> float:
        if self.forward_expr is not None:
            return ex.evaluate(self.forward_expr, {"x": float(x)})
        s = ex.lambdify(self.sigma, ("x",))
        val, _ = quad(lambda u: 1.0 / float(s(u)), self.x_ref, float(x),
                      epsabs=1e-12, epsrel=1e-12, limit=200)
        return val

    def inverse(self, xi: float) -> float:
        a, b = self.domain
        if self.forward_expr is not None and isinstance(self.forward_expr, ex.Div):
            # linear closed form xi = x / c
            c = self.forward_expr.right
            if isinstance(c, ex.Const):
                return float(xi) * c.value
        lo, hi = interior(self.domain, margin=1e-6)
        fl, fh = self.forward(lo) - xi, self.forward(hi) - xi
        if fl * fh > 0:
            raise EvalDomainError(f"xi={xi} outside the image of the transform")
        return float(brentq(lambda u: self.forward(u) - xi, lo, hi, xtol=1e-12))

    def sample_table(self, n: int = 33) -> list[tuple[float, float]]:
        xs = np.linspace(*interior(self.domain, margin=0.01), n)
        return [(float(x), float(self.forward(x))) for x in xs]


def normalize_noise(eq: ItoEquation) -> tuple[ItoEquation, Transform]:
    """Reduce to unit noise via xi with xi' = 1/sigma.

    The transformed drift is f/sigma - sigma_x/2 expressed in the new
    variable.  Time-dependent noise coefficients are not supported; classify
    and integrate those after an explicit reduction of your own.
    """
    box = {"x": interior(eq.domain), "t": DEFAULT_TSPAN}
    if not ex.is_identically_zero_on_box(ex.differentiate(eq.sigma, "t"), box):
        raise NotSupportedError(
            "noise normalization implemented for sigma depending on x alone")
    sigma = eq.sigma
    a, b = eq.domain

    if ex.is_identically_zero(ex.differentiate(sigma, "x"), eq.domain):
        # constant sigma: xi = x/c exactly
        c = ex.evaluate(sigma, {"x": 0.5 * (a + b), "t": 0.0})
        tr = Transform(sigma, eq.domain, 0.0, forward_expr=ex.div(ex.X, ex.const(c)))
        drift = ex.div(ex.substitute(eq.f, "x", ex.mul(ex.const(c), ex.X)), ex.const(c))
        lo, hi = sorted((a / c, b / c))
        return ito_equation(drift, "1", (lo, hi)), tr

    x_ref = 0.5 * (a + b)
    tr = Transform(sigma, eq.domain, x_ref)
    psi = ex.sub(ex.div(eq.f, sigma),
                 ex.mul(ex.const(0.5), ex.differentiate(sigma, "x")))
    drift = _compose_with_inverse(psi, tr, "Phi")
    lo = tr.forward(interior(eq.domain, margin=1e-3)[0])
    hi = tr.forward(interior(eq.domain, margin=1e-3)[1])
    lo, hi = sorted((lo, hi))
    return ito_equation(drift, "1", (lo, hi)), tr


def _compose_with_inverse(body: Expr, tr: Transform, name: str) -> Expr:
    """body(x,t) composed with x = inverse(xi), as an expression in the new
    spatial variable (still written ``x``).  The chain rule d/dxi = sigma *
    d/dx keeps the composition differentiable to any order."""
    body_fn = ex.lambdify(body, ("x", "t"))

    def fn(xi: float, t: float) -> float:
        return float(body_fn(tr.inverse(xi), t))

    def dx() -> Expr:
        return _compose_with_inverse(ex.mul(ex.differentiate(body, "x"), tr.sigma),
                                     tr, name + "'")

    def dt() -> Expr:
        return _compose_with_inverse(ex.differentiate(body, "t"), tr, name + "_t")

    return ex.external(name, fn, ("x", "t"), {"x": dx, "t": dt})


# ---------------------------------------------------------------------------
# determining equations

def ito_laplacian(phi: Expr, sigma: Expr) -> Expr:
    """phi_ww + 2 sigma phi_xw + sigma^2 phi_xx."""
    return ex.add(
        ex.differentiate(ex.differentiate(phi, "w"), "w"),
        ex.add(
            ex.mul(ex.mul(ex.const(2.0), sigma),
                   ex.differentiate(ex.differentiate(phi, "x"), "w")),
            ex.mul(ex.mul(sigma, sigma),
                   ex.differentiate(ex.differentiate(phi, "x"), "x")),
        ),
    )


def residual_grid(domain: tuple[float, float],
                  tspan: tuple[float, float] = DEFAULT_TSPAN,
                  wspan: tuple[float, float] = DEFAULT_WSPAN,
                  n: int = GRID_POINTS):
    xs = np.linspace(*interior(domain), n)
    ts = np.linspace(*tspan, n)
    ws = np.linspace(*wspan, n)
    return np.meshgrid(xs, ts, ws, indexing="ij")


def _residual_exprs(eq: ItoEquation, phi: Expr) -> tuple[Expr, Expr, list[Expr]]:
    f, sigma = eq.f, eq.sigma
    r1_terms = [
        ex.differentiate(phi, "t"),
        ex.mul(f, ex.differentiate(phi, "x")),
        ex.neg(ex.mul(phi, ex.differentiate(f, "x"))),
        ex.mul(ex.const(0.5), ito_laplacian(phi, sigma)),
    ]
    r2_terms = [
        ex.differentiate(phi, "w"),
        ex.mul(sigma, ex.differentiate(phi, "x")),
        ex.neg(ex.mul(phi, ex.differentiate(sigma, "x"))),
    ]
    r1 = r1_terms[0]
    for term in r1_terms[1:]:
        r1 = ex.add(r1, term)
    r2 = r2_terms[0]
    for term in r2_terms[1:]:
        r2 = ex.add(r2, term)
    return r1, r2, r1_terms + r2_terms


def symmetry_residuals(eq: ItoEquation, phi: Expr, grid=None) -> tuple[float, float]:
    """Sup-norms over the sample grid of the two determining equations

    r1 = phi_t + f phi_x - phi f_x + (1/2) Laplacian(phi)
    r2 = phi_w + sigma phi_x - phi sigma_x

    A generator is a symmetry when both vanish; see :func:`is_symmetry` for
    the scaled acceptance threshold.
    """
    if grid is None:
        grid = residual_grid(eq.domain)
    xs, ts, ws = grid
    r1e, r2e, _ = _residual_exprs(eq, phi)
    r1v = ex.lambdify(r1e, ("x", "t", "w"))(xs, ts, ws)
    r2v = ex.lambdify(r2e, ("x", "t", "w"))(xs, ts, ws)
    if not (np.all(np.isfinite(r1v)) and np.all(np.isfinite(r2v))):
        raise EvalDomainError("residual grid touches a singularity of f or phi")
    return float(np.max(np.abs(r1v))), float(np.max(np.abs(r2v)))


def residual_scale(eq: ItoEquation, phi: Expr, grid=None) -> float:
    """Largest magnitude of any individual determining-equation term on the
    grid; used to normalize the acceptance tolerance."""
    if grid is None:
        grid = residual_grid(eq.domain)
    xs, ts, ws = grid
    _, _, terms = _residual_exprs(eq, phi)
    scale = 0.0
    for term in terms:
        vals = ex.lambdify(term, ("x", "t", "w"))(xs, ts, ws)
        finite = vals[np.isfinite(vals)]
        if finite.size:
            scale = max(scale, float(np.max(np.abs(finite))))
    return scale


def is_symmetry(eq: ItoEquation, phi: Expr, grid=None, tol: float = SYMMETRY_TOL) -> bool:
    r1, r2 = symmetry_residuals(eq, phi, grid)
    scale = residual_scale(eq, phi, grid)
    return max(r1, r2) < tol * (1.0 + scale)
