"""Classification of unit-noise scalar Ito equations by their
time-preserving Lie-point symmetries.

An autonomous equation dx = f(x) dt + dw admits such a symmetry exactly when
f is one of three shapes, each with an explicit generator phi(x,t,w):

  (A) f = h0                     phi = P(x - w - h0 t), P arbitrary smooth
  (B) f = h0 + k0 x              phi = exp(k0 t)
  (C) f = h0 + k0 exp(beta x)    phi = exp(beta (x - w - h0 t)),  beta != 0

and the analogous trichotomy with h(t), k(t) for time-dependent drifts.
Generators of shape (A) with non-constant P and of shape (C) depend on the
Wiener variable w ("random" symmetries); the others are deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from . import ito as it
from .errors import IndeterminateError, ValidationError
from .expr import Expr

#: relative tolerance for the parameter-recovery consistency checks
RECOVERY_TOL = 1e-7


class SymmetryKind(str, enum.Enum):
    TYPE_A = "TypeA"
    TYPE_B = "TypeB"
    TYPE_C = "TypeC"
    NO_SYMMETRY = "NoSymmetry"


@dataclass(frozen=True)
class SymmetryClass:
    """Outcome of the classification.

    ``h`` and ``k`` are floats for autonomous equations and Exprs in t for
    time-dependent ones.  ``generator`` is the representative phi; type A
    additionally carries the random representative P = identity in
    ``alternates``.
    """

    kind: SymmetryKind
    h: float | Expr | None = None
    k: float | Expr | None = None
    beta: float | None = None
    generator: Expr | None = None
    random: bool = False
    note: str | None = None
    alternates: tuple[Expr, ...] = ()

    def parameters(self) -> dict:
        out = {}
        if self.h is not None:
            out["h0" if isinstance(self.h, float) else "h"] = \
                self.h if isinstance(self.h, float) else str(self.h)
        if self.k is not None:
            out["k0" if isinstance(self.k, float) else "k"] = \
                self.k if isinstance(self.k, float) else str(self.k)
        if self.beta is not None:
            out["beta"] = self.beta
        return out


NO_SYMMETRY = SymmetryClass(SymmetryKind.NO_SYMMETRY)


def _constant_value(e: Expr, interval, var="x", bindings=None) -> float:
    """Value of an expression known to be constant on the interval."""
    a, b = interval
    bind = dict(bindings or {})
    bind[var] = 0.5 * (a + b)
    return ex.evaluate(e, bind)


def classify_autonomous(f: Expr, domain: tuple[float, float]) -> SymmetryClass:
    """Trichotomy for autonomous drifts under unit noise.

    The test order A, B, C reports the most specific type: a constant drift
    is type A even though it is also the k0 = 0 degeneration of B and C.
    """
    if "t" in ex.free_variables(f) and not ex.is_identically_zero_on_box(
            ex.differentiate(f, "t"), {"x": it.interior(domain), "t": (0.0, 1.0)}):
        raise ValidationError("drift is not autonomous; use classify_time_dependent")
    f = ex.substitute(f, "t", 0.0)

    f1 = ex.differentiate(f, "x")
    f2 = ex.differentiate(f1, "x")
    f3 = ex.differentiate(f2, "x")

    if ex.is_identically_zero(f1, domain):
        h0 = _constant_value(f, domain)
        zeta = ex.sub(ex.sub(ex.X, ex.W), ex.mul(ex.const(h0), ex.T))
        return SymmetryClass(
            SymmetryKind.TYPE_A, h=h0, generator=ex.ONE, random=False,
            note="constant drift; also the k0 = 0 degeneration of types B and C",
            alternates=(zeta,))

    if ex.is_identically_zero(f2, domain):
        xm = 0.5 * (domain[0] + domain[1])
        k0 = ex.evaluate(f1, {"x": xm})
        h0 = ex.evaluate(f, {"x": xm}) - k0 * xm
        return SymmetryClass(SymmetryKind.TYPE_B, h=h0, k=k0,
                             generator=ex.exp(ex.mul(ex.const(k0), ex.T)),
                             random=False)

    # exponential shape: f''^2 == f''' f' pointwise makes beta = f''/f' constant
    caseC_test = ex.sub(ex.mul(f2, f2), ex.mul(f3, f1))
    try:
        shape_ok = ex.is_identically_zero(caseC_test, domain, eps=RECOVERY_TOL)
    except IndeterminateError:
        shape_ok = False
    if shape_ok:
        beta = _recover_beta(f1, f2, domain)
        if beta is not None:
            xs = ex.chebyshev_nodes(*it.interior(domain), 16)
            x_star = float(xs[np.argmax(np.abs(ex.lambdify(f1, ("x",))(xs)))])
            k0 = float(ex.evaluate(f1, {"x": x_star}) / (beta * np.exp(beta * x_star)))
            rem = ex.sub(f, ex.mul(ex.const(k0), ex.exp(ex.mul(ex.const(beta), ex.X))))
            h0 = _constant_value(rem, domain)
            if ex.is_identically_zero(ex.sub(rem, ex.const(h0)), domain,
                                      eps=RECOVERY_TOL):
                gen = ex.exp(ex.mul(ex.const(beta),
                                    ex.sub(ex.sub(ex.X, ex.W),
                                           ex.mul(ex.const(h0), ex.T))))
                return SymmetryClass(SymmetryKind.TYPE_C, h=h0, k=k0, beta=beta,
                                     generator=gen, random=True)

    return NO_SYMMETRY


def _recover_beta(f1: Expr, f2: Expr, domain, bindings=None) -> float | None:
    """beta = f''/f' at the sample point where |f'| is largest, validated for
    constancy across the grid (relative tolerance RECOVERY_TOL)."""
    xs = ex.chebyshev_nodes(*it.interior(domain), 32)
    bind = dict(bindings or {})
    vals1 = np.array([_safe_eval(f1, {**bind, "x": float(x)}) for x in xs])
    vals2 = np.array([_safe_eval(f2, {**bind, "x": float(x)}) for x in xs])
    good = np.isfinite(vals1) & np.isfinite(vals2)
    if not np.any(good):
        return None
    vals1, vals2 = vals1[good], vals2[good]
    i = int(np.argmax(np.abs(vals1)))
    if vals1[i] == 0.0:
        return None
    beta = vals2[i] / vals1[i]
    if beta == 0.0:
        return None
    strong = np.abs(vals1) > 1e-9 * (1.0 + np.max(np.abs(vals1)))
    ratios = vals2[strong] / vals1[strong]
    if np.max(np.abs(ratios - beta)) > RECOVERY_TOL * (1.0 + abs(beta)):
        return None
    return float(beta)


def _safe_eval(e: Expr, bindings) -> float:
    try:
        return ex.evaluate(e, bindings)
    except Exception:
        return np.nan


def classify_time_dependent(f: Expr, domain: tuple[float, float],
                            tspan: tuple[float, float] = (0.0, 1.0)) -> SymmetryClass:
    """Same trichotomy with h(t), k(t) recovered as expression slices and
    their primitives H(t), K(t) computed by adaptive quadrature from t = 0."""
    box = {"x": it.interior(domain), "t": tspan}
    xm = 0.5 * (domain[0] + domain[1])
    f_x = ex.differentiate(f, "x")
    f_xx = ex.differentiate(f_x, "x")
    f_xxx = ex.differentiate(f_xx, "x")

    if ex.is_identically_zero_on_box(f_x, box):
        h = ex.substitute(f, "x", xm)
        H = ex.antiderivative(h, "t", name="H")
        zeta = ex.sub(ex.sub(ex.X, ex.W), H)
        return SymmetryClass(SymmetryKind.TYPE_A, h=h, generator=ex.ONE,
                             random=False, alternates=(zeta,))

    if ex.is_identically_zero_on_box(f_xx, box):
        k = ex.substitute(f_x, "x", xm)
        h = ex.substitute(ex.sub(f, ex.mul(k, ex.X)), "x", xm)
        K = ex.antiderivative(k, "t", name="K")
        return SymmetryClass(SymmetryKind.TYPE_B, h=h, k=k,
                             generator=ex.exp(K), random=False)

    caseC_test = ex.sub(ex.mul(f_xx, f_xx), ex.mul(f_xxx, f_x))
    try:
        shape_ok = ex.is_identically_zero_on_box(caseC_test, box, eps=RECOVERY_TOL)
    except IndeterminateError:
        shape_ok = False
    if shape_ok:
        beta = _recover_beta(f_x, f_xx, domain,
                             bindings={"t": 0.5 * (tspan[0] + tspan[1])})
        if beta is not None:
            k = ex.div(ex.substitute(f_x, "x", xm),
                       ex.const(beta * float(np.exp(beta * xm))))
            rem = ex.sub(f, ex.mul(k, ex.exp(ex.mul(ex.const(beta), ex.X))))
            if ex.is_identically_zero_on_box(ex.differentiate(rem, "x"), box,
                                             eps=RECOVERY_TOL):
                h = ex.substitute(rem, "x", xm)
                H = ex.antiderivative(h, "t", name="H")
                gen = ex.exp(ex.mul(ex.const(beta),
                                    ex.sub(ex.sub(ex.X, ex.W), H)))
                return SymmetryClass(SymmetryKind.TYPE_C, h=h, k=k, beta=beta,
                                     generator=gen, random=True)

    return NO_SYMMETRY


def classify(eq: it.ItoEquation, tspan: tuple[float, float] = (0.0, 1.0)) -> SymmetryClass:
    """Classify a unit-noise equation, dispatching on autonomy."""
    if not eq.unit_noise:
        raise ValidationError("classification requires unit noise; normalize first")
    if eq.autonomous:
        return classify_autonomous(eq.f, eq.domain)
    return classify_time_dependent(eq.f, eq.domain, tspan)


# ---------------------------------------------------------------------------
# time-dependent case (C): symmetries of the associated Fokker-Planck
# equation exist only under a compatibility constraint on h and k.

@dataclass(frozen=True)
class TimeDependentCaseC:
    """Result of the h/k compatibility check for a time-dependent
    exponential drift f = h(t) + k(t) exp(beta x).

    ``case`` is "b" when h + k'/(beta k) is a constant c2; the associated
    Fokker-Planck equation then has the two symmetries

        X1 = d/dt - (k'/(beta k)) d/dx,    X2 = u d/du

    and "a" otherwise (only u d/du beyond the superposition symmetries).
    """

    case: str
    c2: float | None
    fields: tuple


def td_caseC_fp_constraint(h: Expr, k: Expr, beta: float,
                           tspan: tuple[float, float] = (0.0, 1.0)) -> TimeDependentCaseC:
    from .fp_symmetry import VectorField, Z1

    if beta == 0.0:
        raise ValidationError("beta must be nonzero")
    kt = ex.lambdify(k, ("t",))
    ts = ex.chebyshev_nodes(*tspan, 32)
    kv = kt(ts)
    if (not np.all(np.isfinite(kv)) or np.min(kv) * np.max(kv) <= 0
            or np.min(np.abs(kv)) <= 1e-12 * (1 + np.max(np.abs(kv)))):
        raise ValidationError("k(t) vanishes in the requested time range")

    drift_shift = ex.div(ex.differentiate(k, "t"), ex.mul(ex.const(beta), k))
    g = ex.add(h, drift_shift)
    c2 = ex.evaluate(g, {"t": 0.5 * (tspan[0] + tspan[1])})
    if ex.is_identically_zero(ex.sub(g, ex.const(c2)), tspan, var="t",
                              eps=RECOVERY_TOL):
        x1 = VectorField(tau=ex.ONE, xi=ex.neg(drift_shift), phi1=ex.ZERO, name="X1")
        return TimeDependentCaseC("b", float(c2), (x1, Z1()))
    return TimeDependentCaseC("a", None, (Z1(),))
