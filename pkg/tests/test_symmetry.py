import math

import numpy as np
import pytest

from stochsym import expr as ex
from stochsym import ito
from stochsym import symmetry as sym
from stochsym.errors import ValidationError
from stochsym.symmetry import SymmetryKind


def brute_force_family_scan(eq, h_range, k_range, beta_range):
    """Independent oracle for NoSymmetry verdicts: scan the three parametric
    generator families and report the smallest determining residual found."""
    grid = ito.residual_grid(eq.domain, n=7)
    best = math.inf
    for h0 in h_range:
        # family A representative P == 1 has residual |f_x| independent of h0;
        # P == identity:
        phi = ex.parse(f"x - w - {h0}*t")
        best = min(best, max(ito.symmetry_residuals(eq, phi, grid)))
        best = min(best, max(ito.symmetry_residuals(eq, ex.ONE, grid)))
        for k0 in k_range:
            phi_b = ex.parse(f"e^({k0}*t)")
            best = min(best, max(ito.symmetry_residuals(eq, phi_b, grid)))
            for beta in beta_range:
                phi_c = ex.parse(f"e^({beta}*(x - w - {h0}*t))")
                best = min(best, max(ito.symmetry_residuals(eq, phi_c, grid)))
    return best


# ---------------------------------------------------------------------------
# autonomous classification

def test_constant_drift_is_type_a():
    eq = ito.ito_equation("2", "1", (-5, 5))
    cls = sym.classify(eq)
    assert cls.kind == SymmetryKind.TYPE_A
    assert cls.h == pytest.approx(2.0)
    assert cls.generator == ex.ONE
    assert not cls.random
    # random representative P = identity: x - w - 2t
    alt = cls.alternates[0]
    assert ex.evaluate(alt, {"x": 1.0, "w": 0.25, "t": 0.5}) == pytest.approx(-0.25)
    assert ito.is_symmetry(eq, alt)
    assert cls.note is not None  # degeneration of B/C noted


def test_affine_drift_is_type_b():
    eq = ito.ito_equation("1 + 3*x", "1", (-5, 5))
    cls = sym.classify(eq)
    assert cls.kind == SymmetryKind.TYPE_B
    assert (cls.h, cls.k) == (pytest.approx(1.0), pytest.approx(3.0))
    assert str(cls.generator) == "exp(3*t)"
    assert not cls.random
    assert ito.is_symmetry(eq, cls.generator)


def test_type_b_offdomain_intercept():
    # h0 = f(0) even when 0 is outside the domain
    eq = ito.ito_equation("1 + 3*x", "1", (2, 9))
    cls = sym.classify(eq)
    assert cls.h == pytest.approx(1.0)
    assert cls.k == pytest.approx(3.0)


def test_exponential_drift_is_type_c():
    eq = ito.ito_equation("2 + 5*exp(-x)", "1", (-3, 3))
    cls = sym.classify(eq)
    assert cls.kind == SymmetryKind.TYPE_C
    assert cls.h == pytest.approx(2.0, abs=1e-9)
    assert cls.k == pytest.approx(5.0, rel=1e-9)
    assert cls.beta == pytest.approx(-1.0, rel=1e-9)
    assert cls.random
    got = ex.evaluate(cls.generator, {"x": 0.4, "w": 0.1, "t": 0.2})
    assert got == pytest.approx(math.exp(-(0.4 - 0.1 - 2 * 0.2)))
    assert ito.is_symmetry(eq, cls.generator)


def test_quadratic_drift_has_no_symmetry():
    eq = ito.ito_equation("x^2", "1", (-2, 2))
    assert sym.classify(eq).kind == SymmetryKind.NO_SYMMETRY
    # brute-force residual minimization over the three parametric families
    best = brute_force_family_scan(
        eq, h_range=np.linspace(-2, 2, 5), k_range=np.linspace(-2, 2, 5),
        beta_range=np.linspace(-2, 2, 5))
    assert best > 1e-2


def test_weber_counterexample_drift_has_no_symmetry():
    eq = ito.ito_equation("1/(x+sqrt(3)) - (x+sqrt(3))", "1", (-1, 3))
    assert sym.classify(eq).kind == SymmetryKind.NO_SYMMETRY


def test_classification_round_trips_through_printing():
    for drift, dom in [("2", (-5, 5)), ("1 + 3*x", (-5, 5)),
                       ("2 + 5*exp(-x)", (-3, 3)), ("x^2", (-2, 2))]:
        eq = ito.ito_equation(drift, "1", dom)
        cls1 = sym.classify(eq)
        eq2 = ito.ito_equation(str(eq.f), "1", dom)
        cls2 = sym.classify(eq2)
        assert cls1.kind == cls2.kind
        assert cls1.parameters() == cls2.parameters()


def test_small_beta_degenerates_to_affine_level():
    # the exponential family at vanishing beta folds back into A/B: the
    # classifier must not report TypeC for drifts that are numerically affine
    cls6 = sym.classify(ito.ito_equation("2 + 5*exp(0.000001*x)", "1", (-3, 3)))
    assert cls6.kind == SymmetryKind.TYPE_B
    cls12 = sym.classify(ito.ito_equation("2 + 5*exp(0.000000000001*x)", "1", (-3, 3)))
    assert cls12.kind in (SymmetryKind.TYPE_A, SymmetryKind.TYPE_B)


def test_classify_requires_unit_noise():
    eq = ito.ito_equation("-x", "2", (-8, 8))
    with pytest.raises(ValidationError):
        sym.classify(eq)


# ---------------------------------------------------------------------------
# time-dependent classification

def test_td_type_a():
    eq = ito.ito_equation("t", "1", (-5, 5))
    cls = sym.classify(eq)
    assert cls.kind == SymmetryKind.TYPE_A
    # H(t) = t^2/2; the random representative is x - w - H(t)
    alt = cls.alternates[0]
    got = ex.evaluate(alt, {"x": 1.0, "w": 0.0, "t": 2.0})
    assert got == pytest.approx(1.0 - 2.0, abs=1e-9)
    assert ito.is_symmetry(eq, alt)


def test_td_type_b():
    eq = ito.ito_equation("t*x", "1", (-5, 5))
    cls = sym.classify(eq)
    assert cls.kind == SymmetryKind.TYPE_B
    got = ex.evaluate(cls.generator, {"x": 0.0, "w": 0.0, "t": 1.0})
    assert got == pytest.approx(math.exp(0.5), rel=1e-9)
    assert ito.is_symmetry(eq, cls.generator)


def test_td_type_c():
    # f = e^t + e^t e^x: beta = 1, H(t) = e^t - 1
    eq = ito.ito_equation("e^t + e^t*e^x", "1", (-3, 3))
    cls = sym.classify(eq)
    assert cls.kind == SymmetryKind.TYPE_C
    assert cls.beta == pytest.approx(1.0, rel=1e-9)
    want = math.exp(0.3 - 0.1 - (math.exp(0.5) - 1.0))
    got = ex.evaluate(cls.generator, {"x": 0.3, "w": 0.1, "t": 0.5})
    assert got == pytest.approx(want, rel=1e-8)
    assert ito.is_symmetry(eq, cls.generator)


def test_td_no_symmetry():
    eq = ito.ito_equation("t*x^2", "1", (-2, 2))
    assert sym.classify(eq).kind == SymmetryKind.NO_SYMMETRY


# ---------------------------------------------------------------------------
# time-dependent case C: Fokker-Planck compatibility constraint

def test_td_constraint_satisfied():
    # k = e^t, beta = 1, h = 2: h + k'/(beta k) = 3 constant
    res = sym.td_caseC_fp_constraint(ex.parse("2"), ex.parse("e^t"), 1.0)
    assert res.case == "b"
    assert res.c2 == pytest.approx(3.0)
    x1 = res.fields[0]
    assert ex.evaluate(x1.tau, {"t": 0.3}) == 1.0
    assert ex.evaluate(x1.xi, {"x": 0.0, "t": 0.3}) == pytest.approx(-1.0)


def test_td_constraint_constant_k():
    # k' = 0 makes h + 0 trivially constant
    res = sym.td_caseC_fp_constraint(ex.parse("5"), ex.parse("1"), 2.0)
    assert res.case == "b"
    assert res.c2 == pytest.approx(5.0)


def test_td_constraint_violated():
    res = sym.td_caseC_fp_constraint(ex.T, ex.parse("e^t"), 1.0)
    assert res.case == "a"
    assert res.c2 is None
    assert [f.name for f in res.fields] == ["Z1"]


def test_td_constraint_vanishing_k_rejected():
    with pytest.raises(ValidationError):
        sym.td_caseC_fp_constraint(ex.parse("1"), ex.parse("t - 0.5"), 1.0)
