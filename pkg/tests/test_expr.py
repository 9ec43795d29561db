import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from stochsym import expr as ex
from stochsym.errors import (EvalDomainError, IndeterminateError, ParseError,
                             UnboundVariableError)

SQ3 = math.sqrt(3.0)


def finite_difference(e, var, point, h=1e-6):
    """Independent central-difference oracle for differentiate()."""
    up = dict(point, **{var: point[var] + h})
    dn = dict(point, **{var: point[var] - h})
    return (ex.evaluate(e, up) - ex.evaluate(e, dn)) / (2 * h)


# ---------------------------------------------------------------------------
# parsing

def test_parse_sum_structure():
    e = ex.parse("1 + 3*x")
    assert e == ex.Add(ex.Const(1.0), ex.Mul(ex.Const(3.0), ex.X))


def test_parse_case_c_drift_shape():
    # h0 + k0 e^{beta x} with beta = -1
    e = ex.parse("2 + 5*exp(-x)")
    assert ex.evaluate(e, {"x": 0.0}) == pytest.approx(7.0)
    ratio = ex.div(ex.differentiate(ex.differentiate(e, "x"), "x"),
                   ex.differentiate(e, "x"))
    assert ex.evaluate(ratio, {"x": 0.7}) == pytest.approx(-1.0)


def test_parse_double_caret_is_error_at_offset_3():
    with pytest.raises(ParseError) as err:
        ex.parse("x^^2")
    assert err.value.position == 3


def test_parse_unknown_identifier():
    with pytest.raises(ParseError):
        ex.parse("2*y + 1")


def test_parse_trailing_garbage():
    with pytest.raises(ParseError):
        ex.parse("1 + 2 x")


def test_parse_non_constant_exponent_rejected():
    with pytest.raises(ParseError):
        ex.parse("x^t")


def test_parse_e_power_desugars_to_exp():
    e = ex.parse("e^(x - w)")
    assert isinstance(e, ex.Exp)


def test_parse_named_constants():
    assert ex.evaluate(ex.parse("pi"), {}) == math.pi
    assert ex.evaluate(ex.parse("2*e"), {}) == pytest.approx(2 * math.e)


def test_precedence():
    assert ex.evaluate(ex.parse("-x^2"), {"x": 3.0}) == -9.0
    assert ex.evaluate(ex.parse("2^-2"), {}) == 0.25
    assert ex.evaluate(ex.parse("1 - 2 - 3"), {}) == -4.0
    assert ex.evaluate(ex.parse("12/2/3"), {}) == 2.0
    assert ex.evaluate(ex.parse("2*x^2"), {"x": 3.0}) == 18.0


# ---------------------------------------------------------------------------
# evaluation

def test_evaluate_square():
    assert ex.evaluate(ex.parse("x^2"), {"x": 3.0}) == 9.0


def test_evaluate_weber_drift_at_special_point():
    # hand evaluation: at x = 1 - sqrt(3) the two terms are both 1
    e = ex.parse("1/(x+sqrt(3)) - (x+sqrt(3))")
    assert ex.evaluate(e, {"x": 1.0 - SQ3}) == pytest.approx(0.0, abs=1e-12)


def test_evaluate_pole_raises():
    e = ex.parse("1/(x+sqrt(3))")
    with pytest.raises(EvalDomainError):
        ex.evaluate(e, {"x": -SQ3})


def test_evaluate_log_domain():
    with pytest.raises(EvalDomainError):
        ex.evaluate(ex.parse("log(x)"), {"x": -1.0})


def test_evaluate_overflow_raises_not_inf():
    with pytest.raises(EvalDomainError):
        ex.evaluate(ex.parse("exp(x)"), {"x": 1e4})


def test_evaluate_unbound():
    with pytest.raises(UnboundVariableError):
        ex.evaluate(ex.parse("x + t"), {"x": 1.0})


# ---------------------------------------------------------------------------
# differentiation

def test_diff_affine():
    assert ex.differentiate(ex.parse("1 + 3*x"), "x") == ex.Const(3.0)


def test_diff_exponential_against_fd():
    e = ex.parse("5*exp(-2*x)")
    d = ex.differentiate(e, "x")
    for xv in (-1.0, 0.0, 0.4):
        want = finite_difference(e, "x", {"x": xv})
        assert ex.evaluate(d, {"x": xv}) == pytest.approx(want, rel=1e-7)


def test_diff_weber_drift_value():
    # frozen from the finite-difference oracle at h = 1e-6: -4/3
    e = ex.parse("1/(x+sqrt(3)) - (x+sqrt(3))")
    d = ex.differentiate(e, "x")
    assert ex.evaluate(d, {"x": 0.0}) == pytest.approx(-4.0 / 3.0, rel=1e-12)
    assert finite_difference(e, "x", {"x": 0.0}) == pytest.approx(-4.0 / 3.0, rel=1e-5)


def test_diff_other_variables_zero():
    e = ex.parse("x^2 + exp(x)")
    assert ex.differentiate(e, "t") == ex.ZERO


# ---------------------------------------------------------------------------
# identity testing

def test_identity_affine_second_derivative():
    f = ex.parse("1 + 3*x")
    f2 = ex.differentiate(ex.differentiate(f, "x"), "x")
    assert ex.is_identically_zero(f2, (-2.0, 2.0))


def _gamma_xx(f):
    fx = ex.differentiate(f, "x")
    gam = ex.mul(ex.const(-0.5), ex.differentiate(ex.add(ex.mul(f, f), fx), "x"))
    return ex.differentiate(ex.differentiate(gam, "x"), "x")


def test_identity_gamma_xx_maximal_drift():
    f = ex.parse("1/(x+sqrt(3)) - (x+sqrt(3))")
    assert ex.is_identically_zero(_gamma_xx(f), (0.0, 3.0))


def test_identity_gamma_xx_exponential_drift_nonzero():
    f = ex.parse("1 + e^x")
    assert not ex.is_identically_zero(_gamma_xx(f), (-1.0, 1.0))


def test_identity_all_singular_is_indeterminate():
    e = ex.log(ex.neg(ex.parse("1 + x^2")))
    with pytest.raises(IndeterminateError):
        ex.is_identically_zero(e, (-1.0, 1.0))


def test_identity_on_box():
    e = ex.parse("t*x - x*t")
    assert ex.is_identically_zero_on_box(e, {"x": (-1, 1), "t": (0, 1)})
    assert not ex.is_identically_zero_on_box(ex.parse("t*x"),
                                             {"x": (-1, 1), "t": (0, 1)})


# ---------------------------------------------------------------------------
# printing and round trips

ROUND_TRIP_CASES = [
    "1 + 3*x",
    "2 + 5*exp(-x)",
    "x^2 - t*w/(1 + x)",
    "-x^2",
    "e^(x - w)",
    "x - (t - w)",
    "x/(t*w)",
    "sqrt(1 + x^2)",
    "log(x) + x^-2",
    "2*-3 + x",
]


@pytest.mark.parametrize("text", ROUND_TRIP_CASES)
def test_parse_print_round_trip(text):
    e1 = ex.parse(text)
    e2 = ex.parse(str(e1))
    assert e1 == e2
    assert str(e2) == str(ex.parse(str(e2)))  # idempotent


# ---------------------------------------------------------------------------
# hypothesis properties

@st.composite
def exprs(draw, max_depth=4):
    if max_depth == 0:
        return draw(st.sampled_from([
            ex.X, ex.T, ex.W, ex.Const(2.0), ex.Const(0.5), ex.Const(-1.5)]))
    kind = draw(st.sampled_from(
        ["leaf", "add", "sub", "mul", "div", "neg", "pow", "exp", "sqrt1p"]))
    if kind == "leaf":
        return draw(exprs(max_depth=0))
    if kind in ("add", "sub", "mul", "div"):
        a = draw(exprs(max_depth=max_depth - 1))
        b = draw(exprs(max_depth=max_depth - 1))
        return {"add": ex.add, "sub": ex.sub, "mul": ex.mul, "div": ex.div}[kind](a, b)
    child = draw(exprs(max_depth=max_depth - 1))
    if kind == "neg":
        return ex.neg(child)
    if kind == "pow":
        return ex.powc(child, draw(st.sampled_from([2.0, 3.0])))
    if kind == "exp":
        return ex.exp(ex.mul(ex.const(0.3), child))
    # sqrt of something positive
    return ex.sqrt(ex.add(ex.ONE, ex.mul(child, child)))


POINTS = st.fixed_dictionaries({
    "x": st.floats(-2, 2), "t": st.floats(0.1, 1), "w": st.floats(-1, 1)})


@settings(max_examples=150, deadline=None)
@given(e=exprs(), point=POINTS, v=st.sampled_from(["x", "t", "w"]))
def test_derivative_matches_finite_differences(e, point, v):
    d = ex.differentiate(e, v)
    try:
        exact = ex.evaluate(d, point)
        approx = finite_difference(e, v, point)
    except EvalDomainError:
        assume(False)
    scale = max(abs(exact), abs(approx))
    assume(math.isfinite(scale) and scale < 1e6)
    # rule out points where the FD stencil itself is ill-conditioned
    try:
        vals = [ex.evaluate(e, dict(point, **{v: point[v] + s * 1e-6}))
                for s in (-1, 0, 1)]
    except EvalDomainError:
        assume(False)
    assume(max(abs(u) for u in vals) < 1e8)
    assert exact == pytest.approx(approx, rel=1e-4, abs=1e-4 * (1 + scale))


@settings(max_examples=100, deadline=None)
@given(e=exprs(), point=POINTS, pair=st.sampled_from(
    [("x", "t"), ("x", "w"), ("t", "w")]))
def test_mixed_partials_commute(e, point, pair):
    a, b = pair
    dab = ex.differentiate(ex.differentiate(e, a), b)
    dba = ex.differentiate(ex.differentiate(e, b), a)
    try:
        va, vb = ex.evaluate(dab, point), ex.evaluate(dba, point)
    except EvalDomainError:
        assume(False)
    assume(max(abs(va), abs(vb)) < 1e8)
    assert va == pytest.approx(vb, rel=1e-9, abs=1e-9 * (1 + abs(va)))


@settings(max_examples=150, deadline=None)
@given(e=exprs())
def test_print_parse_structural_round_trip(e):
    assert ex.parse(str(e)) == e


@settings(max_examples=100, deadline=None)
@given(e=exprs(), point=POINTS)
def test_folding_never_changes_values(e, point):
    text = str(e)
    folded, raw = ex.parse(text, fold=True), ex.parse(text, fold=False)
    try:
        v_raw = ex.evaluate(raw, point)
    except EvalDomainError:
        assume(False)
    v_folded = ex.evaluate(folded, point)
    assert v_folded == pytest.approx(v_raw, rel=1e-14, abs=1e-14 * (1 + abs(v_raw)))


# ---------------------------------------------------------------------------
# vectorized evaluation and numeric nodes

def test_lambdify_matches_evaluate():
    e = ex.parse("x^2*exp(-t) + w/x")
    fn = ex.lambdify(e, ("x", "t", "w"))
    xs = np.array([0.5, 1.0, 2.0])
    got = fn(xs, 0.3, -1.0)
    want = [ex.evaluate(e, {"x": float(x), "t": 0.3, "w": -1.0}) for x in xs]
    np.testing.assert_allclose(got, want, rtol=1e-14)


def test_lambdify_unbound_variable():
    with pytest.raises(UnboundVariableError):
        ex.lambdify(ex.parse("x + t"), ("x",))


def test_antiderivative_node():
    H = ex.antiderivative(ex.parse("t"), "t", name="H")
    assert ex.evaluate(H, {"t": 2.0}) == pytest.approx(2.0, abs=1e-10)
    assert ex.differentiate(H, "t") == ex.T
    # chain rule through exp
    phi = ex.exp(H)
    got = ex.evaluate(ex.differentiate(phi, "t"), {"t": 1.0})
    assert got == pytest.approx(math.exp(0.5), rel=1e-9)


def test_substitute_into_external_constant_only():
    H = ex.antiderivative(ex.parse("t"), "t", name="H")
    bound = ex.substitute(H, "t", 2.0)
    assert isinstance(bound, ex.Const)
    assert bound.value == pytest.approx(2.0, abs=1e-10)


def test_evaluate_with_scale_tracks_subterms():
    e = ex.parse("(1000 + x) - 1000")
    v, scale = ex.evaluate_with_scale(e, {"x": 1.0})
    assert v == pytest.approx(1.0)
    assert scale >= 1000.0
