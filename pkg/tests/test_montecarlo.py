import math

import numpy as np
import pytest

from stochsym import expr as ex
from stochsym import ito
from stochsym import montecarlo as mc
from stochsym import symmetry as sym
from stochsym.errors import ValidationError


def test_brownian_terminal_moments():
    eq = ito.ito_equation("0", "1", (-25, 25))
    n = 50_000
    ens = mc.simulate_ensemble(eq, n, 0.01, 1.0, seed=11)
    assert ens.exclusion_fraction == 0.0
    assert np.mean(ens.terminal) == pytest.approx(0.0, abs=3 / math.sqrt(n))
    assert np.var(ens.terminal) == pytest.approx(1.0, abs=3 * math.sqrt(2 / n))


def test_ou_stationary_variance():
    # stationary variance 1/2 for unit noise, from the stationary FP solve
    eq = ito.ito_equation("-x", "1", (-8, 8))
    ens = mc.simulate_ensemble(eq, 50_000, 0.01, 10.0, seed=5)
    assert np.var(ens.kept_terminal()) == pytest.approx(0.5, rel=0.02)


def test_reproducible_across_workers():
    eq = ito.ito_equation("0", "1", (-25, 25))
    # more paths than one block so the block partition matters
    n = mc.BLOCK_SIZE + 123
    e1 = mc.simulate_ensemble(eq, n, 0.01, 0.5, seed=3, workers=1)
    e4 = mc.simulate_ensemble(eq, n, 0.01, 0.5, seed=3, workers=4)
    np.testing.assert_array_equal(e1.terminal, e4.terminal)
    np.testing.assert_array_equal(e1.excluded, e4.excluded)


def test_stored_paths_shape_and_cap():
    eq = ito.ito_equation("0", "1", (-25, 25))
    ens = mc.simulate_ensemble(eq, 10, 0.1, 1.0, seed=1, store_paths=True)
    assert ens.paths.shape == (10, 11)
    np.testing.assert_array_equal(ens.paths[:, -1], ens.terminal)
    with pytest.raises(ValidationError):
        mc.simulate_ensemble(eq, 10_000_000, 0.1, 1.0, seed=1, store_paths=True)


def test_exclusion_error_when_domain_too_small():
    eq = ito.ito_equation("0", "1", (-0.5, 0.5))
    with pytest.raises(ValidationError):
        mc.simulate_ensemble(eq, 2000, 0.01, 1.0, seed=2)


def test_excluded_paths_frozen_inside_domain():
    eq = ito.ito_equation("0", "1", (-1.5, 1.5))
    ens = mc.simulate_ensemble(eq, 4000, 0.01, 0.3, seed=8)
    assert 0 < ens.exclusion_fraction <= 0.10
    assert np.all(np.abs(ens.terminal) <= 1.5)


# ---------------------------------------------------------------------------
# exact samplers

def test_exact_sampler_constant_drift():
    eq = ito.ito_equation("2", "1", (-30, 30))
    cls = sym.classify(eq)
    n = 100_000
    ens = mc.exact_sampler(cls, eq, n, 0.01, 1.0, seed=7, init=0.0)
    assert np.mean(ens.terminal) == pytest.approx(2.0, abs=3 / math.sqrt(n))
    assert np.var(ens.terminal) == pytest.approx(1.0, rel=0.05)


def test_exact_sampler_ou_transition():
    # hand Ito isometry: x(T) ~ N(x0 e^{-T}, (1 - e^{-2T})/2)
    eq = ito.ito_equation("-x", "1", (-8, 8))
    cls = sym.classify(eq)
    n = 100_000
    ens = mc.exact_sampler(cls, eq, n, 0.01, 1.0, seed=9, init=1.0)
    want_mean, want_var = math.exp(-1.0), (1 - math.exp(-2.0)) / 2
    assert np.mean(ens.terminal) == pytest.approx(
        want_mean, abs=3 * math.sqrt(want_var / n))
    assert np.var(ens.terminal) == pytest.approx(want_var, rel=0.05)


def test_exact_sampler_weak_error_vs_euler_maruyama():
    # the EM mean converges to the exact-sampler mean at order ~1 in dt
    eq = ito.ito_equation("-x", "1", (-10, 10))
    cls = sym.classify(eq)
    n = 400_000
    exact_mean = math.exp(-1.0)  # x0 = 1
    errors = []
    for dt in (0.1, 0.05, 0.025):
        ens = mc.simulate_ensemble(eq, n, dt, 1.0, seed=31, init=1.0)
        errors.append(abs(np.mean(ens.terminal) - exact_mean))
    order = np.polyfit(np.log([0.1, 0.05, 0.025]), np.log(errors), 1)[0]
    assert order > 0.8


def test_strong_convergence_additive_noise():
    # EM vs the rectified exact solution on shared increments; additive
    # noise is strong order 1.0, assert the observed order stays >= 0.9
    from stochsym import kozlov as kz

    eq = ito.ito_equation("-x", "1", (-8, 8))
    cls = sym.classify(eq)
    tr = kz.kozlov_map(cls.generator, eq.domain)
    geq = kz.transform_equation(eq, tr)
    # reference on a grid 32x finer than the finest tested level, so its
    # own discretization error does not flatten the observed order
    factors, n_paths = (128, 64, 32), 40
    errs = np.zeros(len(factors))
    for j in range(n_paths):
        fine = kz.wiener_substream(13, j, 1.0 / 8192, 1.0)
        y_fine = kz.integrate_path(geq, fine, tr.value(1.0, 0.0, 0.0))
        x_ref = kz.map_back(geq, y_fine, fine)[-1]
        for i, factor in enumerate(factors):
            p = fine.coarsen(factor)
            xe = mc.euler_maruyama_on_path(eq, p.times, p.increments(), 1.0)
            errs[i] += abs(xe[-1] - x_ref)
    errs /= n_paths
    dts = [f / 8192 for f in factors]
    order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert order >= 0.9


def test_exact_sampler_rejects_type_c():
    eqc = ito.ito_equation("exp(-x)", "1", (-5, 8))
    cls = sym.classify(eqc)
    with pytest.raises(ValidationError, match="kozlov"):
        mc.exact_sampler(cls, eqc, 10, 0.01, 1.0, seed=1)


# ---------------------------------------------------------------------------
# densities and cross-validation

def test_histogram_integrates_to_kept_fraction():
    eq = ito.ito_equation("0", "1", (-1.5, 1.5))
    ens = mc.simulate_ensemble(eq, 4000, 0.01, 0.3, seed=8)
    x = np.linspace(-1.5, 1.5, 61)
    hist = mc.histogram_density(ens, x)
    dx = x[1] - x[0]
    assert np.sum(hist) * dx == pytest.approx(1.0 - ens.exclusion_fraction,
                                              abs=1e-12)


def test_crossval_ou():
    eq = ito.ito_equation("-x", "1", (-8, 8))
    rep = mc.crossval(eq, 100_000, 1e-3, 1.0, seed=123, grid=(-8, 8, 161),
                      init=(0.0, 0.5))
    assert rep["l1_distance"] < 0.02
    assert rep["exclusion_fraction"] == 0.0
    assert rep["moments"]["mean_discrepancy_in_se"] < 4.0


def test_crossval_heat_moments_within_3se():
    eq = ito.ito_equation("0", "1", (-25, 25))
    rep = mc.crossval(eq, 100_000, 2e-3, 1.0, seed=17, grid=(-25, 25, 251),
                      init=(0.0, 0.5))
    assert rep["moments"]["var_discrepancy_in_se"] < 3.0
    assert rep["moments"]["mean_discrepancy_in_se"] < 3.0
