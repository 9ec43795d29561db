"""Euler-Maruyama ensembles, exact samplers for the integrable drift
families, empirical densities, and cross-validation against the
Fokker-Planck solver.

Reproducibility contract: paths are partitioned into fixed-size blocks;
block j draws from the substream SeedSequence(master_seed, spawn_key=(j,)),
so the results are bit-exact for a given (seed, N, dt, T) no matter how
many workers process the blocks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import ValidationError
from .expr import Expr
from .fokker_planck import FPEquation, FPSolution, build_fp, gaussian_density, solve_fp
from .ito import ItoEquation
from .symmetry import SymmetryClass, SymmetryKind

BLOCK_SIZE = 4096

#: ensembles losing more than this fraction of paths abort
MAX_EXCLUSION = 0.10

#: hard cap on stored path values (n_paths * n_steps)
PATH_STORAGE_CAP = 20_000_000

InitialState = float | tuple  # x0 or ("gaussian", mean, sd)


@dataclass(frozen=True)
class PathEnsemble:
    times: np.ndarray
    terminal: np.ndarray
    excluded: np.ndarray
    seed: int
    paths: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.terminal.size

    @property
    def exclusion_fraction(self) -> float:
        return float(np.mean(self.excluded))

    def kept_terminal(self) -> np.ndarray:
        return self.terminal[~self.excluded]


def _initial_values(init: InitialState, n: int, rng) -> np.ndarray:
    if isinstance(init, tuple):
        kind, *params = init
        if kind != "gaussian" or len(params) != 2:
            raise ValidationError(f"unsupported initial state {init!r}")
        mean, sd = params
        return mean + sd * rng.standard_normal(n)
    return np.full(n, float(init))


def simulate_ensemble(eq: ItoEquation, n_paths: int, dt: float, T: float,
                      seed: int, init: InitialState = 0.0,
                      store_paths: bool = False, workers: int = 1) -> PathEnsemble:
    """Euler-Maruyama ensemble x_{i+1} = x_i + f dt + sigma dW.

    Paths that leave the equation's domain (or go non-finite) are frozen at
    their last in-domain value and excluded from density estimates; an
    exclusion fraction above 10% is an error (the domain is too small for
    the requested horizon).
    """
    if n_paths < 1:
        raise ValidationError("n_paths must be >= 1")
    if dt <= 0 or T <= 0:
        raise ValidationError("dt and T must be positive")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValidationError("T must be an integer multiple of dt")
    if store_paths and n_paths * (n_steps + 1) > PATH_STORAGE_CAP:
        raise ValidationError(
            f"path storage for {n_paths} x {n_steps + 1} values exceeds the cap; "
            "reduce N or T/dt, or drop --out")

    f_fn = ex.lambdify(eq.f, ("x", "t"))
    s_fn = ex.lambdify(eq.sigma, ("x", "t"))
    a, b = eq.domain
    times = np.linspace(0.0, T, n_steps + 1)
    sqdt = np.sqrt(dt)

    def run_block(j: int, size: int):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=int(seed), spawn_key=(int(j),)))
        x = _initial_values(init, size, rng)
        alive = (x >= a) & (x <= b) & np.isfinite(x)
        x = np.where(alive, x, np.clip(x, a, b))
        block_paths = np.empty((size, n_steps + 1)) if store_paths else None
        if store_paths:
            block_paths[:, 0] = x
        for i in range(n_steps):
            dw = rng.standard_normal(size) * sqdt
            with np.errstate(all="ignore"):
                xn = x + f_fn(x, times[i]) * dt + s_fn(x, times[i]) * dw
            ok = np.isfinite(xn) & (xn >= a) & (xn <= b)
            alive &= ok
            x = np.where(alive, xn, x)
            if store_paths:
                block_paths[:, i + 1] = x
        return x, alive, block_paths

    sizes = [BLOCK_SIZE] * (n_paths // BLOCK_SIZE)
    if n_paths % BLOCK_SIZE:
        sizes.append(n_paths % BLOCK_SIZE)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, range(len(sizes)), sizes))
    else:
        results = [run_block(j, size) for j, size in enumerate(sizes)]

    terminal = np.concatenate([r[0] for r in results])
    alive = np.concatenate([r[1] for r in results])
    paths = np.vstack([r[2] for r in results]) if store_paths else None
    ens = PathEnsemble(times, terminal, ~alive, int(seed), paths)
    if ens.exclusion_fraction > MAX_EXCLUSION:
        raise ValidationError(
            f"{100 * ens.exclusion_fraction:.1f}% of paths left the domain "
            f"{eq.domain}; enlarge the domain or shorten the horizon")
    return ens


def exact_sampler(cls: SymmetryClass, eq: ItoEquation, n_paths: int, dt: float,
                  T: float, seed: int, init: InitialState = 0.0) -> PathEnsemble:
    """Exact terminal samples for the drift families that rectify to proper
    Ito equations: constant drift (x(T) = x0 + h0 T + w(T)) and affine drift
    (Ornstein-Uhlenbeck-type exact transition through y = exp(-k0 t) x).
    """
    if cls.kind not in (SymmetryKind.TYPE_A, SymmetryKind.TYPE_B):
        raise ValidationError(
            f"exact sampling applies to types A and B only, not {cls.kind.value}; "
            "use `stochsym kozlov` for the pathwise route")
    if not isinstance(cls.h, (int, float)) or (
            cls.k is not None and not isinstance(cls.k, (int, float))):
        raise ValidationError("exact sampling applies to autonomous equations only")
    h0 = float(cls.h)
    k0 = float(cls.k) if cls.kind == SymmetryKind.TYPE_B else 0.0
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(0,)))
    x0 = _initial_values(init, n_paths, rng)
    if abs(k0) < 1e-14:
        mean = x0 + h0 * T
        var = T
    else:
        g = np.expm1(k0 * T)  # e^{k0 T} - 1, stable for small k0 T
        mean = x0 * (1.0 + g) + h0 * g / k0
        var = np.expm1(2.0 * k0 * T) / (2.0 * k0)
    terminal = mean + np.sqrt(var) * rng.standard_normal(n_paths)
    times = np.array([0.0, T])
    return PathEnsemble(times, terminal, np.zeros(n_paths, dtype=bool), int(seed))


def euler_maruyama_on_path(eq: ItoEquation, times: np.ndarray,
                           increments: np.ndarray, x0: float) -> np.ndarray:
    """Single-path Euler-Maruyama on given Wiener increments (for strong
    convergence comparisons against the Kozlov route)."""
    f_fn = ex.lambdify(eq.f, ("x", "t"))
    s_fn = ex.lambdify(eq.sigma, ("x", "t"))
    dt = float(times[1] - times[0])
    x = np.empty(times.size)
    x[0] = x0
    for i in range(increments.size):
        x[i + 1] = (x[i] + float(f_fn(x[i], times[i])) * dt
                    + float(s_fn(x[i], times[i])) * increments[i])
    return x


# ---------------------------------------------------------------------------
# densities and cross-validation

def histogram_density(ens: PathEnsemble, grid_x: np.ndarray) -> np.ndarray:
    """Histogram of kept terminal values with one bin per grid cell,
    normalized by the *total* path count so the density integrates to
    1 - exclusion_fraction exactly."""
    dx = float(grid_x[1] - grid_x[0])
    edges = np.concatenate([[grid_x[0] - 0.5 * dx], grid_x + 0.5 * dx])
    counts, _ = np.histogram(ens.kept_terminal(), bins=edges)
    return counts / (ens.n_paths * dx)


def crossval(eq: ItoEquation, n_paths: int, dt: float, T: float, seed: int,
             grid: tuple[float, float, int] | None = None,
             init: tuple[float, float] = (0.0, 0.5),
             workers: int = 1) -> dict:
    """Compare the Euler-Maruyama terminal density against the
    Fokker-Planck solve started from the same Gaussian initial condition.

    Returns the L1 distance on the shared grid plus first/second moment
    comparisons with Monte-Carlo standard errors.
    """
    xmin, xmax, nx = grid if grid is not None else (*eq.domain, 201)
    mean0, sd0 = init
    u0 = gaussian_density((xmin, xmax), int(nx), mean0, sd0)
    fp_sol: FPSolution = solve_fp(build_fp(eq), u0, dt, T)
    ens = simulate_ensemble(eq, n_paths, dt, T, seed,
                            init=("gaussian", mean0, sd0), workers=workers)

    u = fp_sol.final.values
    x = fp_sol.final.x
    hist = histogram_density(ens, x)
    dx = float(x[1] - x[0])
    l1 = float(np.sum(np.abs(hist - u)) * dx)

    kept = ens.kept_terminal()
    n_kept = kept.size
    emp_mean = float(np.mean(kept))
    emp_var = float(np.var(kept, ddof=1))
    se_mean = float(np.std(kept, ddof=1) / np.sqrt(n_kept))
    se_var = float(emp_var * np.sqrt(2.0 / (n_kept - 1)))
    fp_mean = fp_sol.final.mean()
    fp_var = fp_sol.final.variance()

    return {
        "l1_distance": l1,
        "exclusion_fraction": ens.exclusion_fraction,
        "n_paths": n_paths,
        "moments": {
            "empirical_mean": emp_mean,
            "empirical_var": emp_var,
            "fp_mean": fp_mean,
            "fp_var": fp_var,
            "se_mean": se_mean,
            "se_var": se_var,
            "mean_discrepancy_in_se": abs(emp_mean - fp_mean) / se_mean,
            "var_discrepancy_in_se": abs(emp_var - fp_var) / se_var,
        },
        "fp_mass_drift": fp_sol.mass_drift,
    }
