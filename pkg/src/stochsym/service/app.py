"""FastAPI service exposing the toolkit.

Every endpoint is stateless and pure compute; the CLI drives the same app
in-process, and `stochsym serve` runs it under uvicorn for multi-client
use.  Toolkit errors map to HTTP 400 with a structured body
{"status": "error", "kind": ..., "message": ...}.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from .. import expr as ex
from .. import fokker_planck as fpk
from .. import fp_symmetry as fps
from .. import kozlov as kz
from .. import montecarlo as mc
from .. import symmetry as sym
from .. import weber as wb
from ..errors import StochsymError, ValidationError
from ..ito import ItoEquation, ito_equation, normalize_noise, symmetry_residuals
from . import models as m

app = FastAPI(title="stochsym", version=__version__)


@app.exception_handler(StochsymError)
async def _toolkit_error(_: Request, exc: StochsymError):
    return JSONResponse(status_code=400, content={
        "status": "error", "kind": exc.kind, "message": str(exc)})


@app.exception_handler(RequestValidationError)
async def _request_error(_: Request, exc: RequestValidationError):
    return JSONResponse(status_code=400, content={
        "status": "error", "kind": "validation", "message": str(exc.errors())})


def _equation(model: m.EquationModel) -> ItoEquation:
    return ito_equation(model.drift, model.sigma, tuple(model.domain))


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/classify", response_model=m.ClassifyResponse,
          response_model_exclude_none=True)
def classify(req: m.ClassifyRequest):
    eq = _equation(req.equation)
    cls = sym.classify(eq, tspan=tuple(req.tspan))
    resp = m.ClassifyResponse(
        version=__version__, kind=cls.kind.value, parameters=cls.parameters(),
        h0=cls.h if isinstance(cls.h, float) else None,
        k0=cls.k if isinstance(cls.k, float) else None,
        beta=cls.beta, random=cls.random, note=cls.note,
        generator=str(cls.generator) if cls.generator is not None else None,
        alternate_generators=[str(a) for a in cls.alternates])
    if cls.generator is not None:
        r1, r2 = symmetry_residuals(eq, cls.generator)
        resp.residuals = [r1, r2]
    if (cls.kind == sym.SymmetryKind.TYPE_C and not eq.autonomous
            and not isinstance(cls.h, float)):
        td = sym.td_caseC_fp_constraint(cls.h, cls.k, cls.beta, tspan=tuple(req.tspan))
        resp.fp_constraint = {"case": td.case, "c2": td.c2}
    return resp


@app.post("/normalize", response_model=m.NormalizeResponse)
def normalize(req: m.NormalizeRequest):
    eq = _equation(req.equation)
    new_eq, tr = normalize_noise(eq)
    return m.NormalizeResponse(
        version=__version__,
        equation=m.EquationModel(**new_eq.to_json()),
        transform=str(tr.forward_expr) if tr.forward_expr is not None
        else f"quadrature of 1/sigma from x_ref={tr.x_ref:g}",
        transform_samples=tr.sample_table(req.n_samples))


@app.post("/kozlov", response_model=m.KozlovResponse)
def kozlov(req: m.KozlovRequest):
    eq = _equation(req.equation)
    cls, geq, results = kz.kozlov_solve(
        eq, req.n_paths, req.dt, req.T, req.seed, x0=req.x0)
    terminal = np.array([x[-1] for _, _, x in results])
    times = results[0][0].times if results else np.array([])
    return m.KozlovResponse(
        version=__version__, kind=cls.kind.value, parameters=cls.parameters(),
        transform_kind=geq.transform.kind, F=str(geq.F), S=str(geq.S),
        deterministic=geq.deterministic,
        times=[float(t) for t in times],
        paths=[{"path_id": j, "y": [float(v) for v in y],
                "x": [float(v) for v in x]}
               for j, (_, y, x) in enumerate(results)],
        terminal_mean=float(np.mean(terminal)),
        terminal_var=float(np.var(terminal)) if terminal.size > 1 else 0.0)


@app.post("/simulate", response_model=m.SimulateResponse,
          response_model_exclude_none=True)
def simulate(req: m.SimulateRequest):
    eq = _equation(req.equation)
    init = (("gaussian", *req.init_gaussian) if req.init_gaussian is not None
            else req.x0)
    ens = mc.simulate_ensemble(eq, req.n_paths, req.dt, req.T, req.seed,
                               init=init, store_paths=req.return_paths,
                               workers=req.workers)
    kept = ens.kept_terminal()
    resp = m.SimulateResponse(
        version=__version__, n_paths=req.n_paths,
        exclusion_fraction=ens.exclusion_fraction,
        terminal_mean=float(np.mean(kept)),
        terminal_var=float(np.var(kept, ddof=1)) if kept.size > 1 else 0.0,
        se_mean=float(np.std(kept, ddof=1) / np.sqrt(kept.size))
        if kept.size > 1 else 0.0)
    if req.return_paths:
        resp.times = [float(t) for t in ens.times]
        resp.paths = [[float(v) for v in row] for row in ens.paths]
    return resp


@app.post("/fp/solve", response_model=m.FPSolveResponse)
def fp_solve(req: m.FPSolveRequest):
    eq = _equation(req.equation)
    xmin, xmax, nx = req.grid
    mean, sd = req.init_gaussian
    u0 = fpk.gaussian_density((xmin, xmax), int(nx), mean, sd)
    sol = fpk.solve_fp(fpk.build_fp(eq), u0, req.dt, req.T,
                       snapshot_times=req.snapshot_times)
    return m.FPSolveResponse(
        version=__version__,
        snapshots=[{"t": g.t, "x": [float(v) for v in g.x],
                    "u": [float(v) for v in g.values]} for g in sol],
        mass_drift=sol.mass_drift, min_value=sol.min_value, peclet=sol.peclet,
        final_mean=sol.final.mean(), final_variance=sol.final.variance())


@app.post("/fp/classify", response_model=m.FPClassifyResponse,
          response_model_exclude_none=True)
def fp_classify(req: m.FPClassifyRequest):
    eq = _equation(req.equation)
    fpe = fpk.build_fp(eq)
    cls = fps.classify_fp(fpe)
    fields: list[fps.VectorField] = []
    if cls.case == fps.FPCase.CASE_I:
        fields = fps.case_i_vector_fields(*cls.mu, eq.f, eq.domain)
    elif cls.case == fps.FPCase.CASE_II:
        fields = fps.case_ii_vector_fields(cls.nu0, cls.nu1, cls.zeta,
                                           eq.f, eq.domain)
    residuals = [fps.fp_determining_residual(fpe, X) for X in fields]
    return m.FPClassifyResponse(
        version=__version__, case=cls.case.value,
        nontrivial_count=cls.nontrivial_count, gamma=str(cls.gamma),
        mu=list(cls.mu) if cls.mu is not None else None,
        nu0=cls.nu0, nu1=cls.nu1, b=cls.b, c=cls.c, zeta=cls.zeta,
        fields=[X.describe() for X in fields], residuals=residuals)


@app.post("/fp/verify", response_model=m.FPVerifyResponse)
def fp_verify(req: m.FPVerifyRequest):
    eq = _equation(req.equation)
    X = fps.VectorField(tau=ex.parse(req.field.tau), xi=ex.parse(req.field.xi),
                        phi1=ex.parse(req.field.phi1),
                        phi0=ex.parse(req.field.phi0))
    residual = fps.fp_determining_residual(fpk.build_fp(eq), X)
    return m.FPVerifyResponse(version=__version__, residual=residual,
                              tolerance=req.tolerance,
                              passes=residual < req.tolerance)


@app.post("/weber/gen", response_model=m.WeberGenResponse,
          response_model_exclude_none=True)
def weber_gen(req: m.WeberGenRequest):
    mu0, mu1, mu2 = req.mu
    f = wb.generate_max_symmetry_drift(mu0, mu1, mu2, tuple(req.domain),
                                       branch=req.branch, f0=req.f0)
    lam = z_slope = z_offset = None
    if mu2 > 0:
        wp = wb.riccati_to_weber(mu0, mu1, mu2)
        lam, z_slope, z_offset = wp.lam, wp.z_slope, wp.z_offset
    xs = np.linspace(req.domain[0], req.domain[1], req.n_samples)
    f_fn = ex.lambdify(f, ("x",))
    samples = [(float(x), float(f_fn(x))) for x in xs]
    return m.WeberGenResponse(
        version=__version__, branch=req.branch, lam=lam, z_slope=z_slope,
        z_offset=z_offset, drift=str(f), samples=samples,
        gamma_xx_residual=wb.gamma_xx_residual(f, tuple(req.domain)))


@app.post("/crossval", response_model=m.CrossvalResponse)
def crossval(req: m.CrossvalRequest):
    eq = _equation(req.equation)
    report = mc.crossval(eq, req.n_paths, req.dt, req.T, req.seed,
                         grid=tuple(req.grid) if req.grid else None,
                         init=tuple(req.init_gaussian), workers=req.workers)
    return m.CrossvalResponse(version=__version__, **report)
