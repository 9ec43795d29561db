"""Request and response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class EquationModel(BaseModel):
    """Wire form of an Ito equation; mirrors the equation file schema."""

    drift: str
    sigma: str = "1"
    domain: tuple[float, float]


class ClassifyRequest(BaseModel):
    equation: EquationModel
    tspan: tuple[float, float] = (0.0, 1.0)


class ClassifyResponse(BaseModel):
    status: str = "ok"
    version: str
    kind: str
    parameters: dict
    h0: float | None = None
    k0: float | None = None
    beta: float | None = None
    generator: str | None = None
    alternate_generators: list[str] = Field(default_factory=list)
    random: bool = False
    residuals: list[float] | None = None
    note: str | None = None
    fp_constraint: dict | None = None


class NormalizeRequest(BaseModel):
    equation: EquationModel
    n_samples: int = 33


class NormalizeResponse(BaseModel):
    status: str = "ok"
    version: str
    equation: EquationModel
    transform: str
    transform_samples: list[tuple[float, float]]


class KozlovRequest(BaseModel):
    equation: EquationModel
    seed: int = 0
    dt: float = 1e-3
    T: float = 1.0
    n_paths: int = 1
    x0: float | None = None


class KozlovResponse(BaseModel):
    status: str = "ok"
    version: str
    kind: str
    parameters: dict
    transform_kind: str
    F: str
    S: str
    deterministic: bool
    times: list[float]
    paths: list[dict]
    terminal_mean: float
    terminal_var: float


class SimulateRequest(BaseModel):
    equation: EquationModel
    n_paths: int = 1000
    dt: float = 1e-3
    T: float = 1.0
    seed: int = 0
    x0: float = 0.0
    init_gaussian: tuple[float, float] | None = None
    return_paths: bool = False
    workers: int = 1


class SimulateResponse(BaseModel):
    status: str = "ok"
    version: str
    n_paths: int
    exclusion_fraction: float
    terminal_mean: float
    terminal_var: float
    se_mean: float
    times: list[float] | None = None
    paths: list[list[float]] | None = None


class FPSolveRequest(BaseModel):
    equation: EquationModel
    grid: tuple[float, float, int]
    dt: float = 1e-3
    T: float = 1.0
    init_gaussian: tuple[float, float] = (0.0, 0.5)
    snapshot_times: list[float] | None = None


class FPSolveResponse(BaseModel):
    status: str = "ok"
    version: str
    snapshots: list[dict]
    mass_drift: float
    min_value: float
    peclet: float
    final_mean: float
    final_variance: float


class FPClassifyRequest(BaseModel):
    equation: EquationModel


class FPClassifyResponse(BaseModel):
    status: str = "ok"
    version: str
    case: str
    nontrivial_count: int
    gamma: str
    mu: list[float] | None = None
    nu0: float | None = None
    nu1: float | None = None
    b: float | None = None
    c: float | None = None
    zeta: float | None = None
    fields: list[str] = Field(default_factory=list)
    residuals: list[float] = Field(default_factory=list)


class VectorFieldModel(BaseModel):
    tau: str = "0"
    xi: str = "0"
    phi1: str = "0"
    phi0: str = "0"


class FPVerifyRequest(BaseModel):
    equation: EquationModel
    field: VectorFieldModel
    tolerance: float = 1e-8


class FPVerifyResponse(BaseModel):
    status: str = "ok"
    version: str
    residual: float
    tolerance: float
    passes: bool


class WeberGenRequest(BaseModel):
    mu: tuple[float, float, float]
    domain: tuple[float, float]
    branch: str = "auto"
    f0: float = 0.0
    n_samples: int = 65


class WeberGenResponse(BaseModel):
    status: str = "ok"
    version: str
    branch: str
    lam: float | None = None
    z_slope: float | None = None
    z_offset: float | None = None
    drift: str
    samples: list[tuple[float, float]]
    gamma_xx_residual: float


class CrossvalRequest(BaseModel):
    equation: EquationModel
    n_paths: int = 20000
    dt: float = 1e-3
    T: float = 1.0
    seed: int = 0
    grid: tuple[float, float, int] | None = None
    init_gaussian: tuple[float, float] = (0.0, 0.5)
    workers: int = 1


class CrossvalResponse(BaseModel):
    status: str = "ok"
    version: str
    l1_distance: float
    exclusion_fraction: float
    n_paths: int
    moments: dict
    fp_mass_drift: float
