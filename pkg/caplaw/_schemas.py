"""Validated run configurations, one model per command."""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class PhiSettings(_Section):
    """φ_p, optionally scaled to ψ(x) = a φ_p(b x)."""
    p: float = 2.0
    a: float = Field(default=1.0, gt=0)
    b: float = 1.0

    @field_validator('b')
    @classmethod
    def _nonzero_b(cls, value):
        if value == 0:
            raise ValueError("b must be nonzero")
        return value


class LambdaGridSettings(_Section):
    n: int = Field(default=61, ge=1)
    lo: float = Field(default=1e-3, gt=0)
    hi: float = Field(default=1e2, gt=0)


class RunConfig(_Section):
    command: Literal['conjugate', 'tau', 'tailbound', 'slln', 'verify']
    seed: int = Field(default=0, ge=0)
    output_dir: str = 'caplaw_out'
    format: Literal['json', 'csv', 'both'] = 'json'
    workers: int = Field(default=1, ge=1)
    show_progress: bool = False


class ConjugateRun(RunConfig):
    phi: PhiSettings = PhiSettings()
    y: List[float]
    tol: float = Field(default=1e-9, gt=0)
    x_max: Optional[float] = Field(default=None, gt=0)


class TauRun(RunConfig):
    family: dict
    values: Optional[List[float]] = None
    phi: PhiSettings = PhiSettings()
    m_bar: Optional[float] = None
    m_under: Optional[float] = None
    oracle: Literal['exact', 'mc'] = 'exact'
    n_samples: int = Field(default=100000, ge=2)
    lambda_grid: LambdaGridSettings = LambdaGridSettings()
    a_hi: float = Field(default=4.0, gt=0)
    tol: float = Field(default=1e-6, gt=0)


class EmpiricalSettings(_Section):
    family: dict = {'gaussian': {'means': [0.0], 'sigma': 1.0}}
    n_samples: int = Field(default=10 ** 6, ge=1000)
    m_bar: Optional[float] = None
    m_under: Optional[float] = None


class TailboundRun(RunConfig):
    phi: PhiSettings = PhiSettings()
    a: float
    epsilon: List[float]
    empirical: Optional[EmpiricalSettings] = None


class SllnRun(RunConfig):
    family: dict
    n_steps: int = Field(ge=1)
    n_paths: int = Field(ge=1)
    epsilon: float = Field(gt=0)
    n_min: int = Field(ge=1)
    checkpoints: Optional[List[int]] = None
    p: float = 2.0
    alpha: float = Field(default=0.5, gt=0)
    c: Optional[float] = Field(default=None, gt=0)
    max_draws: Optional[int] = Field(default=None, ge=1)


class IndependenceSettings(_Section):
    coordinates: List[dict]
    functions: List[List[float]]


class VerifyRun(RunConfig):
    family: dict
    X: List[float]
    Y: List[float]
    lam: float = Field(default=2.0, ge=0)
    c: float = 7.0
    sampled_pairs: int = Field(default=20000, ge=1)
    independence: Optional[IndependenceSettings] = None


RUN_MODELS = {
    'conjugate': ConjugateRun,
    'tau': TauRun,
    'tailbound': TailboundRun,
    'slln': SllnRun,
    'verify': VerifyRun,
}
