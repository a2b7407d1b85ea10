"""
Two-sided φ-sub-Gaussian certificates, the optimal parameter τ_φ and the
capacity tail bound 2 exp(-φ*(ε/a)).

A variable ξ is φ-sub-Gaussian with parameters (a, m̄, m̲) when

    log Ê exp(λ(ξ - m̄)) <= φ(aλ)   for λ > 0,
    log Ê exp(λ(ξ - m̲)) <= φ(aλ)   for λ < 0.

All comparisons are made in the log domain. The variable enters only
through its log upper exponential moment, supplied by a :class:`LogMgfOracle`.
"""

from functools import lru_cache
import logging
import math
from typing import List, NamedTuple, Optional
import warnings

import numpy as np
from pydantic import BaseModel, field_validator
from scipy.special import logsumexp

from ._errors import BracketError, DegenerateInfimumWarning, DomainError
from ._expectation import (DiscreteModelFamily, GaussianMeanFamily, _values,
                           gaussian_family_log_upper_exp_moment, mc_upper_expectation)
from ._nfunc import ConjugateQuery, NFunctionSpec, analytic_conjugate, numeric_conjugate
from ._utility import check_finite, check_positive, spawn_generator

logger = logging.getLogger(__name__)

DEFAULT_A_HI = 4.0
DEFAULT_TAU_TOL = 1e-6
EXACT_RELATIVE_SLACK = 1e-12
MC_SLACK_STD_ERRORS = 3.0


class SubGaussianParams(BaseModel):
    a: float
    m_bar: float
    m_under: float

    @field_validator('a')
    @classmethod
    def _positive_a(cls, value):
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"a must be a finite positive number, got {value}")
        return value

    @classmethod
    def from_family(cls, fam: GaussianMeanFamily, a):
        """Centering constants (m̄, m̲) = (max M, min M) of a Gaussian mean family."""
        params = cls(a=a, m_bar=fam.m_bar, m_under=fam.m_under)
        assert params.m_under <= params.m_bar
        return params


def default_lambda_grid(n=61, lo=1e-3, hi=1e2):
    """``n`` log-spaced magnitudes in [lo, hi], with both signs."""
    check_positive('lo', lo)
    check_positive('hi', hi)
    if n < 1 or lo > hi:
        raise DomainError(f"invalid lambda grid: n={n}, lo={lo}, hi={hi}")
    magnitudes = np.logspace(math.log10(lo), math.log10(hi), int(n))
    return np.concatenate([-magnitudes[::-1], magnitudes])


class LogMgfOracle:
    """
    Evaluable map (λ, shift) -> log Ê exp(λ(ξ - shift)).

    ``provenance`` is one of 'exact-gaussian', 'discrete-exact',
    'mc-estimated' or 'constant'. Estimated oracles also expose a standard
    error of the log moment through :meth:`standard_error`.
    """

    def __init__(self, func, provenance, std_error=None, lambda_max=math.inf, description=''):
        self._func = func
        self._std_error = std_error
        self.provenance = provenance
        self.lambda_max = float(lambda_max)
        self.description = description

    @property
    def is_statistical(self):
        return self._std_error is not None

    def _check_lambda(self, lam):
        check_finite('lambda', lam)
        if abs(lam) > self.lambda_max:
            raise DomainError(f"|lambda|={abs(lam):g} outside the oracle domain [-{self.lambda_max:g}, {self.lambda_max:g}]")

    def __call__(self, lam, shift=0.0):
        self._check_lambda(lam)
        if lam == 0:
            return 0.0
        return float(self._func(float(lam), float(shift)))

    def standard_error(self, lam, shift=0.0):
        if self._std_error is None or lam == 0:
            return 0.0
        self._check_lambda(lam)
        return float(self._std_error(float(lam), float(shift)))

    def __repr__(self):
        return f'LogMgfOracle({self.provenance}: {self.description})'

    @classmethod
    def exact_gaussian(cls, fam: GaussianMeanFamily):
        return cls(lambda lam, shift: gaussian_family_log_upper_exp_moment(fam, lam, shift),
                   'exact-gaussian', description=repr(fam))

    @classmethod
    def running_mean_gaussian(cls, fam: GaussianMeanFamily, n):
        """
        Exact oracle of the running mean Zₙ = Sₙ/n under the product family
        {P_m ⊗ ... ⊗ P_m : m in M}.

        log Ê exp(λ(Zₙ - s)) = max over m of n log E_m exp((λ/n)(ξ - s)).
        """
        if int(n) != n or n < 1:
            raise DomainError(f"n must be a positive integer, got {n}")
        n = int(n)
        return cls(lambda lam, shift: n * gaussian_family_log_upper_exp_moment(fam, lam / n, shift),
                   'exact-gaussian', description=f'running mean of {n} draws from {fam!r}')

    @classmethod
    def discrete_exact(cls, fam: DiscreteModelFamily, X):
        """log Ê exp(λ(X - s)) = max over Q of log Σ Q(ω) exp(λ(X(ω) - s))."""
        values = _values(fam, X)
        support = fam.measures > 0

        def log_moment(lam, shift):
            exponents = np.where(support, lam * (values - shift)[None, :], -np.inf)
            return float(np.max(logsumexp(exponents, b=fam.measures, axis=1)))

        return cls(log_moment, 'discrete-exact', description=repr(fam))

    @classmethod
    def constant(cls, value):
        """Oracle of the constant variable ξ ≡ value."""
        check_finite('value', value)
        return cls(lambda lam, shift: lam * (value - shift), 'constant', description=f'xi = {value:g}')

    @classmethod
    def mc_estimated(cls, fam, n_samples, seed, values=None, lambda_max=10.0):
        """
        Sampled oracle: max over models of the log of the sample average of
        exp(λ(ξ - s)).

        One sample per model is drawn up front from the stream ``(seed, model)``
        and reused at every λ (common random numbers), so evaluations at
        distinct λ are read-only and safe to run concurrently. The standard
        error of the log moment is the delta-method value of the maximizing
        model; both come from one cached evaluation per (λ, shift).
        """
        if n_samples < 2:
            raise DomainError(f"n_samples must be >= 2, got {n_samples}")
        samples = []
        for i in range(fam.model_count):
            rng = spawn_generator(seed, i)
            if isinstance(fam, DiscreteModelFamily):
                if values is None:
                    raise DomainError("a sampled discrete oracle needs the variable's values")
                samples.append(_values(fam, values)[rng.choice(fam.outcome_count, size=n_samples, p=fam.measures[i])])
            else:
                samples.append(rng.normal(fam.mean_set[i], fam.sigma, size=n_samples))
        samples = np.vstack(samples)
        samples.setflags(write=False)
        log_n = math.log(n_samples)

        # One evaluation per (lam, shift) serves the value and its standard error
        @lru_cache(maxsize=None)
        def per_model(lam, shift):
            exponents = lam * (samples - shift)
            log_means = logsumexp(exponents, axis=1) - log_n
            best = int(np.argmax(log_means))
            weights = np.exp(exponents[best] - log_means[best])
            return float(log_means[best]), float(np.std(weights, ddof=1) / math.sqrt(n_samples))

        return cls(lambda lam, shift: per_model(lam, shift)[0], 'mc-estimated',
                   std_error=lambda lam, shift: per_model(lam, shift)[1],
                   lambda_max=lambda_max, description=f'{n_samples} samples per model of {fam!r}')


class SubGaussianCheck(NamedTuple):
    holds: bool
    worst_margin: float
    worst_lambda: float


def _check_grid(lambda_grid):
    grid = np.asarray(lambda_grid, dtype=float).ravel()
    check_finite('lambda_grid', grid)
    if np.any(grid == 0):
        raise DomainError("lambda grid must not contain 0; the conditions are stated for lambda != 0")
    if not (np.any(grid > 0) and np.any(grid < 0)):
        raise DomainError("lambda grid must contain both positive and negative values")
    return grid


def _margins(oracle: LogMgfOracle, phi: NFunctionSpec, params: SubGaussianParams, grid):
    phi_values = np.asarray(phi(params.a * grid), dtype=float)
    moments = np.array([oracle(lam, params.m_bar if lam > 0 else params.m_under) for lam in grid])
    if oracle.is_statistical:
        slack = MC_SLACK_STD_ERRORS * np.array(
            [oracle.standard_error(lam, params.m_bar if lam > 0 else params.m_under) for lam in grid])
    else:
        slack = EXACT_RELATIVE_SLACK * np.maximum(1.0, np.abs(phi_values))
    return phi_values - moments, slack


def check_phi_subgaussian(oracle: LogMgfOracle, phi: NFunctionSpec, params: SubGaussianParams, lambda_grid):
    """
    Check both one-sided φ-sub-Gaussian conditions on a λ grid.

    margin(λ) = φ(aλ) - log Ê exp(λ(ξ - m̄)) for λ > 0 and with m̲ for λ < 0.
    The condition holds when every margin is >= -slack: a floating-point
    allowance for exact oracles, three standard errors for sampled ones.

    Returns:
        SubGaussianCheck(holds, worst_margin, worst_lambda).
    """
    grid = _check_grid(lambda_grid)
    margins, slack = _margins(oracle, phi, params, grid)
    worst = int(np.argmin(margins))
    holds = bool(np.all(margins >= -slack))
    logger.debug("phi-sub-Gaussian check a=%g: holds=%s, worst margin %.3e at lambda=%g",
                 params.a, holds, margins[worst], grid[worst])
    return SubGaussianCheck(holds, float(margins[worst]), float(grid[worst]))


def check_classical_subgaussian(oracle: LogMgfOracle, a, center, lambda_grid):
    """log E exp(λ(ξ - center)) <= a²λ²/2 for every λ on the grid (φ₂ with m̄ = m̲ = center)."""
    params = SubGaussianParams(a=a, m_bar=center, m_under=center)
    return check_phi_subgaussian(oracle, NFunctionSpec.phi_p(2), params, lambda_grid)


def _bisect_tau(oracle, phi, m_bar, m_under, grid, a_hi, tol):
    def holds(a):
        return check_phi_subgaussian(oracle, phi, SubGaussianParams(a=a, m_bar=m_bar, m_under=m_under), grid).holds

    if not holds(a_hi):
        raise BracketError(f"a_hi too small: the {phi.name}-sub-Gaussian condition fails at a_hi={a_hi:g}")
    if holds(tol):
        return tol, True
    lo, hi = tol, a_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi, False


def tau_phi(oracle: LogMgfOracle, phi: NFunctionSpec, m_bar, m_under, lambda_grid=None,
            a_hi=DEFAULT_A_HI, tol=DEFAULT_TAU_TOL):
    """
    Smallest parameter a for which the two-sided condition holds on the grid.

    Bisection on [tol, a_hi]; the condition is monotone in a because φ is
    nondecreasing in |x|. The returned value is the upper end of the final
    bracket, so the condition holds there.

    Raises:
        BracketError: the condition fails at ``a_hi``.

    Warns:
        DegenerateInfimumWarning: the condition already holds at ``a = tol``.
    """
    check_positive('tol', tol)
    check_positive('a_hi', a_hi)
    if tol >= a_hi:
        raise DomainError(f"tol={tol} must be smaller than a_hi={a_hi}")
    grid = _check_grid(default_lambda_grid() if lambda_grid is None else lambda_grid)
    a, degenerate = _bisect_tau(oracle, phi, m_bar, m_under, grid, a_hi, tol)
    if degenerate:
        message = f"tau_phi collapsed to the bisection floor {tol:g}; the variable is degenerate"
        logger.warning(message)
        warnings.warn(message, DegenerateInfimumWarning, stacklevel=2)
    return a


def gaussian_tau_closed_form(fam: GaussianMeanFamily, phi: NFunctionSpec):
    """
    τ_φ of the Gaussian mean family over all λ != 0.

    With centerings (m̄, m̲) the condition reads λ²σ²/2 <= φ_p(aλ). For
    p >= 2, φ_p dominates x²/2, so the infimum is σ. For p < 2 no finite a
    satisfies the condition for all λ.
    """
    if not phi.is_phi_p or phi.p < 2:
        raise DomainError(f"no closed form for {phi!r}; it exists for phi_p with p >= 2")
    return fam.sigma


def chernoff_exponent(phi: NFunctionSpec, a, epsilon, lam):
    """λε - φ(aλ), the unoptimized exponent of the Chernoff bound."""
    check_positive('a', a)
    check_finite('epsilon', epsilon)
    check_finite('lambda', lam)
    return lam * epsilon - float(phi(a * lam))


class TailBoundResult(BaseModel):
    epsilon: float
    a: float
    exponent: float
    bound: float
    one_sided_bound: float
    lambda_star: float
    method: str
    # The conjugate search hit its boundary; the exponent may be too small
    truncated: bool = False


def tail_bound(phi: NFunctionSpec, a, epsilon, tol=1e-9):
    """
    Capacity tail bound V̂({ξ - m̄ > ε} ∪ {ξ - m̲ < -ε}) <= 2 exp(-φ*(ε/a)).

    Each tail is bounded by exp(-φ*(ε/a)); φ* is even, so the lower tail
    gives the same value. ``lambda_star`` maximizes the Chernoff exponent.
    A numeric conjugate that stops at its search boundary marks the result
    ``truncated``: the true exponent is larger and the bound is not certified.
    """
    check_positive('a', a)
    check_positive('epsilon', epsilon)
    y = epsilon / a
    if phi.has_analytic_conjugate:
        result, method = analytic_conjugate(phi, y), 'analytic'
    else:
        result, method = numeric_conjugate(phi, ConjugateQuery(y=y, tol=tol)), 'numeric'
    one_sided = math.exp(-result.value)
    return TailBoundResult(epsilon=epsilon, a=a, exponent=result.value, bound=2.0 * one_sided,
                           one_sided_bound=one_sided, lambda_star=result.argmax / a, method=method,
                           truncated=result.truncated)


def empirical_tail_capacity(fam: GaussianMeanFamily, m_bar, m_under, epsilon, n_samples, seed, n_workers=1):
    """
    Monte Carlo estimate of sup over m of P_m({ξ - m̄ > ε} ∪ {ξ - m̲ < -ε}).

    Returns:
        McEstimate of the maximizing model's frequency.
    """
    check_positive('epsilon', epsilon)
    if n_samples < 1000:
        raise DomainError(f"n_samples must be >= 1000, got {n_samples}")

    def outside(x):
        return ((x - m_bar > epsilon) | (x - m_under < -epsilon)).astype(float)

    return mc_upper_expectation(fam, outside, n_samples, seed, n_workers=n_workers)


class SubGaussianCertificate(BaseModel):
    phi: dict
    a: float
    m_bar: float
    m_under: float
    grid: List[float]
    worst_margin: float
    worst_lambda: float
    provenance: str
    statistical: bool
    degenerate: bool
    closed_form_a: Optional[float] = None


def subgaussian_certificate(oracle: LogMgfOracle, phi: NFunctionSpec, m_bar, m_under, lambda_grid=None,
                            a_hi=DEFAULT_A_HI, tol=DEFAULT_TAU_TOL, closed_form_a=None):
    """Compute τ_φ and package it with the worst margin and the evidence type."""
    check_positive('tol', tol)
    check_positive('a_hi', a_hi)
    grid = _check_grid(default_lambda_grid() if lambda_grid is None else lambda_grid)
    a, degenerate = _bisect_tau(oracle, phi, m_bar, m_under, grid, a_hi, tol)
    if degenerate:
        message = f"tau_phi collapsed to the bisection floor {tol:g}; the variable is degenerate"
        logger.warning(message)
        warnings.warn(message, DegenerateInfimumWarning, stacklevel=2)
    check = check_phi_subgaussian(oracle, phi, SubGaussianParams(a=a, m_bar=m_bar, m_under=m_under), grid)
    if oracle.is_statistical:
        logger.info("Certificate for %r rests on sampled moments (3 standard error slack)", oracle)
    return SubGaussianCertificate(phi=phi.describe(), a=a, m_bar=m_bar, m_under=m_under, grid=grid.tolist(),
                                  worst_margin=check.worst_margin, worst_lambda=check.worst_lambda,
                                  provenance=oracle.provenance, statistical=oracle.is_statistical,
                                  degenerate=degenerate, closed_form_a=closed_form_a)
