"""
Strong law of large numbers under capacities: analytic majorants and a
path-ensemble simulation under the Gaussian mean family.

If τ_{φ_p}(Zₙ) <= c n^(-α) for the centred averages Zₙ, the capacity of
{Zₙ - m̄ > ε} ∪ {Zₙ - m̲ < -ε} is at most C0 exp(-K n^β) with
C0 = 2 exp(1/q - 1/2), K = (ε/c)^q / q and β = qα. The series of these
bounds is dominated by (1/β) K^(-1/β) Γ(1/β), which gives the strong law by
Borel-Cantelli.
"""

from concurrent.futures import ThreadPoolExecutor
import logging
import math
import os
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import gamma
from tqdm import tqdm

from ._errors import DomainError, ResourceLimitError
from ._expectation import GaussianMeanFamily, family_from_dict, gaussian_family_log_upper_exp_moment
from ._nfunc import NFunctionSpec, phi_p_dual_index, phi_p_eval
from ._report import PropertyReport
from ._subgauss import LogMgfOracle, default_lambda_grid, tau_phi
from ._utility import binomial_standard_error, check_finite, check_positive, spawn_generator

logger = logging.getLogger(__name__)

MAX_DRAWS_ENV = 'CAPLAW_MAX_DRAWS'
DEFAULT_MAX_DRAWS = 10 ** 9
PATH_BLOCK = 256
STEP_CHUNK = 1024


class TheoremConstants(BaseModel):
    p: float
    q: float
    alpha: float
    c: float
    epsilon: float
    beta: float
    C0: float
    K: float


def theorem_constants(p, alpha, c, epsilon):
    """Constants (q, β, C0, K) of the exponential majorant C0 exp(-K n^β)."""
    q = phi_p_dual_index(p)
    check_positive('alpha', alpha)
    check_positive('c', c)
    check_positive('epsilon', epsilon)
    return TheoremConstants(p=p, q=q, alpha=alpha, c=c, epsilon=epsilon, beta=q * alpha,
                            C0=2.0 * math.exp(1.0 / q - 0.5), K=(epsilon / c) ** q / q)


def lemma_bound_at_n(phi_p: NFunctionSpec, tau_n, epsilon):
    """2 exp(-φ_q(ε/τₙ)): the tail bound of Zₙ with parameter τₙ."""
    if not phi_p.has_analytic_conjugate:
        raise DomainError(f"lemma bound needs phi_p with p > 1, got {phi_p!r}")
    check_positive('tau_n', tau_n)
    check_positive('epsilon', epsilon)
    q = phi_p_dual_index(phi_p.p)
    return 2.0 * math.exp(-phi_p_eval(q, epsilon / tau_n))


def gamma_fn(x):
    """Γ(x) for x > 0."""
    check_finite('x', x)
    if x <= 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    return float(gamma(x))


def integral_bound(K, beta):
    """∫₀^∞ exp(-K x^β) dx = (1/β) K^(-1/β) Γ(1/β)."""
    check_positive('K', K)
    check_positive('beta', beta)
    return K ** (-1.0 / beta) * gamma_fn(1.0 / beta) / beta


def _series_terms(consts: TheoremConstants, N):
    return np.exp(-consts.K * np.arange(1, N + 1, dtype=float) ** consts.beta)


def series_partial_sum(consts: TheoremConstants, N):
    """Σ_{n=1..N} exp(-K n^β), correctly rounded (math.fsum) in ascending n."""
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    return math.fsum(_series_terms(consts, int(N)))


def series_table(consts: TheoremConstants, checkpoints):
    """Partial sums at each checkpoint next to the integral bound."""
    checkpoints = sorted({int(n) for n in checkpoints})
    if not checkpoints or checkpoints[0] < 1:
        raise DomainError("series checkpoints must be positive integers")
    terms = _series_terms(consts, checkpoints[-1])
    bound = integral_bound(consts.K, consts.beta)
    return pd.DataFrame({'n': checkpoints,
                         'partial_sum': [math.fsum(terms[:n]) for n in checkpoints],
                         'integral_bound': bound})


def lemma_curve(consts: TheoremConstants, n_values):
    """
    Lemma bound with τₙ = c n^(-α) against the majorant C0 exp(-K n^β).

    ``majorized`` holds where ε/τₙ <= 1 (the majorant is not claimed there)
    or where the lemma bound is below the majorant, up to a relative 1e-9 on
    the log bounds.
    """
    n = np.asarray(sorted({int(v) for v in n_values}), dtype=float)
    if n.size == 0 or n[0] < 1:
        raise DomainError("lemma curve needs positive integers n")
    tau = consts.c * n ** (-consts.alpha)
    log_lemma = math.log(2.0) - phi_p_eval(consts.q, consts.epsilon / tau)
    log_theorem = math.log(consts.C0) - consts.K * n ** consts.beta
    above = consts.epsilon / tau > 1.0
    # compared in the log domain; both bounds underflow for large n
    majorized = ~above | (log_lemma <= log_theorem + 1e-9 * np.maximum(1.0, np.abs(log_theorem)))
    lemma, theorem = np.exp(log_lemma), np.exp(log_theorem)
    return pd.DataFrame({'n': n.astype(int), 'tau_n': tau, 'lemma_bound': lemma,
                         'theorem_bound': theorem, 'majorized': majorized})


def default_max_draws():
    raw = os.environ.get(MAX_DRAWS_ENV)
    if raw is None:
        return DEFAULT_MAX_DRAWS
    try:
        value = int(float(raw))
    except ValueError:
        raise DomainError(f"{MAX_DRAWS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise DomainError(f"{MAX_DRAWS_ENV} must be positive, got {value}")
    return value


class SllnConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    family: GaussianMeanFamily
    n_steps: int = Field(ge=1)
    n_paths: int = Field(ge=1)
    epsilon: float = Field(gt=0)
    n_min: int = Field(ge=1)
    master_seed: int = Field(ge=0)
    checkpoints: Optional[List[int]] = None
    max_draws: int = Field(default_factory=default_max_draws, ge=1)

    @field_validator('family', mode='before')
    @classmethod
    def _load_family(cls, value):
        if isinstance(value, dict):
            value = family_from_dict(value)
        if not isinstance(value, GaussianMeanFamily):
            raise ValueError("the simulation runs under a Gaussian mean family")
        return value

    @model_validator(mode='after')
    def _check_horizon(self):
        if self.n_min > self.n_steps:
            raise ValueError(f"n_min={self.n_min} exceeds n_steps={self.n_steps}")
        return self

    def resolved_checkpoints(self):
        points = self.checkpoints or [10, 100, 1000, self.n_steps]
        return sorted({n for n in points if 1 <= n <= self.n_steps} | {self.n_steps})

    def total_draws(self):
        return self.n_steps * self.n_paths * self.family.model_count


class CheckpointRate(BaseModel):
    m: float
    n: int
    deviation_count: int
    deviation_frequency: float


class CapacityEstimate(BaseModel):
    upper_deviation: float
    lower_sandwich: float
    per_model_rates: List[Tuple[float, float]]
    per_model_counts: List[int]
    checkpoints: List[CheckpointRate]
    n_paths: int

    def checkpoint_upper(self):
        """Largest per-model deviation frequency at each checkpoint n."""
        upper: Dict[int, float] = {}
        for row in self.checkpoints:
            upper[row.n] = max(upper.get(row.n, 0.0), row.deviation_frequency)
        return dict(sorted(upper.items()))


def _simulate_block(config: SllnConfig, model, first_path, last_path, checkpoints):
    fam = config.family
    mean = float(fam.mean_set[model])
    lo_band, hi_band = fam.m_under - config.epsilon, fam.m_bar + config.epsilon
    generators = [spawn_generator(config.master_seed, model, j) for j in range(first_path, last_path)]
    width = last_path - first_path

    # Neumaier-compensated running sums, one lane per path
    total = np.zeros(width)
    compensation = np.zeros(width)
    flagged = np.zeros(width, dtype=bool)
    checkpoint_counts = {}
    pending = list(checkpoints)

    step = 0
    while step < config.n_steps:
        chunk = min(STEP_CHUNK, config.n_steps - step)
        draws = np.vstack([rng.normal(mean, fam.sigma, size=chunk) for rng in generators])
        for k in range(chunk):
            x = draws[:, k]
            t = total + x
            compensation += np.where(np.abs(total) >= np.abs(x), (total - t) + x, (x - t) + total)
            total = t
            step += 1
            running_mean = (total + compensation) / step
            outside = (running_mean < lo_band) | (running_mean > hi_band)
            if step >= config.n_min:
                flagged |= outside
            if pending and step == pending[0]:
                checkpoint_counts[pending.pop(0)] = int(np.count_nonzero(outside))
    return int(np.count_nonzero(flagged)), checkpoint_counts


def simulate_running_means(config: SllnConfig, n_workers=1, show_progress=False):
    """
    Simulate running means Sₙ/n under every model of the Gaussian mean family.

    Path ``j`` of model ``i`` draws from the counter-based stream
    ``(master_seed, i, j)``. A path deviates when its running mean leaves
    [m̲ - ε, m̄ + ε] at some n in [n_min, n_steps], a finite-horizon stand-in
    for {lim inf Sₙ/n < m̲} ∪ {lim sup Sₙ/n > m̄}. Results are identical for
    any ``n_workers``.

    Raises:
        ResourceLimitError: n_steps * n_paths * |M| exceeds ``max_draws``.
    """
    draws = config.total_draws()
    if draws > config.max_draws:
        raise ResourceLimitError(
            f"simulation needs {draws} scalar draws, above the cap of {config.max_draws}; "
            f"reduce n_steps/n_paths or raise {MAX_DRAWS_ENV}")
    fam = config.family
    checkpoints = config.resolved_checkpoints()
    tasks = [(i, start, min(start + PATH_BLOCK, config.n_paths))
             for i in range(fam.model_count) for start in range(0, config.n_paths, PATH_BLOCK)]
    logger.info("Simulating %d paths x %d steps under %d models (%d tasks, %d workers)",
                config.n_paths, config.n_steps, fam.model_count, len(tasks), n_workers)

    def run(task):
        return _simulate_block(config, task[0], task[1], task[2], checkpoints)

    results = []
    with tqdm(total=len(tasks), desc='Simulating paths', disable=not show_progress) as bar:
        if n_workers > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                for result in pool.map(run, tasks):
                    results.append(result)
                    bar.update(1)
        else:
            for task in tasks:
                results.append(run(task))
                bar.update(1)

    counts = [0] * fam.model_count
    checkpoint_counts = [{n: 0 for n in checkpoints} for _ in range(fam.model_count)]
    for (model, _, _), (flagged, at_checkpoints) in zip(tasks, results):
        counts[model] += flagged
        for n, count in at_checkpoints.items():
            checkpoint_counts[model][n] += count

    rates = [count / config.n_paths for count in counts]
    upper = max(rates)
    rows = [CheckpointRate(m=float(fam.mean_set[i]), n=n, deviation_count=checkpoint_counts[i][n],
                           deviation_frequency=checkpoint_counts[i][n] / config.n_paths)
            for i in range(fam.model_count) for n in checkpoints]
    return CapacityEstimate(upper_deviation=upper, lower_sandwich=1.0 - upper,
                            per_model_rates=[(float(m), r) for m, r in zip(fam.mean_set, rates)],
                            per_model_counts=counts, checkpoints=rows, n_paths=config.n_paths)


class SllnReport(BaseModel):
    config: dict
    note: str
    constants: TheoremConstants
    estimate: CapacityEstimate
    certificate_band: Tuple[float, float]
    expectation_band: Tuple[float, float]
    lemma_curve: List[dict]
    series: List[dict]
    checkpoints: List[dict]
    product_bound: List[dict]
    checks: PropertyReport

    def tables(self):
        return {'checkpoints': pd.DataFrame(self.checkpoints,
                                            columns=['m', 'n', 'deviation_frequency', 'lemma_bound', 'theorem_bound']),
                'series': pd.DataFrame(self.series, columns=['n', 'partial_sum', 'integral_bound']),
                'lemma_curve': pd.DataFrame(self.lemma_curve)}


def _moment_slope_band(fam, lam=1e-3):
    """
    (Ě ξ, Ê ξ) read off the upper log exponential moment as lam -> 0.

    log Ê exp(±lam ξ) / lam = ±(extreme mean) + lam σ²/2, so one Richardson
    step over lam and lam/2 cancels the curvature term.
    """
    def slope(sign, h):
        return sign * gaussian_family_log_upper_exp_moment(fam, sign * h) / h

    upper = 2.0 * slope(1.0, 0.5 * lam) - slope(1.0, lam)
    lower = 2.0 * slope(-1.0, 0.5 * lam) - slope(-1.0, lam)
    return lower, upper


def _trend_holds(upper_by_n, n_paths, start=100):
    points = [(n, rate) for n, rate in upper_by_n.items() if n >= start]
    for (_, r1), (_, r2) in zip(points, points[1:]):
        se = binomial_standard_error(max(r1, r2, 1.0 / n_paths), n_paths)
        if r2 > r1 + 2.0 * se:
            return False
    return True


def _product_bound_rows(fam, ns, lambdas, tau_tol):
    rows = []
    grid = default_lambda_grid()
    for n in ns:
        oracle = LogMgfOracle.running_mean_gaussian(fam, n)
        tau_n = tau_phi(oracle, NFunctionSpec.phi_p(2), fam.m_bar, fam.m_under, grid,
                        a_hi=max(4.0, 4.0 * fam.sigma), tol=tau_tol)
        for lam in lambdas:
            lhs = oracle(lam, fam.m_bar)
            rhs = lam * lam * fam.sigma ** 2 / (2.0 * n)
            rows.append({'n': n, 'lambda': lam, 'log_upper_moment': lhs, 'product_bound': rhs,
                         'tau': tau_n, 'sigma_over_sqrt_n': fam.sigma / math.sqrt(n)})
    return rows


def slln_report(config: SllnConfig, p=2.0, alpha=0.5, c=None, n_workers=1, show_progress=False,
                product_ns=(1, 10, 100), product_lambdas=(0.5, 1.0, 2.0), tau_tol=1e-6):
    """
    Bundle the analytic majorants with the simulated capacities.

    Theorem inputs default to the Gaussian case (p, α, c) = (2, 1/2, σ),
    where τ_{φ₂}(Zₙ) = σ n^(-1/2). The returned report carries a property
    check for each invariant; callers decide whether to :meth:`require` it.
    """
    fam = config.family
    c = fam.sigma if c is None else c
    consts = theorem_constants(p, alpha, c, config.epsilon)
    phi = NFunctionSpec.phi_p(p)
    checkpoints = config.resolved_checkpoints()

    curve_ns = np.unique(np.concatenate([np.geomspace(1, config.n_steps, 60).round(), checkpoints]))
    curve = lemma_curve(consts, curve_ns)
    full_curve = lemma_curve(consts, range(1, config.n_steps + 1))
    series_points = [10 ** k for k in range(int(math.log10(config.n_steps)) + 1)] + [config.n_steps]
    series = series_table(consts, series_points)

    estimate = simulate_running_means(config, n_workers=n_workers, show_progress=show_progress)

    checkpoint_rows = []
    for row in estimate.checkpoints:
        tau_n = c * row.n ** (-alpha)
        checkpoint_rows.append({'m': row.m, 'n': row.n, 'deviation_frequency': row.deviation_frequency,
                                'lemma_bound': lemma_bound_at_n(phi, tau_n, config.epsilon),
                                'theorem_bound': consts.C0 * math.exp(-consts.K * row.n ** consts.beta)})

    product_rows = _product_bound_rows(fam, product_ns, product_lambdas, tau_tol)
    certificate_band = (fam.m_under, fam.m_bar)
    expectation_band = _moment_slope_band(fam)

    checks = PropertyReport(subject='capacity strong law')
    checks.add('conjugate_capacities', abs(estimate.lower_sandwich + estimate.upper_deviation - 1.0) <= 1e-12,
               lhs=estimate.lower_sandwich + estimate.upper_deviation, rhs=1.0)
    checks.add('lemma_majorized', bool(full_curve['majorized'].all()),
               f'C0 exp(-K n^beta) dominates the lemma bound for n in [1, {config.n_steps}] where eps/tau_n > 1')
    worst_series = float((series['partial_sum'] - series['integral_bound']).max())
    checks.add('series_below_integral', worst_series <= 0.0,
               lhs=float(series['partial_sum'].iloc[-1]), rhs=float(series['integral_bound'].iloc[-1]))

    upper_by_n = estimate.checkpoint_upper()
    within = all(rate <= lemma_bound_at_n(NFunctionSpec.phi_p(2), fam.sigma / math.sqrt(n), config.epsilon)
                 + 3.0 * binomial_standard_error(rate, config.n_paths)
                 for n, rate in upper_by_n.items())
    checks.add('empirical_within_lemma', within, 'checkpoint capacities against 2 exp(-n eps^2 / (2 sigma^2))')
    checks.add('convergence_trend', _trend_holds(upper_by_n, config.n_paths),
               'checkpoint capacities nonincreasing beyond n = 100 within 2 binomial standard errors')
    product_gap = max(abs(r['log_upper_moment'] - r['product_bound']) for r in product_rows)
    checks.add('product_bound_equality', product_gap <= 1e-12, f'max gap {product_gap:.3e}')
    tau_gap = max(abs(r['tau'] - r['sigma_over_sqrt_n']) for r in product_rows)
    checks.add('tau_running_mean', tau_gap <= 1e-4, f'max |tau(Z_n) - sigma/sqrt(n)| = {tau_gap:.3e}')
    band_gap = max(abs(a - b) for a, b in zip(certificate_band, expectation_band))
    checks.add('bands_agree', band_gap <= 1e-9 * max(1.0, *map(abs, certificate_band)),
               f'certificate band {certificate_band}, expectation band {expectation_band}')

    for check in checks.failures():
        logger.error("Invariant '%s' failed: %s", check.name, check.detail)

    return SllnReport(
        config={'family': {'gaussian': fam.to_dict()}, 'n_steps': config.n_steps, 'n_paths': config.n_paths,
                'epsilon': config.epsilon, 'n_min': config.n_min, 'master_seed': config.master_seed,
                'checkpoints': checkpoints, 'p': p, 'alpha': alpha, 'c': c},
        note=(f'finite-horizon approximation: a path deviates when its running mean leaves '
              f'[m_under - eps, m_bar + eps] for some n in [{config.n_min}, {config.n_steps}]'),
        constants=consts, estimate=estimate,
        certificate_band=certificate_band, expectation_band=expectation_band,
        lemma_curve=curve.to_dict(orient='records'), series=series.to_dict(orient='records'),
        checkpoints=checkpoint_rows, product_bound=product_rows, checks=checks)
