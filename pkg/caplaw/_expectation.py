"""
Upper and lower expectations as suprema/infima over families of probability models.

Two families are supported: a finite sample space with finitely many
probability vectors (exact arithmetic oracle), and normal distributions with a
shared variance whose means range over a finite set (closed-form exponential
moments).
"""

from concurrent.futures import ThreadPoolExecutor
from functools import partial
import logging
import math
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy.stats import norm

from ._errors import DomainError, EstimationError
from ._report import PropertyReport
from ._utility import as_float_array, check_finite, check_positive, spawn_generator

logger = logging.getLogger(__name__)

PROBABILITY_ATOL = 1e-12
AXIOM_TOL = 1e-10
MAX_EXHAUSTIVE_OUTCOMES = 12
MC_BLOCK_SIZE = 1 << 16


class DiscreteModelFamily:
    """Finite sample space {0, ..., n-1} with a finite family of probability vectors."""

    def __init__(self, measures, outcome_count=None):
        arr = as_float_array('measures', measures)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.size == 0:
            raise DomainError("measures must be a nonempty list of probability vectors")
        check_finite('measures', arr)
        if outcome_count is not None and arr.shape[1] != outcome_count:
            raise DomainError(f"every measure must have length {outcome_count}, got {arr.shape[1]}")
        if np.any(arr < 0):
            raise DomainError("probability vectors must have nonnegative entries")
        sums = arr.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROBABILITY_ATOL)
        if bad.size:
            raise DomainError(f"measure {int(bad[0])} sums to {sums[bad[0]]!r}, not 1")
        self.measures = arr
        self.measures.setflags(write=False)

    @property
    def outcome_count(self):
        return self.measures.shape[1]

    @property
    def model_count(self):
        return self.measures.shape[0]

    @classmethod
    def from_dict(cls, doc):
        return cls(doc['measures'], outcome_count=doc.get('outcomes'))

    def to_dict(self):
        return {'outcomes': self.outcome_count, 'measures': self.measures.tolist()}

    def model_expectations(self, X):
        """E_Q[X] for every measure Q, in family order."""
        return self.measures @ _values(self, X)

    def __repr__(self):
        return f'DiscreteModelFamily(outcomes={self.outcome_count}, models={self.model_count})'


class GaussianMeanFamily:
    """Normal laws N(m, sigma^2) for m in a finite mean set M."""

    def __init__(self, mean_set, sigma):
        means = np.atleast_1d(as_float_array('mean_set', mean_set))
        if means.size == 0:
            raise DomainError("mean_set must be nonempty")
        check_finite('mean_set', means)
        check_positive('sigma', sigma)
        self.mean_set = means
        self.mean_set.setflags(write=False)
        self.sigma = float(sigma)

    @property
    def m_under(self):
        return float(np.min(self.mean_set))

    @property
    def m_bar(self):
        return float(np.max(self.mean_set))

    @property
    def model_count(self):
        return self.mean_set.size

    @classmethod
    def from_dict(cls, doc):
        return cls(doc['means'], doc['sigma'])

    def to_dict(self):
        return {'means': self.mean_set.tolist(), 'sigma': self.sigma}

    def __repr__(self):
        return f'GaussianMeanFamily(means={self.mean_set.tolist()}, sigma={self.sigma:g})'


def family_from_dict(doc):
    """Build a family from ``{"discrete": {...}}`` or ``{"gaussian": {...}}``."""
    if not isinstance(doc, dict) or len(doc) != 1:
        raise DomainError("family document must have exactly one key: 'discrete' or 'gaussian'")
    kind, body = next(iter(doc.items()))
    try:
        if kind == 'discrete':
            return DiscreteModelFamily.from_dict(body)
        if kind == 'gaussian':
            return GaussianMeanFamily.from_dict(body)
    except (KeyError, TypeError) as e:
        raise DomainError(f"malformed {kind} family: {e}") from e
    raise DomainError(f"Invalid family kind '{kind}'. Choose 'discrete' or 'gaussian'.")


def family_to_dict(fam):
    if isinstance(fam, DiscreteModelFamily):
        return {'discrete': fam.to_dict()}
    return {'gaussian': fam.to_dict()}


class DiscreteRandomVariable:
    """Finite real values indexed by outcome."""

    def __init__(self, values):
        arr = np.atleast_1d(as_float_array('values', values))
        if arr.ndim != 1:
            raise DomainError("a discrete random variable is a 1-D vector of values")
        check_finite('values', arr)
        self.values = arr

    @classmethod
    def constant(cls, c, outcome_count):
        return cls(np.full(outcome_count, float(c)))

    def __len__(self):
        return self.values.size

    def __neg__(self):
        return DiscreteRandomVariable(-self.values)

    def __add__(self, other):
        return DiscreteRandomVariable(self.values + _raw(other))

    __radd__ = __add__

    def __mul__(self, scalar):
        return DiscreteRandomVariable(self.values * float(scalar))

    __rmul__ = __mul__

    def dominated_by(self, other):
        return bool(np.all(self.values <= _raw(other)))

    def __repr__(self):
        return f'DiscreteRandomVariable({self.values.tolist()})'


def _raw(X):
    return X.values if isinstance(X, DiscreteRandomVariable) else as_float_array('X', X)


def _values(fam, X):
    values = _raw(X)
    if values.shape != (fam.outcome_count,):
        raise DomainError(f"random variable has {values.size} values, family has {fam.outcome_count} outcomes")
    check_finite('values', values)
    return values


class EventSet:
    """
    An event: a set of outcome indices (discrete families) or a finite union
    of sorted, non-overlapping intervals (Gaussian families).
    """

    def __init__(self, indices=None, outcome_count=None, intervals=None):
        if (indices is None) == (intervals is None):
            raise DomainError("an event is either a set of outcome indices or a union of intervals")
        self.indices = None
        self.intervals = None
        self.outcome_count = outcome_count
        if indices is not None:
            if outcome_count is None:
                raise DomainError("an index event needs the outcome count of its family")
            indices = frozenset(int(i) for i in indices)
            if any(i < 0 or i >= outcome_count for i in indices):
                raise DomainError(f"event indices must lie in [0, {outcome_count}), got {sorted(indices)}")
            self.indices = indices
        else:
            cleaned = [(float(lo), float(hi)) for lo, hi in intervals]
            for k, (lo, hi) in enumerate(cleaned):
                if math.isnan(lo) or math.isnan(hi) or lo > hi:
                    raise DomainError(f"interval {k} is not well ordered: ({lo}, {hi})")
                if k and cleaned[k - 1][1] > lo:
                    raise DomainError("intervals must be sorted and non-overlapping")
            self.intervals = tuple(cleaned)

    @classmethod
    def of_outcomes(cls, indices, outcome_count):
        return cls(indices=indices, outcome_count=outcome_count)

    @classmethod
    def of_intervals(cls, intervals):
        return cls(intervals=intervals)

    @classmethod
    def everything(cls, outcome_count):
        return cls(indices=range(outcome_count), outcome_count=outcome_count)

    @property
    def is_discrete(self):
        return self.indices is not None

    def indicator(self):
        if not self.is_discrete:
            raise DomainError("indicator vectors exist only for discrete events")
        out = np.zeros(self.outcome_count)
        out[list(self.indices)] = 1.0
        return out

    def complement(self):
        if self.is_discrete:
            return EventSet(indices=set(range(self.outcome_count)) - self.indices,
                            outcome_count=self.outcome_count)
        gaps, start = [], -math.inf
        for lo, hi in self.intervals:
            if lo > start:
                gaps.append((start, lo))
            start = hi
        if start < math.inf:
            gaps.append((start, math.inf))
        return EventSet(intervals=gaps)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_discrete:
            return np.isin(x, list(self.indices))
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            inside |= (x >= lo) & (x <= hi)
        return inside

    def __repr__(self):
        if self.is_discrete:
            return f'EventSet({sorted(self.indices)} of {self.outcome_count})'
        return f'EventSet({list(self.intervals)})'


def _check_event(fam, A):
    if not A.is_discrete or A.outcome_count != fam.outcome_count:
        raise DomainError(f"{A!r} is not an event of {fam!r}")


# ===== Exact discrete functionals =====

def upper_expectation_exact(fam: DiscreteModelFamily, X):
    """Ê[X] = max over measures Q of E_Q[X]."""
    return float(np.max(fam.model_expectations(X)))


def lower_expectation_exact(fam: DiscreteModelFamily, X):
    """Ě[X] = -Ê[-X] = min over measures Q of E_Q[X]."""
    return -upper_expectation_exact(fam, -_values(fam, X))


def upper_probability_exact(fam: DiscreteModelFamily, A: EventSet):
    """V̂(A) = Ê[1_A]; exactly 1 on the sure event and 0 on the empty event."""
    _check_event(fam, A)
    if not A.indices:
        return 0.0
    if len(A.indices) == fam.outcome_count:
        return 1.0
    return upper_expectation_exact(fam, A.indicator())


def lower_capacity_exact(fam: DiscreteModelFamily, A: EventSet):
    """v(A) = 1 - V̂(A^c)."""
    _check_event(fam, A)
    return 1.0 - upper_probability_exact(fam, A.complement())


class MeanBand(NamedTuple):
    lower: float
    upper: float
    uncertain: bool


def mean_uncertainty(fam: DiscreteModelFamily, X, tol=AXIOM_TOL):
    """[Ě X, Ê X]; X has mean uncertainty when the band is nondegenerate."""
    lower = lower_expectation_exact(fam, X)
    upper = upper_expectation_exact(fam, X)
    return MeanBand(lower, upper, upper - lower > tol)


def is_quasi_sure(fam: DiscreteModelFamily, A: EventSet, tol=0.0):
    """A holds quasi-surely when V̂(A^c) = 0."""
    return upper_probability_exact(fam, A.complement()) <= tol


# ===== Gaussian mean family =====

def gaussian_log_exp_moment(m, sigma, lam, shift=0.0):
    """log E exp(lam (X - shift)) for X ~ N(m, sigma^2): lam^2 sigma^2 / 2 + lam (m - shift)."""
    check_positive('sigma', sigma)
    return 0.5 * (lam * sigma) ** 2 + lam * (m - shift)


def _gaussian_log_moments(fam: GaussianMeanFamily, lam, shift):
    return 0.5 * (lam * fam.sigma) ** 2 + lam * (fam.mean_set - shift)


def gaussian_family_log_upper_exp_moment(fam: GaussianMeanFamily, lam, shift=0.0):
    """log Ê exp(lam (ξ - shift)) = max over m in M of the Gaussian log-moment."""
    return float(np.max(_gaussian_log_moments(fam, lam, shift)))


def gaussian_family_argmax_mean(fam: GaussianMeanFamily, lam, shift=0.0):
    """Mean attaining the supremum in :func:`gaussian_family_log_upper_exp_moment`."""
    return float(fam.mean_set[int(np.argmax(_gaussian_log_moments(fam, lam, shift)))])


def gaussian_expectation_band(fam: GaussianMeanFamily):
    """(Ě ξ, Ê ξ) for the identity variable: (min M, max M)."""
    return fam.m_under, fam.m_bar


def _interval_probabilities(fam: GaussianMeanFamily, A: EventSet):
    if A.is_discrete:
        raise DomainError("Gaussian events are unions of intervals")
    probs = np.zeros(fam.model_count)
    for lo, hi in A.intervals:
        probs += norm.cdf(hi, loc=fam.mean_set, scale=fam.sigma) - norm.cdf(lo, loc=fam.mean_set, scale=fam.sigma)
    return probs


def gaussian_upper_probability(fam: GaussianMeanFamily, A: EventSet):
    """sup over m of P_m(A)."""
    return float(np.max(_interval_probabilities(fam, A)))


def gaussian_lower_capacity(fam: GaussianMeanFamily, A: EventSet):
    """inf over m of P_m(A)."""
    return float(np.min(_interval_probabilities(fam, A)))


# ===== Monte Carlo =====

class McEstimate(NamedTuple):
    estimate: float
    std_error: float
    argmax_model: int
    per_model: Tuple[Tuple[float, float], ...]


def _sample_block(fam, g, n_samples, seed, model, block, block_size):
    size = min(block_size, n_samples - block * block_size)
    rng = spawn_generator(seed, model, block)
    if isinstance(fam, DiscreteModelFamily):
        outcomes = rng.choice(fam.outcome_count, size=size, p=fam.measures[model])
        if callable(g):
            values = np.asarray(g(outcomes), dtype=float)
        else:
            values = _values(fam, g)[outcomes]
    else:
        draws = rng.normal(fam.mean_set[model], fam.sigma, size=size)
        values = np.asarray(g(draws), dtype=float)
    if values.shape != (size,) or not np.all(np.isfinite(values)):
        raise EstimationError(f"non-finite or misshaped integrand values in model {model}, block {block}")
    mean = float(np.mean(values))
    return size, mean, float(np.sum((values - mean) ** 2))


def _combine(blocks):
    # Chan et al. pairwise update in fixed block order
    count, mean, m2 = 0, 0.0, 0.0
    for n_b, mean_b, m2_b in blocks:
        total = count + n_b
        delta = mean_b - mean
        mean += delta * n_b / total
        m2 += m2_b + delta * delta * count * n_b / total
        count = total
    return count, mean, m2


def mc_upper_expectation(fam, g, n_samples, seed, n_workers=1, block_size=MC_BLOCK_SIZE):
    """
    Monte Carlo estimate of Ê[g] = sup over models of E[g].

    Each model draws ``n_samples`` i.i.d. samples split into fixed-size blocks;
    block ``j`` of model ``i`` uses the counter-based stream ``(seed, i, j)``,
    so the result does not depend on ``n_workers``.

    Args:
        fam: DiscreteModelFamily or GaussianMeanFamily.
        g: For discrete families a vector of per-outcome values or a callable
           on outcome indices; for Gaussian families a vectorised callable.
        n_samples: Samples per model (>= 2).
        seed: Master seed.

    Returns:
        McEstimate with the maximum of the per-model averages and the
        standard error of the maximizing model.
    """
    if n_samples < 2:
        raise DomainError(f"n_samples must be >= 2, got {n_samples}")
    n_blocks = -(-n_samples // block_size)
    tasks = [(i, j) for i in range(fam.model_count) for j in range(n_blocks)]

    def run(task):
        return _sample_block(fam, g, n_samples, seed, task[0], task[1], block_size)

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(task) for task in tasks]

    per_model = []
    for i in range(fam.model_count):
        count, mean, m2 = _combine(results[i * n_blocks:(i + 1) * n_blocks])
        per_model.append((mean, math.sqrt(m2 / (count - 1) / count)))
    best = max(range(len(per_model)), key=lambda i: per_model[i][0])
    logger.debug("MC upper expectation over %d models: %s", len(per_model), per_model)
    return McEstimate(per_model[best][0], per_model[best][1], best, tuple(per_model))


# ===== Axiom verifiers =====

def _subset_masks(n):
    masks = np.arange(1 << n, dtype=np.int64)
    return masks, ((masks[:, None] >> np.arange(n)) & 1).astype(float)


def verify_sublinear_axioms(fam: DiscreteModelFamily, X, Y, lam, c, tol=AXIOM_TOL,
                            sampled_pairs=20000, seed=0):
    """
    Check the sub-linear expectation axioms on (X, Y, lam, c) and the
    upper-capacity axioms of V̂(A) = Ê[1_A].

    Event axioms are checked over all event pairs when the family has at most
    12 outcomes and over ``sampled_pairs`` random pairs otherwise.
    """
    if lam < 0:
        raise DomainError(f"positive homogeneity needs lam >= 0, got {lam}")
    x, y = _values(fam, X), _values(fam, Y)
    E = partial(upper_expectation_exact, fam)
    report = PropertyReport(subject=f'sub-linear axioms on {fam!r}')

    lo, hi = np.minimum(x, y), np.maximum(x, y)
    pairs = [(lo, x), (lo, y), (x, hi), (y, hi)]
    if np.all(x <= y):
        pairs.append((x, y))
    mono_gap = max(E(a) - E(b) for a, b in pairs)
    report.add('monotone', mono_gap <= tol, f'max Ê[smaller] - Ê[larger] = {mono_gap:.3e}')

    ec = E(np.full(fam.outcome_count, float(c)))
    report.add('constant_preserving', abs(ec - c) <= tol * max(1.0, abs(c)), lhs=ec, rhs=c)

    lhs, rhs = E(x + y), E(x) + E(y)
    report.add('subadditive', lhs <= rhs + tol, f'Ê[X+Y] = {lhs:.6g} <= {rhs:.6g}', lhs=lhs, rhs=rhs)

    lhs, rhs = E(lam * x), lam * E(x)
    report.add('positive_homogeneous', abs(lhs - rhs) <= tol * max(1.0, abs(rhs)), lhs=lhs, rhs=rhs)

    lower, upper = lower_expectation_exact(fam, x), E(x)
    direct = float(np.min(fam.model_expectations(x)))
    report.add('duality', abs(lower - direct) <= tol * max(1.0, abs(direct)) and lower <= upper + tol,
               f'Ě[X] = {lower:.6g}, Ê[X] = {upper:.6g}', lhs=lower, rhs=upper)

    report.extend(verify_capacity_axioms(fam, tol=tol, sampled_pairs=sampled_pairs, seed=seed))
    return report


def verify_capacity_axioms(fam: DiscreteModelFamily, tol=AXIOM_TOL, sampled_pairs=20000, seed=0):
    """Normalization, monotonicity, sub-additivity, conjugacy and finite σ-sub-additivity of V̂."""
    n = fam.outcome_count
    report = PropertyReport(subject=f'capacity axioms on {fam!r}')
    full = EventSet.everything(n)
    empty = EventSet.of_outcomes([], n)
    report.add('capacity_normalized',
               upper_probability_exact(fam, full) == 1.0 and upper_probability_exact(fam, empty) == 0.0)

    if n <= MAX_EXHAUSTIVE_OUTCOMES:
        masks, bits = _subset_masks(n)
        probs = bits @ fam.measures.T
        upper, lower = probs.max(axis=1), probs.min(axis=1)
        upper[0], upper[-1] = 0.0, 1.0
        lower[0], lower[-1] = 0.0, 1.0
        complement = masks[-1] ^ masks
        mono_ok, sub_ok = True, True
        chunk = 256
        for start in range(0, masks.size, chunk):
            a = masks[start:start + chunk, None]
            b = masks[None, :]
            va = upper[start:start + chunk, None]
            subset = (a & b) == a
            mono_ok &= bool(np.all(~subset | (va <= upper[None, :] + tol)))
            sub_ok &= bool(np.all(upper[a | b] <= va + upper[None, :] + tol))
        conj_gap = float(np.max(np.abs(lower + upper[complement] - 1.0)))
        singletons = bits @ upper[1 << np.arange(n)]
        sigma_ok = bool(np.all(upper <= singletons + tol))
        scope = f'exhaustive over {masks.size} events'
    else:
        rng = spawn_generator(seed, 0)
        a = rng.random((sampled_pairs, n)) < 0.5
        b = rng.random((sampled_pairs, n)) < 0.5
        def prob(events):
            return events.astype(float) @ fam.measures.T

        va, vb, vu = prob(a).max(axis=1), prob(b).max(axis=1), prob(a | b).max(axis=1)
        mono_ok = bool(np.all(va <= vu + tol) and np.all(vb <= vu + tol))
        sub_ok = bool(np.all(vu <= va + vb + tol))
        conj_gap = float(np.max(np.abs(prob(a).min(axis=1) + prob(~a).max(axis=1) - 1.0)))
        point = fam.measures.max(axis=0)
        sigma_ok = bool(np.all(va <= a.astype(float) @ point + tol))
        scope = f'{sampled_pairs} sampled event pairs'

    report.add('capacity_monotone', mono_ok, scope)
    report.add('capacity_subadditive', sub_ok, scope)
    report.add('capacity_conjugacy', conj_gap <= tol, f'max |v(A) + V̂(A^c) - 1| = {conj_gap:.3e}')
    report.add('sigma_subadditive', sigma_ok, 'V̂(A) <= sum of V̂ over the singletons of A')
    return report


def verify_sigma_subadditivity(fam: DiscreteModelFamily, A: EventSet, parts: List[EventSet], tol=AXIOM_TOL):
    """V̂(A) <= Σ V̂(A_k) for a disjoint decomposition {A_k} of A."""
    _check_event(fam, A)
    seen = set()
    for part in parts:
        _check_event(fam, part)
        if seen & part.indices:
            raise DomainError("decomposition parts must be disjoint")
        seen |= part.indices
    if seen != set(A.indices):
        raise DomainError("decomposition parts must cover the event exactly")
    lhs = upper_probability_exact(fam, A)
    rhs = math.fsum(upper_probability_exact(fam, part) for part in parts)
    return PropertyReport(subject=f'σ-sub-additivity of {A!r}').add(
        'sigma_subadditive', lhs <= rhs + tol, lhs=lhs, rhs=rhs)


def verify_independence_factorization(coordinate_fams: List[DiscreteModelFamily], f, tol=PROBABILITY_ATOL):
    """
    Compare Ê[∏ f_i(ξ_i)] with ∏ Ê[f_i(ξ_i)] on the product family {Q_m ⊗ ... ⊗ Q_m}.

    All coordinate families share the model index m. The left side is
    max_m ∏_i E_{Q_m^(i)}[f_i], the right side ∏_i max_m E_{Q_m^(i)}[f_i].
    """
    if not coordinate_fams or len(coordinate_fams) != len(f):
        raise DomainError("need one nonnegative function per coordinate family")
    models = {fam.model_count for fam in coordinate_fams}
    if len(models) != 1:
        raise DomainError(f"coordinate families must share one model index set, got sizes {sorted(models)}")
    per_model = []
    for fam, fi in zip(coordinate_fams, f):
        values = _values(fam, fi)
        if np.any(values < 0):
            raise DomainError("independence factorization is stated for nonnegative functions")
        per_model.append(fam.model_expectations(values))
    per_model = np.vstack(per_model)
    lhs = float(np.max(np.prod(per_model, axis=0)))
    rhs = float(np.prod(np.max(per_model, axis=1)))
    relation = 'strict' if lhs < rhs - tol else 'equality'
    return PropertyReport(subject=f'independence factorization over {len(coordinate_fams)} coordinates').add(
        'sub_factorization', lhs <= rhs + tol, relation, lhs=lhs, rhs=rhs)
