"""
Quadratic N-functions and their convex conjugates.

An N-function is even, convex, vanishes at zero and grows superlinearly; a
quadratic N-function additionally equals ``c * x**2`` on ``|x| <= x0``. The
standard family is ``phi_p``: ``x**2 / 2`` on ``|x| <= 1`` and
``|x|**p / p - 1/p + 1/2`` beyond, whose conjugate is ``phi_q`` with
``1/p + 1/q = 1``.
"""

import logging
import math
from typing import NamedTuple, Optional
import warnings

import numpy as np
from pydantic import BaseModel
from scipy.optimize import minimize_scalar

from ._errors import ConjugateTruncationWarning, DomainError
from ._report import PropertyReport
from ._utility import check_finite, check_positive

logger = logging.getLogger(__name__)

DEFAULT_CONJUGATE_TOL = 1e-9
DEFAULT_MAX_ITER = 200


def _check_index(p):
    if p is None or not np.isfinite(p) or p < 1:
        raise DomainError(f"phi_p requires p >= 1, got p={p!r}")


def _as_output(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def phi_p_eval(p, x):
    """Evaluate phi_p at ``x`` (scalar or array); continuous at |x| = 1."""
    _check_index(p)
    check_finite('x', x)
    ax = np.abs(np.asarray(x, dtype=float))
    with np.errstate(over='ignore'):
        outer = ax ** p / p - 1.0 / p + 0.5
    return _as_output(np.where(ax <= 1.0, 0.5 * ax ** 2, outer))


def phi_p_derivative(p, x):
    """phi_p'(x): ``x`` inside the unit interval, ``sign(x) |x|**(p-1)`` beyond."""
    _check_index(p)
    check_finite('x', x)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    return _as_output(np.where(ax <= 1.0, x, np.sign(x) * ax ** (p - 1.0)))


def phi_p_dual_index(p):
    """Return q with 1/p + 1/q = 1."""
    if p is None or not np.isfinite(p) or p <= 1:
        raise DomainError(f"dual index undefined for p={p!r}; requires p > 1")
    return p / (p - 1.0)


class NFunctionSpec:
    """
    Descriptor of a quadratic N-function.

    Use :meth:`phi_p` for the standard family or :meth:`custom` for any
    evaluable even convex function. ``c`` and ``x0`` are the declared
    quadratic constants (``f(x) = c x^2`` on ``|x| <= x0``).
    """

    def __init__(self, kind, p=None, func=None, name=None, c=0.5, x0=1.0, base=None, scale=None):
        if kind not in ('phi_p', 'custom'):
            raise DomainError(f"Invalid N-function kind '{kind}'. Choose 'phi_p' or 'custom'.")
        if kind == 'phi_p':
            _check_index(p)
        elif not callable(func):
            raise DomainError("A custom N-function needs a callable 'func'.")
        self.kind = kind
        self.p = None if p is None else float(p)
        self.func = func
        self.name = name or (f'phi_{self.p:g}' if kind == 'phi_p' else 'custom')
        self.c = c
        self.x0 = x0
        # Set when this function is a*base(b*x)
        self._base = base
        self._scale = scale

    @classmethod
    def phi_p(cls, p):
        return cls('phi_p', p=p)

    @classmethod
    def custom(cls, func, name='custom', c=None, x0=None):
        return cls('custom', func=func, name=name, c=c, x0=x0)

    @property
    def is_phi_p(self):
        return self.kind == 'phi_p'

    @property
    def has_analytic_conjugate(self):
        return self.is_phi_p and self.p > 1

    def __call__(self, x):
        if self.is_phi_p:
            return phi_p_eval(self.p, x)
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return float(self.func(float(arr)))
        try:
            out = np.asarray(self.func(arr), dtype=float)
            if out.shape == arr.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(self.func(float(v))) for v in arr.ravel()]).reshape(arr.shape)

    def scaled(self, a, b):
        """The N-function psi(x) = a * f(b * x)."""
        check_positive('a', a)
        check_finite('b', b)
        if b == 0:
            raise DomainError("scaling requires b != 0")
        c = None if self.c is None else self.c * a * b * b
        x0 = None if self.x0 is None else self.x0 / abs(b)
        return NFunctionSpec('custom', func=lambda x: a * self(b * np.asarray(x, dtype=float)),
                             name=f'{a:g}*{self.name}({b:g}x)', c=c, x0=x0,
                             base=self, scale=(float(a), float(b)))

    def default_x_max(self, y):
        """Search-domain truncation that keeps the conjugate maximizer interior."""
        y = abs(float(y))
        if self._base is not None:
            a, b = self._scale
            return self._base.default_x_max(y / (a * b)) / abs(b)
        if self.has_analytic_conjugate:
            return max(10.0, 10.0 * y ** (1.0 / (self.p - 1.0)))
        return max(10.0, 10.0 * y)

    def conjugate(self, y, tol=DEFAULT_CONJUGATE_TOL, x_max=None):
        """f*(y): analytic for phi_p with p > 1, numeric otherwise."""
        if self.has_analytic_conjugate:
            return analytic_conjugate(self, y).value
        return numeric_conjugate(self, ConjugateQuery(y=y, x_max=x_max, tol=tol)).value

    def describe(self):
        if self.is_phi_p:
            return {'kind': 'phi_p', 'p': self.p}
        return {'kind': 'custom', 'name': self.name, 'c': self.c, 'x0': self.x0}

    def __repr__(self):
        return f'NFunctionSpec({self.name})'


class ConjugateQuery(BaseModel):
    """Argument ``y`` of sup_x {x y - f(x)} with its search truncation and tolerance."""
    y: float
    x_max: Optional[float] = None
    tol: float = DEFAULT_CONJUGATE_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def check(self):
        check_finite('y', self.y)
        if self.x_max is not None:
            check_finite('x_max', self.x_max)
            if self.x_max <= 0:
                raise DomainError(f"x_max must be > 0, got {self.x_max}")
        if not self.tol > 0:
            raise DomainError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")
        return self


class ConjugateResult(NamedTuple):
    value: float
    argmax: float
    truncated: bool = False
    x_max: float = math.inf


def analytic_conjugate(f: NFunctionSpec, y):
    """phi_p*(y) = phi_q(y) together with the maximizer of x|y| - phi_p(x)."""
    if not f.has_analytic_conjugate:
        raise DomainError(f"No analytic conjugate for {f!r}; use numeric_conjugate")
    check_finite('y', y)
    q = phi_p_dual_index(f.p)
    ay = abs(float(y))
    argmax = ay if ay <= 1.0 else ay ** (1.0 / (f.p - 1.0))
    return ConjugateResult(phi_p_eval(q, ay), argmax)


def numeric_conjugate(f: NFunctionSpec, query: ConjugateQuery):
    """
    Numerical convex conjugate sup over x in [0, x_max] of x|y| - f(x).

    The objective is concave for convex f, so a bounded golden-section/Brent
    search locates the maximizer. The endpoints 0 and x_max are compared as
    well, which makes the result nonnegative for any N-function. When the
    maximizer sits at x_max the true supremum may be larger: the result is
    flagged ``truncated`` and a ConjugateTruncationWarning is issued.
    """
    query.check()
    y = abs(query.y)
    x_max = float(query.x_max) if query.x_max is not None else f.default_x_max(y)

    def negated_objective(x):
        return float(f(x)) - x * y

    res = minimize_scalar(negated_objective, bounds=(0.0, x_max), method='bounded',
                          options={'xatol': query.tol, 'maxiter': query.max_iter})
    if not res.success:
        logger.warning("Conjugate search for %r at y=%g stopped early: %s", f, y, res.message)

    candidates = [(0.0, -negated_objective(0.0)),
                  (float(res.x), -float(res.fun)),
                  (x_max, -negated_objective(x_max))]
    argmax, value = max(candidates, key=lambda item: item[1])

    truncated = x_max - argmax <= max(query.tol, 1e-6 * x_max)
    if truncated:
        message = (f"conjugate of {f.name} at y={query.y:g} attained at the search boundary "
                   f"x_max={x_max:g}; the supremum may be larger")
        logger.warning(message)
        warnings.warn(message, ConjugateTruncationWarning, stacklevel=2)
    return ConjugateResult(float(value), float(argmax), truncated, x_max)


def scaled_conjugate(a, b, f: NFunctionSpec, y, tol=DEFAULT_CONJUGATE_TOL):
    """psi*(y) = a f*(y / (a b)) for psi(x) = a f(b x)."""
    check_finite('a', a)
    check_finite('b', b)
    if a <= 0:
        raise DomainError(f"scaling requires a > 0, got a={a}")
    if b == 0:
        raise DomainError("scaling requires b != 0")
    check_finite('y', y)
    return a * f.conjugate(y / (a * b), tol=tol)


def verify_quadratic_nfunction(f: NFunctionSpec, grid, c_expect, x0_expect, tol=1e-9):
    """
    Check the N-function and quadratic-N-function properties of ``f`` on a grid.

    Properties: evenness, f(0) = 0, monotonicity on the positive grid points,
    midpoint convexity over all grid pairs, f(x) = c x^2 on |x| <= x0,
    f(x)/x -> 0 at zero (f(x)/x <= c x at the smallest positive grid point,
    which must lie in the quadratic part) and
    f(x)/x -> infinity (f(x)/x increasing and above 1 at the largest).
    """
    grid = np.unique(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise DomainError("verification grid must be nonempty")
    check_finite('grid', grid)
    report = PropertyReport(subject=f'N-function {f.name}')

    values = np.asarray(f(grid), dtype=float)
    mirrored = np.asarray(f(-grid), dtype=float)
    atol = tol * np.maximum(1.0, np.abs(values))
    even_gap = float(np.max(np.abs(values - mirrored)))
    report.add('even', np.all(np.abs(values - mirrored) <= atol), f'max |f(x) - f(-x)| = {even_gap:.3e}')

    f0 = float(f(0.0))
    report.add('vanishes_at_zero', abs(f0) <= tol, f'f(0) = {f0:.3e}', lhs=f0, rhs=0.0)

    positive = grid[grid > 0]
    pos_values = np.asarray(f(positive), dtype=float)
    if positive.size >= 2:
        steps = np.diff(pos_values)
        report.add('monotone', np.all(steps >= -tol), f'min increment = {float(np.min(steps)):.3e}')
    else:
        report.add('monotone', True, 'fewer than two positive grid points')

    left, right = np.meshgrid(grid, grid, indexing='ij')
    mid_values = np.asarray(f(0.5 * (left + right)), dtype=float)
    chord = 0.5 * (values[:, None] + values[None, :])
    convex_gap = float(np.max(mid_values - chord))
    report.add('midpoint_convex', np.all(mid_values <= chord + tol * np.maximum(1.0, np.abs(chord))),
               f'max f(mid) - chord = {convex_gap:.3e}')

    inner = grid[np.abs(grid) <= x0_expect]
    if inner.size:
        quad_gap = np.abs(np.asarray(f(inner), dtype=float) - c_expect * inner ** 2)
        report.add('quadratic_near_zero', np.all(quad_gap <= tol * np.maximum(1.0, c_expect * inner ** 2)),
                   f'max |f(x) - c x^2| on |x| <= {x0_expect:g} is {float(np.max(quad_gap)):.3e}')
    else:
        report.add('quadratic_near_zero', False, f'no grid points with |x| <= {x0_expect:g}')

    if positive.size:
        ratios = pos_values / positive
        x_lo = positive[0]
        # Inside the quadratic part f(x)/x = c x, which vanishes linearly
        quad_lo = c_expect * x_lo ** 2
        ceiling = (quad_lo + tol * max(1.0, quad_lo)) / x_lo
        report.add('ratio_vanishes_at_zero', x_lo <= x0_expect and ratios[0] <= ceiling,
                   f'f(x)/x = {ratios[0]:.3e} at x = {x_lo:g}, c x = {c_expect * x_lo:.3e}',
                   lhs=ratios[0], rhs=ceiling)
        increasing = positive.size < 2 or bool(np.all(np.diff(ratios) >= -tol))
        report.add('ratio_unbounded_at_infinity', increasing and ratios[-1] > 1.0,
                   f'f(x)/x = {ratios[-1]:.3e} at x = {positive[-1]:g}', lhs=ratios[-1], rhs=1.0)
    else:
        report.add('ratio_vanishes_at_zero', False, 'no positive grid points')
        report.add('ratio_unbounded_at_infinity', False, 'no positive grid points')
    return report


def verify_conjugate_is_quadratic(f: NFunctionSpec, grid, c_expect=0.5, x0_expect=1.0, tol=1e-7):
    """Run :func:`verify_quadratic_nfunction` on the numerical conjugate of ``f``."""
    def conjugate(x):
        return np.array([numeric_conjugate(f, ConjugateQuery(y=float(v))).value
                         for v in np.atleast_1d(np.asarray(x, dtype=float)).ravel()]
                        ).reshape(np.shape(x))

    star = NFunctionSpec.custom(conjugate, name=f'{f.name}*', c=c_expect, x0=x0_expect)
    return verify_quadratic_nfunction(star, grid, c_expect, x0_expect, tol=tol)
