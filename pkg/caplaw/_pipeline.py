import copy
import logging
import os
import warnings

import numpy as np
import pandas as pd

from ._errors import ConjugateTruncationWarning, DomainError
from ._expectation import (DiscreteModelFamily, DiscreteRandomVariable, GaussianMeanFamily, family_from_dict,
                           mean_uncertainty, verify_independence_factorization, verify_sublinear_axioms)
from ._nfunc import ConjugateQuery, NFunctionSpec, numeric_conjugate, phi_p_dual_index, scaled_conjugate
from ._report import emit_outputs, write_json
from ._schemas import RUN_MODELS
from ._slln import SllnConfig, slln_report
from ._subgauss import (LogMgfOracle, default_lambda_grid, empirical_tail_capacity, gaussian_tau_closed_form,
                        subgaussian_certificate, tail_bound)
from ._utility import _update_configuration

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_FILE = 'resolved_config.json'


def _phi_from_settings(settings):
    phi = NFunctionSpec.phi_p(settings.p)
    if settings.a == 1.0 and settings.b == 1.0:
        return phi
    return phi.scaled(settings.a, settings.b)


class Pipeline:
    _run_config_scheme = {}
    _run_default_config = {}
    _conjugate_config_scheme = {}
    _conjugate_default_config = {}
    _tau_config_scheme = {}
    _tau_default_config = {}
    _tailbound_config_scheme = {}
    _tailbound_default_config = {}
    _slln_config_scheme = {}
    _slln_default_config = {}
    _verify_config_scheme = {}
    _verify_default_config = {}

    def __init__(self):
        self._set_config()

    @classmethod
    def _set_config(cls):
        cls._run_config_scheme = {
            'seed': None,
            'output_dir': None,
            'format': None,  # 'json', 'csv' or 'both'
            'workers': None,
            'show_progress': None,
        }
        cls._run_default_config = {
            'seed': 0,
            'output_dir': 'caplaw_out',
            'format': 'json',
            'workers': 1,
            'show_progress': False,
        }

        phi_scheme = {'p': None, 'a': None, 'b': None}
        phi_default = {'p': 2.0, 'a': 1.0, 'b': 1.0}

        cls._conjugate_config_scheme = {
            'phi': dict(phi_scheme),
            'y': None,
            'tol': None,
            'x_max': None,
        }
        cls._conjugate_default_config = {
            'phi': dict(phi_default),
            'y': np.linspace(-10.0, 10.0, 201).round(12).tolist(),
            'tol': 1e-9,
            'x_max': None,
        }

        cls._tau_config_scheme = {
            'family': None,
            'values': None,  # discrete families only
            'phi': dict(phi_scheme),
            'm_bar': None,
            'm_under': None,
            'oracle': None,  # 'exact' or 'mc'
            'n_samples': None,
            'lambda_grid': {'n': None, 'lo': None, 'hi': None},
            'a_hi': None,
            'tol': None,
        }
        cls._tau_default_config = {
            'family': {'gaussian': {'means': [-0.3, 0.0, 0.3], 'sigma': 1.0}},
            'values': None,
            'phi': dict(phi_default),
            'm_bar': None,
            'm_under': None,
            'oracle': 'exact',
            'n_samples': 100000,
            'lambda_grid': {'n': 61, 'lo': 1e-3, 'hi': 1e2},
            'a_hi': 4.0,
            'tol': 1e-6,
        }

        cls._tailbound_config_scheme = {
            'phi': dict(phi_scheme),
            'a': None,
            'epsilon': None,
            # When present, sampled capacities are reported next to the bound
            'empirical': None,
        }
        cls._tailbound_default_config = {
            'phi': dict(phi_default),
            'a': 1.0,
            'epsilon': [1.0, 2.0, 3.0],
            'empirical': None,
        }

        cls._slln_config_scheme = {
            'family': None,
            'n_steps': None,
            'n_paths': None,
            'epsilon': None,
            'n_min': None,
            'checkpoints': None,
            'p': None,
            'alpha': None,
            'c': None,  # defaults to sigma
            'max_draws': None,  # defaults to CAPLAW_MAX_DRAWS or 10**9
        }
        cls._slln_default_config = {
            'family': {'gaussian': {'means': [-0.3, 0.0, 0.3], 'sigma': 1.0}},
            'n_steps': 10000,
            'n_paths': 1000,
            'epsilon': 0.1,
            'n_min': 5000,
            'checkpoints': None,
            'p': 2.0,
            'alpha': 0.5,
            'c': None,
            'max_draws': None,
        }

        cls._verify_config_scheme = {
            'family': None,
            'X': None,
            'Y': None,
            'lam': None,
            'c': None,
            'sampled_pairs': None,
            'independence': None,
        }
        cls._verify_default_config = {
            'family': {'discrete': {'outcomes': 2, 'measures': [[0.5, 0.5], [0.8, 0.2]]}},
            'X': [1.0, 0.0],
            'Y': [0.0, 1.0],
            'lam': 2.0,
            'c': 7.0,
            'sampled_pairs': 20000,
            'independence': None,
        }

    @classmethod
    def config_helper(cls):
        cls._set_config()
        return {command: getattr(cls, f'_{command}_default_config') for command in RUN_MODELS}

    @classmethod
    def resolve_config(cls, command, config=None):
        """
        Merge ``config`` over the command defaults and validate the result.

        Values in ``config`` win whenever they are not None; nested sections
        are merged key by key.
        """
        if command not in RUN_MODELS:
            raise DomainError(f"Invalid command '{command}'. Choose from {sorted(RUN_MODELS)}.")
        cls._set_config()
        scheme = {**copy.deepcopy(cls._run_config_scheme),
                  **copy.deepcopy(getattr(cls, f'_{command}_config_scheme'))}
        config = config or {}
        for key, section in scheme.items():
            if isinstance(section, dict) and config.get(key) is not None and not isinstance(config[key], dict):
                raise DomainError(f"Invalid '{key}' section. Expected an object, got {config[key]!r}.")
        defaults = {**cls._run_default_config, **getattr(cls, f'_{command}_default_config')}
        resolved = _update_configuration(scheme, defaults, config)
        return RUN_MODELS[command](command=command, **resolved)

    @classmethod
    def run(cls, command, config=None):
        """
        Resolve the configuration of ``command``, run it and write its outputs.

        Returns:
            dict with the validated run config, the report payload and the
            written file paths.
        """
        run = cls.resolve_config(command, config)
        write_json(run.model_dump(), os.path.join(run.output_dir, RESOLVED_CONFIG_FILE))
        logger.info("Running '%s' with seed %d into %s", command, run.seed, run.output_dir)
        payload, tables, checks = getattr(cls, f'_run_{command}')(run)
        written = emit_outputs(run.output_dir, command, payload, tables, run.format)
        if checks is not None:
            checks.require()
        return {'config': run, 'payload': payload, 'files': written}

    @classmethod
    def _run_conjugate(cls, run):
        settings = run.phi
        phi_p_dual_index(settings.p)
        base = NFunctionSpec.phi_p(settings.p)
        phi = _phi_from_settings(settings)
        rows = []
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always', ConjugateTruncationWarning)
            for y in run.y:
                analytic = scaled_conjugate(settings.a, settings.b, base, y, tol=run.tol)
                result = numeric_conjugate(phi, ConjugateQuery(y=y, x_max=run.x_max, tol=run.tol))
                rows.append({'y': y, 'analytic': analytic, 'numeric': result.value,
                             'abs_diff': abs(analytic - result.value), 'argmax': result.argmax,
                             'truncated': result.truncated})
        if caught:
            logger.warning("%d conjugate evaluations hit the search boundary", len(caught))
        table = pd.DataFrame(rows, columns=['y', 'analytic', 'numeric', 'abs_diff', 'argmax', 'truncated'])
        payload = {'phi': phi.describe(), 'tol': run.tol, 'max_abs_diff': float(table['abs_diff'].max()),
                   'rows': table}
        return payload, {'conjugate': table}, None

    @classmethod
    def _tau_oracle(cls, run, fam):
        if isinstance(fam, GaussianMeanFamily):
            if run.oracle == 'mc':
                return LogMgfOracle.mc_estimated(fam, run.n_samples, run.seed, lambda_max=run.lambda_grid.hi)
            return LogMgfOracle.exact_gaussian(fam)
        if run.values is None:
            raise DomainError("tau on a discrete family needs 'values' of the random variable")
        values = DiscreteRandomVariable(run.values)
        if run.oracle == 'mc':
            return LogMgfOracle.mc_estimated(fam, run.n_samples, run.seed, values=values,
                                             lambda_max=run.lambda_grid.hi)
        return LogMgfOracle.discrete_exact(fam, values)

    @classmethod
    def _run_tau(cls, run):
        fam = family_from_dict(run.family)
        phi = _phi_from_settings(run.phi)
        if isinstance(fam, GaussianMeanFamily):
            band = (fam.m_under, fam.m_bar)
        elif run.values is None:
            raise DomainError("tau on a discrete family needs 'values' of the random variable")
        else:
            band = tuple(mean_uncertainty(fam, DiscreteRandomVariable(run.values)))[:2]
        m_under = band[0] if run.m_under is None else run.m_under
        m_bar = band[1] if run.m_bar is None else run.m_bar
        grid = default_lambda_grid(run.lambda_grid.n, run.lambda_grid.lo, run.lambda_grid.hi)
        closed_form = None
        if isinstance(fam, GaussianMeanFamily) and phi.is_phi_p and phi.p >= 2 \
                and (m_bar, m_under) == (fam.m_bar, fam.m_under):
            closed_form = gaussian_tau_closed_form(fam, phi)
        certificate = subgaussian_certificate(cls._tau_oracle(run, fam), phi, m_bar, m_under, grid,
                                              a_hi=run.a_hi, tol=run.tol, closed_form_a=closed_form)
        logger.info("tau_phi = %.9g (%s)", certificate.a, certificate.provenance)
        table = pd.DataFrame([{'a': certificate.a, 'm_bar': m_bar, 'm_under': m_under,
                               'worst_margin': certificate.worst_margin, 'worst_lambda': certificate.worst_lambda,
                               'provenance': certificate.provenance, 'degenerate': certificate.degenerate}])
        return certificate.model_dump(), {'tau': table}, None

    @classmethod
    def _run_tailbound(cls, run):
        phi = _phi_from_settings(run.phi)
        empirical = run.empirical
        fam = family_from_dict(empirical.family) if empirical is not None else None
        if fam is not None and not isinstance(fam, GaussianMeanFamily):
            raise DomainError("empirical tail capacities are sampled from a Gaussian mean family")
        rows = []
        for eps in run.epsilon:
            bound = tail_bound(phi, run.a, eps)
            row = bound.model_dump()
            if fam is not None:
                m_bar = fam.m_bar if empirical.m_bar is None else empirical.m_bar
                m_under = fam.m_under if empirical.m_under is None else empirical.m_under
                estimate = empirical_tail_capacity(fam, m_bar, m_under, eps, empirical.n_samples, run.seed,
                                                   n_workers=run.workers)
                row.update(empirical=estimate.estimate, empirical_std_error=estimate.std_error,
                           dominated=estimate.estimate <= bound.bound + 3.0 * estimate.std_error)
            rows.append(row)
        table = pd.DataFrame(rows)
        if table['truncated'].any():
            logger.warning("%d tail bounds rest on a truncated conjugate and are not certified",
                           int(table['truncated'].sum()))
        payload = {'phi': phi.describe(), 'a': run.a, 'rows': table}
        if fam is not None:
            payload['family'] = fam.to_dict()
        return payload, {'tailbound': table}, None

    @classmethod
    def _run_slln(cls, run):
        config = SllnConfig(family=run.family, n_steps=run.n_steps, n_paths=run.n_paths, epsilon=run.epsilon,
                            n_min=run.n_min, master_seed=run.seed, checkpoints=run.checkpoints,
                            **({} if run.max_draws is None else {'max_draws': run.max_draws}))
        report = slln_report(config, p=run.p, alpha=run.alpha, c=run.c, n_workers=run.workers,
                             show_progress=run.show_progress)
        logger.info("upper deviation %.6g, lower sandwich %.6g",
                    report.estimate.upper_deviation, report.estimate.lower_sandwich)
        return report.model_dump(), report.tables(), report.checks

    @classmethod
    def _run_verify(cls, run):
        fam = family_from_dict(run.family)
        if not isinstance(fam, DiscreteModelFamily):
            raise DomainError("axiom verification runs on a discrete family")
        report = verify_sublinear_axioms(fam, DiscreteRandomVariable(run.X), DiscreteRandomVariable(run.Y),
                                         run.lam, run.c, sampled_pairs=run.sampled_pairs, seed=run.seed)
        band = mean_uncertainty(fam, DiscreteRandomVariable(run.X))
        payload = {'family': fam.to_dict(), 'axioms': report,
                   'mean_band': {'lower': band.lower, 'upper': band.upper, 'uncertain': band.uncertain}}
        if run.independence is not None:
            coordinates = [family_from_dict(doc) for doc in run.independence.coordinates]
            if not all(isinstance(c, DiscreteModelFamily) for c in coordinates):
                raise DomainError("independence coordinates must be discrete families")
            functions = [DiscreteRandomVariable(f) for f in run.independence.functions]
            independence = verify_independence_factorization(coordinates, functions)
            payload['independence'] = independence
            report = report.model_copy(deep=True).extend(independence, prefix='independence.')
        for check in report.failures():
            logger.error("Property '%s' failed: %s", check.name, check.detail)
        return payload, {'verify': report.to_frame()}, report
