"""
Check registry, scenario execution and report emission.

Every check kind maps to a public operation of ``geometry``, ``warped``,
``spacetime`` or ``soliton``. A scenario is prepared completely (kinds and
argument references resolved) before any check runs, so scenario errors
surface before numeric work starts.
"""
from dataclasses import dataclass, field
import json
import sys
from typing import Any, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from configs.config import ENGINE
from . import __version__
from .errors import ScenarioError, WarpCheckError
from .expr import Point, as_expr, variables
from .geometry import (
    CurveState,
    coordinate_line,
    concurrent_check,
    conformal_check,
    integrate_geodesic,
    killing_check,
)
from .logger import logger
from .parser import CheckSpec, Scenario
from .reports import Report, native
from .sampling import SamplePlan
from .soliton import (
    SolitonCase,
    einstein_conformal_soliton,
    einstein_factor_check,
    homothetic_lambda_report,
    product_soliton_lift,
    soliton_check,
    th2_checks,
)
from .spacetime import (
    appendix_report,
    concurrent_check_st,
    conformal_along_curve_st_report,
    killing_decomposition_check,
    lie_spacetime_oracle_report,
    timelike_conformal_check,
)
from .warped import (
    classify_conformal_product,
    conformal_along_curve_report,
    connection_oracle_report,
    constant_length_report,
    killing_projection,
    lie_split_oracle_report,
    ricci_oracle_report,
    trajectory_residuals,
)

CHECKS = {}


def check(kind, description):
    """Register a preparer: (scenario, spec) -> callable(plan) -> Report."""
    def register(prepare):
        CHECKS[kind] = (description, prepare)
        return prepare
    return register


# --- argument resolution -------------------------------------------------------

def _target(scenario, spec, section):
    if spec.target is None:
        raise ScenarioError("check needs a target", f"{spec.location}.target")
    return scenario.lookup(section, spec.target, f"{spec.location}.target")


def _arg(scenario, spec, key, section, required=True):
    name = spec.args.get(key)
    if name is None:
        if required:
            raise ScenarioError(f"missing argument '{key}'", f"{spec.location}.args")
        return None
    return scenario.lookup(section, name, f"{spec.location}.args.{key}")


def _number(spec, key, default=None):
    value = spec.args.get(key, default)
    if value is None:
        raise ScenarioError(f"missing argument '{key}'", f"{spec.location}.args")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"argument '{key}' must be a number", f"{spec.location}.args.{key}")


def _soliton_case(scenario, spec):
    st = _target(scenario, spec, 'spacetimes')
    st_field = _arg(scenario, spec, 'field', 'spacetime_fields')
    case = SolitonCase(st, st_field, _number(spec, 'lambda', 0.0))
    scale = _number(spec, 'scale', 1.0)
    return case.scaled(scale) if scale != 1.0 else case


# --- geometry ------------------------------------------------------------------

@check('killing', 'Sampled Killing test of a chart field')
def _killing(scenario, spec):
    c = _target(scenario, spec, 'charts')
    zeta = _arg(scenario, spec, 'field', 'fields')
    return lambda plan: killing_check(c, zeta, plan)


@check('conformal', 'Conformal classification of a chart field')
def _conformal(scenario, spec):
    c = _target(scenario, spec, 'charts')
    zeta = _arg(scenario, spec, 'field', 'fields')
    return lambda plan: conformal_check(c, zeta, plan)


@check('concurrent', 'Concurrency test D_X zeta = X on a chart')
def _concurrent(scenario, spec):
    c = _target(scenario, spec, 'charts')
    zeta = _arg(scenario, spec, 'field', 'fields')
    return lambda plan: concurrent_check(c, zeta, plan)


# --- warped products -------------------------------------------------------------

@check('connection_oracle', 'Closed-form product connection against Christoffel symbols')
def _connection_oracle(scenario, spec):
    w = _target(scenario, spec, 'products')
    names = spec.args.get('fields')
    fields = None
    if names:
        fields = [
            scenario.lookup('split_fields', name, f"{spec.location}.args.fields[{i}]")
            for i, name in enumerate(names)
        ]
    return lambda plan: connection_oracle_report(w, plan, fields)


@check('ricci_oracle', 'Closed-form product Ricci tensor against the oracle')
def _ricci_oracle(scenario, spec):
    w = _target(scenario, spec, 'products')
    return lambda plan: ricci_oracle_report(w, plan)


@check('lie_split_oracle', 'Split Lie derivative of the product metric against the oracle')
def _lie_split_oracle(scenario, spec):
    w = _target(scenario, spec, 'products')
    zeta = _arg(scenario, spec, 'field', 'split_fields')
    return lambda plan: lie_split_oracle_report(w, zeta, plan)


@check('classify_conformal_product', 'Conformal / Killing classification of a split field')
def _classify(scenario, spec):
    w = _target(scenario, spec, 'products')
    zeta = _arg(scenario, spec, 'field', 'split_fields')
    return lambda plan: classify_conformal_product(w, zeta, plan)


@check('killing_projection', 'Killing projection onto the first factor')
def _killing_projection(scenario, spec):
    w = _target(scenario, spec, 'products')
    zeta = _arg(scenario, spec, 'field', 'split_fields')
    return lambda plan: killing_projection(w, zeta, plan)


@check('geodesic', 'Split geodesic residuals along an integrated or frozen curve')
def _geodesic(scenario, spec):
    w = _target(scenario, spec, 'products')
    position = spec.args.get('position')
    velocity = spec.args.get('velocity')
    if not isinstance(position, dict) or set(position) != set(w.coords):
        raise ScenarioError(f"position must give every coordinate of {w.name}", f"{spec.location}.args.position")
    if not isinstance(velocity, list) or len(velocity) != w.n:
        raise ScenarioError(f"velocity needs {w.n} components", f"{spec.location}.args.velocity")
    dt = _number(spec, 'dt', ENGINE['geodesic_dt'])
    steps = int(_number(spec, 'steps', ENGINE['geodesic_steps']))
    tol = _number(spec, 'tol', 1e-5)
    mode = spec.args.get('mode', 'integrate')
    if mode not in ('integrate', 'frozen'):
        raise ScenarioError("mode must be 'integrate' or 'frozen'", f"{spec.location}.args.mode")
    start = CurveState(w.name, Point(w.name, {k: float(v) for k, v in position.items()}), velocity)

    def run_geodesic(plan):
        curve = integrate_geodesic if mode == 'integrate' else coordinate_line
        return trajectory_residuals(w, curve(w.chart, start, dt, steps), dt, tol)

    return run_geodesic


@check('constant_length', 'g(D_X zeta, zeta) split form and constant-length conditions')
def _constant_length(scenario, spec):
    w = _target(scenario, spec, 'products')
    zeta = _arg(scenario, spec, 'field', 'split_fields')
    X = _arg(scenario, spec, 'direction', 'split_fields')
    return lambda plan: constant_length_report(w, zeta, X, plan)


@check('conformal_along_curve', 'Conformal factor read off a unit tangent on a product')
def _along_curve(scenario, spec):
    w = _target(scenario, spec, 'products')
    zeta = _arg(scenario, spec, 'field', 'split_fields')
    V = _arg(scenario, spec, 'tangent', 'split_fields')
    return lambda plan: conformal_along_curve_report(w, zeta, V, plan)


# --- space-times -------------------------------------------------------------------

@check('lie_spacetime_oracle', 'Split space-time Lie derivative against the oracle')
def _lie_spacetime(scenario, spec):
    st = _target(scenario, spec, 'spacetimes')
    zeta = _arg(scenario, spec, 'field', 'spacetime_fields')
    return lambda plan: lie_spacetime_oracle_report(st, zeta, plan)


@check('timelike_conformal', 'Is h d/dt conformal (h = a sigma)?')
def _timelike(scenario, spec):
    st = _target(scenario, spec, 'spacetimes')
    if 'h' not in spec.args:
        raise ScenarioError("missing argument 'h'", f"{spec.location}.args")
    try:
        h = as_expr(spec.args['h'], scenario.constants)
    except (WarpCheckError, TypeError) as e:
        raise ScenarioError(str(e), f"{spec.location}.args.h")
    if variables(h) - {st.time}:
        raise ScenarioError(f"h must depend on {st.time} only", f"{spec.location}.args.h")
    return lambda plan: timelike_conformal_check(st, h, plan)


@check('killing_decomposition', 'Killing test through the time and space conditions')
def _killing_decomposition(scenario, spec):
    st = _target(scenario, spec, 'spacetimes')
    zeta = _arg(scenario, spec, 'field', 'spacetime_fields')
    return lambda plan: killing_decomposition_check(st, zeta, plan)


@check('conformal_along_curve_st', 'Conformal factor read off a normalized space-time tangent')
def _along_curve_st(scenario, spec):
    st = _target(scenario, spec, 'spacetimes')
    zeta = _arg(scenario, spec, 'field', 'spacetime_fields')
    V = _arg(scenario, spec, 'tangent', 'spacetime_fields')
    normalization = _number(spec, 'normalization', 1.0)
    return lambda plan: conformal_along_curve_st_report(st, zeta, V, plan, normalization)


@check('concurrent_st', 'Concurrency test on a space-time with the sufficient-condition checklist')
def _concurrent_st(scenario, spec):
    st = _target(scenario, spec, 'spacetimes')
    zeta = _arg(scenario, spec, 'field', 'spacetime_fields')
    return lambda plan: concurrent_check_st(st, zeta, plan)


@check('appendix_families', 'Two-dimensional concurrent families, seeded instantiations')
def _appendix(scenario, spec):
    draws = int(_number(spec, 'draws', 5))
    control = bool(spec.args.get('control', True))
    return lambda plan: appendix_report(plan, draws, control)


# --- solitons ------------------------------------------------------------------------

@check('soliton', 'Ricci soliton residual from the definition')
def _soliton(scenario, spec):
    case = _soliton_case(scenario, spec)
    return lambda plan: soliton_check(case, plan)


@check('th2', 'Split soliton identities against the definition')
def _th2(scenario, spec):
    case = _soliton_case(scenario, spec)
    return lambda plan: th2_checks(case, plan)


@check('homothetic_lambda', 'Soliton constant of a homothetic field')
def _homothetic(scenario, spec):
    case = _soliton_case(scenario, spec)
    c = _number(spec, 'c')
    return lambda plan: homothetic_lambda_report(case, c, plan)


@check('einstein_factor', 'Einstein factor of the base for a conformal soliton with f constant')
def _einstein_factor(scenario, spec):
    case = _soliton_case(scenario, spec)
    rho = _number(spec, 'rho')
    return lambda plan: einstein_factor_check(case, rho, plan)


@check('einstein_conformal_soliton', 'Soliton condition over an Einstein base with f = 1')
def _einstein_conformal(scenario, spec):
    case = _soliton_case(scenario, spec)
    mu = _number(spec, 'mu')
    rho = _number(spec, 'rho')
    return lambda plan: einstein_conformal_soliton(case, mu, rho, plan)


@check('product_soliton_lift', 'Lift of a base soliton with f = sigma = 1')
def _lift(scenario, spec):
    case = _soliton_case(scenario, spec)
    return lambda plan: product_soliton_lift(case, plan)


# --- run -----------------------------------------------------------------------------

@dataclass
class CheckResult:
    label: str
    kind: str
    target: Optional[str]
    report: Report
    expected: Any = None

    @property
    def matched(self):
        if self.expected is None:
            return None
        if isinstance(self.expected, bool):
            return self.report.passed == self.expected
        return self.report.verdict == self.expected

    def to_dict(self):
        return {
            'label': self.label,
            'check': self.kind,
            'target': self.target,
            'expected': self.expected,
            'matched': self.matched,
            'verdict': self.report.verdict,
            'passed': bool(self.report.passed),
            'worst_residual': native(self.report.worst_residual),
            'report': self.report.to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            label=data['label'],
            kind=data['check'],
            target=data.get('target'),
            report=Report.from_dict(data['report']),
            expected=data.get('expected'),
        )


@dataclass
class RunReport:
    """Outcome of one scenario run. Holds no timestamps so json output is reproducible."""
    scenario: str
    seed: int
    tol: float
    version: str = __version__
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def exit_code(self):
        return 0 if all(c.matched is not False for c in self.checks) else 1

    def summary(self):
        return pd.DataFrame([
            {
                'check': c.label,
                'kind': c.kind,
                'verdict': c.report.verdict,
                'passed': c.report.passed,
                'expected': '' if c.expected is None else c.expected,
                'matched': '' if c.matched is None else c.matched,
                'worst_residual': c.report.worst_residual,
            }
            for c in self.checks
        ], columns=['check', 'kind', 'verdict', 'passed', 'expected', 'matched', 'worst_residual'])

    def to_dict(self):
        return {
            'scenario': self.scenario,
            'version': self.version,
            'seed': self.seed,
            'tol': self.tol,
            'checks': [c.to_dict() for c in self.checks],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            scenario=data['scenario'],
            seed=data['seed'],
            tol=data['tol'],
            version=data.get('version', __version__),
            checks=[CheckResult.from_dict(c) for c in data.get('checks', [])],
        )


def prepare(scenario):
    """
    Resolve every check of a scenario.

    Returns:
        list[tuple[CheckSpec, callable]]

    Raises:
        ScenarioError: Unknown kind or unresolved argument
    """
    prepared = []
    for spec in scenario.checks:
        if spec.kind not in CHECKS:
            raise ScenarioError(f"unknown check kind '{spec.kind}'", f"{spec.location}.kind")
        _, preparer = CHECKS[spec.kind]
        prepared.append((spec, preparer(scenario, spec)))
    return prepared


def _check_plan(scenario, spec, seed, tol, samples):
    sampling = spec.sampling or {}
    box = {name: tuple(map(float, interval)) for name, interval in (sampling.get('box') or {}).items()}
    plan = scenario.plan.with_overrides(
        count=sampling.get('count'), seed=sampling.get('seed'), tol=sampling.get('tol'), box=box,
    )
    return plan.with_overrides(count=samples, seed=seed, tol=tol)


def run(scenario: Scenario, seed=None, tol=None, samples=None):
    """
    Execute every check of a scenario in declaration order.

    Numeric and engine errors inside a check become a failed entry with
    verdict 'error'; they never abort the run.

    Args:
        scenario (Scenario): A loaded scenario
        seed (int, optional): Overrides every sampling seed
        tol (float, optional): Overrides every tolerance
        samples (int, optional): Overrides every sample count

    Returns:
        RunReport

    Raises:
        ScenarioError: Unknown kind or unresolved argument
        SamplingError: An override leaves a sampling plan invalid
    """
    prepared = prepare(scenario)
    base_plan = scenario.plan.with_overrides(count=samples, seed=seed, tol=tol)
    plans = [_check_plan(scenario, spec, seed, tol, samples) for spec, _ in prepared]
    report = RunReport(scenario=scenario.name, seed=base_plan.seed, tol=base_plan.tol)
    logger.info(f"Running {len(prepared)} checks from {scenario.name} (seed {base_plan.seed}, tol {base_plan.tol:g})")
    progress = tqdm(list(zip(prepared, plans)), desc=scenario.name, disable=not ENGINE['progress'], file=sys.stderr)
    for (spec, execute), plan in progress:
        try:
            outcome = execute(plan)
        except WarpCheckError as e:
            logger.error(f"Check {spec.title} failed: {e}", exc_info=True)
            outcome = _error_report(spec, e)
        except Exception as e:
            logger.error(f"Unexpected error in check {spec.title}: {e}", exc_info=True)
            outcome = _error_report(spec, e)
        result = CheckResult(spec.title, spec.kind, spec.target, outcome, spec.expect)
        if result.matched is False:
            logger.warning(f"{spec.title}: expected {spec.expect!r}, got {outcome.verdict!r}")
        else:
            logger.info(f"{spec.title}: {outcome.verdict}")
        report.checks.append(result)
    return report


def _error_report(spec, error):
    report = Report(operation=spec.kind, verdict='error', passed=False, worst_residual=float('inf'))
    report.note(f"{type(error).__name__}: {error}")
    return report


def appendix_suite():
    """The built-in two-dimensional concurrent-family scenario."""
    return Scenario(
        name='appendix_a',
        plan=SamplePlan(),
        checks=[CheckSpec(
            kind='appendix_families',
            args={'draws': 5, 'control': True},
            expect=True,
            label='appendix families',
            location='<built-in>: checks[0]',
        )],
    )


# --- emission --------------------------------------------------------------------------

def emit(report: RunReport, fmt='text'):
    """
    Serialize a run report.

    Args:
        report (RunReport): The run
        fmt (str): 'json' (sorted keys, stable field names) or 'text'

    Returns:
        bytes
    """
    if fmt == 'json':
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + '\n').encode('utf-8')
    if fmt != 'text':
        raise ValueError(f"unknown format: {fmt}")
    lines = [
        f"scenario: {report.scenario}",
        f"engine:   warpcheck {report.version}",
        f"seed:     {report.seed}",
        f"tol:      {report.tol:g}",
        '',
    ]
    if not report.checks:
        lines.append('no checks')
    else:
        with pd.option_context('display.max_colwidth', 60, 'display.width', 200):
            lines.append(report.summary().to_string(index=False))
    for c in report.checks:
        details = []
        if c.report.derived:
            details.append('  derived: ' + ', '.join(f"{k}={_short(v)}" for k, v in c.report.derived.items()))
        if c.report.witness:
            details.append('  witness: ' + ', '.join(f"{k}={_short(v)}" for k, v in c.report.witness.items()))
        details.extend(f"  note: {note}" for note in c.report.notes)
        if c.kind == 'appendix_families' and not c.report.table.empty:
            with pd.option_context('display.width', 200):
                details.append(c.report.table.to_string(index=False))
        if details:
            lines.append('')
            lines.append(f"[{c.label}]")
            lines.extend(details)
    lines.append('')
    passed = sum(1 for c in report.checks if c.report.passed)
    mismatched = sum(1 for c in report.checks if c.matched is False)
    lines.append(f"{passed}/{len(report.checks)} checks passed, {mismatched} expectation mismatches")
    return ('\n'.join(lines) + '\n').encode('utf-8')


def _short(value):
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    return str(value)


def list_checks():
    return pd.DataFrame(
        [{'kind': kind, 'description': description} for kind, (description, _) in CHECKS.items()]
    )
