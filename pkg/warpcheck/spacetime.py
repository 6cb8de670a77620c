"""
Doubly warped space-times  I x M  with metric -f^2 dt^2 + σ^2 g, f on M and
σ on I. A space-time is the doubly warped product with M1 = (I, -dt^2),
f1 = σ and f2 = f, so every oracle in ``geometry`` applies to it unchanged.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from configs.config import TOLERANCE
from .errors import DimensionMismatchError, NotUnitError
from .expr import as_expr, diff, evaluate, render, substitute, variables
from .geometry import (
    Chart,
    VectorField,
    conformal_factor_estimate,
    lie_bracket,
    lie_derivative_metric,
    metric_at,
    nabla_field,
)
from .logger import logger
from .reports import ClassificationReport, VerificationReport, sample_table, witness_of
from .sampling import map_samples, probe_vectors
from .warped import DoublyWarpedProduct, SplitVectorField


class DoublyWarpedSpacetime:
    """
    Args:
        base (Chart): Riemannian factor (M, g) of dimension n
        f: Warping function on M, scales -dt^2
        sigma: Warping function on I, scales g
        t_interval (tuple): The interval I, also the sampling range for t
        time (str): Name of the time coordinate
    """

    def __init__(self, base, f, sigma, t_interval=(0.5, 2.0), time='t', name=None, constants=None):
        self.base = base
        self.f = as_expr(f, constants)
        self.sigma = as_expr(sigma, constants)
        self.t_interval = tuple(float(v) for v in t_interval)
        self.time = time
        self.name = name or f"I_x_{base.name}"
        if variables(self.sigma) - {time}:
            raise DimensionMismatchError(f"sigma must depend on {time} only, got {render(self.sigma)}")

    @cached_property
    def time_chart(self):
        return Chart(f"{self.name}.I", [self.time], [[-1.0]], signature=[-1])

    @cached_property
    def product(self):
        return self.as_product()

    def as_product(self):
        return DoublyWarpedProduct(self.time_chart, self.base, f1=self.sigma, f2=self.f, name=self.name)

    @property
    def chart(self):
        return self.product.chart

    @property
    def n(self):
        return self.base.dim

    @property
    def coords(self):
        return (self.time,) + self.base.coords

    @property
    def is_generalized_robertson_walker(self):
        return not variables(self.f)

    @property
    def is_standard_static(self):
        return not variables(self.sigma)

    def sample(self, plan):
        if self.time not in plan.box:
            plan = plan.with_overrides(box={self.time: self.t_interval})
        return self.product.sample(plan)

    def sigma_terms(self, p):
        """σ, σ̇, σ̈ at p."""
        first = diff(self.sigma, self.time)
        return evaluate(self.sigma, p), evaluate(first, p), evaluate(diff(first, self.time), p)

    def __repr__(self):
        return f"DoublyWarpedSpacetime({self.base.name}, f={self.f}, sigma={self.sigma})"


class SpacetimeField:
    """ζ̄ = h ∂_t + ζ with h a function of t and ζ a field on M."""

    def __init__(self, h, spatial, constants=None):
        self.h = as_expr(h, constants)
        self.spatial = spatial

    def check(self, st):
        if variables(self.h) - {st.time}:
            raise DimensionMismatchError(f"h must depend on {st.time} only, got {render(self.h)}")
        stray = set(self.spatial.components) - set(st.base.coords)
        if stray:
            raise DimensionMismatchError(f"spatial field has components off {st.base.name}: {sorted(stray)}")

    def as_split(self, st):
        self.check(st)
        return SplitVectorField(VectorField(st.time_chart.name, {st.time: self.h}), self.spatial)

    def lift(self, st):
        return self.as_split(st).lift(st.product)

    def hdot(self, st, p):
        return evaluate(diff(self.h, st.time), p)

    def scaled(self, factor):
        return SpacetimeField(self.h * factor, self.spatial.scaled(factor))

    def __repr__(self):
        return f"SpacetimeField(h={self.h}, spatial={self.spatial!r})"


def _time_and_space(st, X, p):
    """(x, X) for X̄ = x ∂_t + X given as a SpacetimeField or a chart vector."""
    if isinstance(X, SpacetimeField):
        return evaluate(X.h, p), X.spatial.at(st.base.coords, p)
    vector = np.asarray(X, dtype=float)
    return float(vector[0]), vector[1:]


class _SpacetimeData:
    def __init__(self, st, field, p):
        self.f = evaluate(st.f, p)
        self.df = np.array([evaluate(diff(st.f, x), p) for x in st.base.coords])
        self.sigma, self.sigma_dot, self.sigma_ddot = st.sigma_terms(p)
        self.h = evaluate(field.h, p)
        self.hdot = field.hdot(st, p)
        self.zeta = field.spatial.at(st.base.coords, p)
        self.zeta_log_f = float(self.zeta @ self.df) / self.f
        self.g = metric_at(st.base, p)
        self.L = lie_derivative_metric(st.base, field.spatial, p)


# --- split Lie derivative ------------------------------------------------------

def lie_spacetime_matrix(st, field, p):
    """Block form of L_ζ̄ ḡ: -2 f^2 [ḣ + ζ(ln f)] on dt^2, σ^2 L_ζ g + 2 h σ σ̇ g on M."""
    d = _SpacetimeData(st, field, p)
    out = np.zeros((st.n + 1, st.n + 1))
    out[0, 0] = -2 * d.f ** 2 * (d.hdot + d.zeta_log_f)
    out[1:, 1:] = d.sigma ** 2 * d.L + 2 * d.h * d.sigma * d.sigma_dot * d.g
    return out


def lie_spacetime(st, field, X, Y, p):
    """
    (L_ζ̄ ḡ)(X̄, Ȳ) = -2xy f^2 [ḣ + ζ(ln f)] + σ^2 (L_ζ g)(X, Y) + 2 h σ σ̇ g(X, Y)

    for X̄ = x ∂_t + X and Ȳ = y ∂_t + Y.
    """
    x, X_space = _time_and_space(st, X, p)
    y, Y_space = _time_and_space(st, Y, p)
    vx = np.concatenate([[x], X_space])
    vy = np.concatenate([[y], Y_space])
    return float(vx @ lie_spacetime_matrix(st, field, p) @ vy)


def lie_spacetime_oracle_report(st, field, plan):
    """Split Lie derivative against the direct one on the Lorentzian chart."""
    chart = st.chart
    lifted = field.lift(st)
    probes = probe_vectors(st.n + 1, plan.seed)

    def measure(p):
        closed = lie_spacetime_matrix(st, field, p)
        oracle = lie_derivative_metric(chart, lifted, p)
        gap = np.einsum('pi,ij,qj->pq', probes, closed - oracle, probes)
        return float(np.max(np.abs(gap))), max(float(np.max(np.abs(closed))), float(np.max(np.abs(oracle))))

    points = st.sample(plan)
    results = map_samples(measure, points)
    residuals = [r for r, _ in results]
    bounds = [plan.bound(s) for _, s in results]
    passed = all(r <= b for r, b in zip(residuals, bounds))
    logger.info(f"lie_spacetime_oracle on {st.name}: worst residual {max(residuals):.3e}")
    return VerificationReport(
        operation='lie_spacetime_oracle',
        verdict='agree' if passed else 'disagree',
        passed=passed,
        worst_residual=max(residuals),
        witness=witness_of(points, residuals),
        table=sample_table(points, st.coords, residual=residuals, bound=bounds),
    )


# --- classification ------------------------------------------------------------

def timelike_conformal_check(st, h, plan):
    """
    Is h ∂_t conformal? Fits a = h / σ over the samples: conformal iff a is
    constant and non-negative, with factor 2ḣ. Otherwise the time block
    demands 2ḣ while the space block demands 2hσ̇/σ, and both are reported.
    The direct trace estimate on the space-time chart must match 2ḣ for the
    check to pass.
    """
    h = as_expr(h)
    field = SpacetimeField(h, VectorField(st.base.name))
    lifted = field.lift(st)
    chart = st.chart

    def measure(p):
        sigma, sigma_dot, _ = st.sigma_terms(p)
        h_value = evaluate(h, p)
        hdot = field.hdot(st, p)
        estimate = conformal_factor_estimate(chart, lifted, p, plan.tol)
        return {
            'a': h_value / sigma,
            'time_demand': 2 * hdot,
            'space_demand': 2 * h_value * sigma_dot / sigma,
            'estimate': estimate.factor,
            'estimate_residual': estimate.residual,
            'direct_conformal': estimate.conformal,
        }

    points = st.sample(plan)
    rows = map_samples(measure, points)
    columns = {key: [row[key] for row in rows] for key in rows[0]}
    a = np.asarray(columns['a'])
    a_mean = float(a.mean())
    a_std = float(a.std())
    fitted = a_std <= plan.bound(abs(a_mean)) and a_mean >= -plan.bound(0.0)
    direct = all(columns['direct_conformal'])

    if fitted:
        residuals = [abs(t - e) for t, e in zip(columns['time_demand'], columns['estimate'])]
        measured = all(r <= plan.bound(t) for r, t in zip(residuals, columns['time_demand']))
    else:
        residuals = [abs(t - s) for t, s in zip(columns['time_demand'], columns['space_demand'])]
        measured = False
    passed = fitted and measured
    if not passed:
        verdict = 'not conformal'
    elif abs(a_mean) <= plan.bound(0.0):
        verdict = 'killing'
    else:
        verdict = 'conformal'

    report = ClassificationReport(
        operation='timelike_conformal',
        verdict=verdict,
        passed=passed,
        worst_residual=max(residuals),
        witness=witness_of(points, residuals),
        derived={
            'a': a_mean,
            'a_std': a_std,
            'rho': float(np.mean(columns['time_demand'])),
            'direct_conformal': direct,
            'fit_agrees_with_direct': fitted == direct,
            'factor_matches_hdot': measured,
        },
        table=sample_table(points, st.coords, **columns, residual=residuals),
    )
    if fitted and not measured:
        report.note('measured conformal factor differs from 2*hdot')
    if fitted != direct:
        report.note('h/sigma fit and direct Lie-derivative measurement disagree')
        logger.warning(f"timelike_conformal on {st.name}: fit {fitted}, direct {direct}")
    return report


def killing_decomposition_check(st, field, plan):
    """
    ζ̄ Killing  ⇔  ḣ = -ζ(ln f)  and  L_ζ g = -(2hσ̇/σ) g.

    Three residual tracks per sample: the time condition, the factor-level
    conformal condition and the direct Lie derivative on the space-time.
    """
    chart = st.chart
    lifted = field.lift(st)

    def measure(p):
        d = _SpacetimeData(st, field, p)
        target = -2 * d.h * d.sigma_dot / d.sigma
        L_bar = lie_derivative_metric(chart, lifted, p)
        return {
            'time_residual': abs(d.hdot + d.zeta_log_f),
            'time_scale': max(abs(d.hdot), abs(d.zeta_log_f)),
            'space_residual': float(np.max(np.abs(d.L - target * d.g))) if st.n else 0.0,
            'space_scale': max(float(np.max(np.abs(d.L))), abs(target) * float(np.max(np.abs(d.g)))),
            'direct_residual': float(np.max(np.abs(L_bar))),
            'direct_scale': max(
                d.f ** 2 * abs(d.hdot), d.f * abs(float(d.zeta @ d.df)),
                d.sigma ** 2 * float(np.max(np.abs(d.L))),
                abs(d.h * d.sigma * d.sigma_dot) * float(np.max(np.abs(d.g))),
            ),
        }

    points = st.sample(plan)
    rows = map_samples(measure, points)
    columns = {key: [row[key] for row in rows] for key in rows[0]}
    ok = lambda track, r: r[f'{track}_residual'] <= plan.bound(r[f'{track}_scale'])
    conditions = [ok('time', r) and ok('space', r) for r in rows]
    direct = [ok('direct', r) for r in rows]
    passed = all(direct)
    consistent = conditions == direct
    residuals = columns['direct_residual']
    report = ClassificationReport(
        operation='killing_decomposition',
        verdict='killing' if passed else 'not killing',
        passed=passed,
        worst_residual=max(residuals),
        witness=witness_of(points, residuals),
        derived={
            'time_condition': all(ok('time', r) for r in rows),
            'space_condition': all(ok('space', r) for r in rows),
            'consistent': consistent,
        },
        table=sample_table(points, st.coords, **columns),
    )
    if not consistent:
        report.note('direct Killing verdict and the split conditions disagree at some sample')
        logger.warning(f"killing_decomposition on {st.name}: split conditions disagree with direct measurement")
    return report


def along_curve_terms_st(st, field, V, p, normalization=1.0):
    """
    Conformal factor of ζ̄ read off a tangent V̄ = v ∂_t + V with
    ḡ(V̄, V̄) = N (the normalization, +1 by default).

    ``printed`` is 2ḣ + 2σ^2 g([ζ,V],V) + 2(hσσ̇ - ḣσ^2) g(V,V); ``exact``
    is (L_ζ̄ ḡ)(V̄, V̄) / N written through the same terms plus the drift of
    the normalization along ζ, σ^2 ζ(g(V,V)) - 2v^2 f^2 ζ(ln f).

    Raises:
        NotUnitError: If ḡ(V̄, V̄) differs from N by more than TOLERANCE['unit']
    """
    d = _SpacetimeData(st, field, p)
    v = evaluate(V.h, p)
    V_space = V.spatial.at(st.base.coords, p)
    g_VV = float(V_space @ d.g @ V_space)
    norm = -d.f ** 2 * v ** 2 + d.sigma ** 2 * g_VV
    if abs(norm - normalization) > TOLERANCE['unit']:
        raise NotUnitError(norm, normalization)
    bracket = lie_bracket(st.base, field.spatial, V.spatial, p)
    g_bracket = float(bracket @ d.g @ V_space)
    zeta_g_VV = float(V_space @ d.L @ V_space) + 2 * g_bracket
    drift = d.sigma ** 2 * zeta_g_VV - 2 * v ** 2 * d.f ** 2 * d.zeta_log_f
    mixed = 2 * (d.h * d.sigma * d.sigma_dot - d.hdot * d.sigma ** 2) * g_VV
    printed = 2 * d.hdot + 2 * d.sigma ** 2 * g_bracket + mixed
    exact = (2 * d.hdot * normalization + mixed - 2 * d.sigma ** 2 * g_bracket + drift) / normalization
    return {'printed': printed, 'exact': exact, 'drift': drift, 'bracket_term': g_bracket}


def conformal_factor_along_curve_st(st, field, V, p, normalization=1.0):
    """Factor of ζ̄ along a unit tangent; equals the trace estimate when ζ̄ is conformal."""
    return along_curve_terms_st(st, field, V, p, normalization)['exact']


def conformal_along_curve_st_report(st, field, V, plan, normalization=1.0):
    """
    Along-curve factor at each sample, V̄ rescaled there to ḡ(V̄,V̄) = N,
    against the trace estimate wherever ζ̄ is conformal.
    """
    chart = st.chart
    lifted = field.lift(st)
    tangent = V.lift(st)

    def measure(p):
        g_bar = metric_at(chart, p)
        values = tangent.at(chart.coords, p)
        current = float(values @ g_bar @ values)
        if current * normalization <= 0:
            return None
        scaled = V.scaled(float(np.sqrt(normalization / current)))
        terms = along_curve_terms_st(st, field, scaled, p, normalization)
        estimate = conformal_factor_estimate(chart, lifted, p, plan.tol)
        gap = abs(terms['exact'] - estimate.factor) if estimate.conformal else 0.0
        printed_gap = abs(terms['printed'] - estimate.factor) if estimate.conformal else 0.0
        return terms['exact'], terms['printed'], estimate.factor, estimate.conformal, gap, printed_gap

    points = st.sample(plan)
    results = map_samples(measure, points)
    kept = [(p, r) for p, r in zip(points, results) if r is not None]
    report_points = [p for p, _ in kept]
    rows = [r for _, r in kept]
    if not rows:
        report = ClassificationReport(
            operation='conformal_along_curve_st',
            verdict='no admissible tangent',
            passed=False,
            precondition_met=False,
        )
        report.note('tangent has the wrong causal character at every sample')
        return report
    gaps = [r[4] for r in rows]
    passed = all(g <= plan.bound(max(abs(r[0]), abs(r[2]))) for g, r in zip(gaps, rows))
    report = ClassificationReport(
        operation='conformal_along_curve_st',
        verdict='factor matches' if passed else 'factor mismatch',
        passed=passed,
        worst_residual=max(gaps),
        witness=witness_of(report_points, gaps),
        derived={
            'rho': float(np.mean([r[0] for r in rows])),
            'printed_form_residual': max(r[5] for r in rows),
            'normalization': normalization,
        },
        table=sample_table(
            report_points, st.coords,
            exact=[r[0] for r in rows], printed=[r[1] for r in rows],
            estimate=[r[2] for r in rows], conformal=[r[3] for r in rows],
            residual=gaps,
        ),
    )
    if len(rows) < len(points):
        report.note(f'{len(points) - len(rows)} samples skipped: tangent of the wrong causal character')
    return report


def concurrent_check_st(st, field, plan):
    """
    Direct concurrency test D̄_X̄ ζ̄ = X̄ on the space-time, with the
    sufficient-condition checklist (ḣ = 1, ζ concurrent on M, f and σ
    constant) and the projection diagnostics h f ∇f = 0, σ σ̇ ζ = 0 and
    h σ̇ ∇f = 0 reported per sample.
    """
    chart = st.chart
    lifted = field.lift(st)
    probes = probe_vectors(st.n + 1, plan.seed)
    base_probes = probe_vectors(st.n, plan.seed)
    identity = np.eye(st.n + 1)
    base_identity = np.eye(st.n)

    def measure(p):
        d = _SpacetimeData(st, field, p)
        A = nabla_field(chart, lifted, p)
        A_base = nabla_field(st.base, field.spatial, p)
        grad_f = float(np.max(np.abs(d.df))) if d.df.size else 0.0
        zeta_size = float(np.max(np.abs(d.zeta))) if d.zeta.size else 0.0
        return {
            'residual': float(np.max(np.abs(probes @ (A - identity).T))),
            'scale': max(1.0, float(np.max(np.abs(A)))),
            'rho': conformal_factor_estimate(chart, lifted, p, plan.tol).factor,
            'hdot_minus_1': abs(d.hdot - 1.0),
            'base_concurrent_residual': float(np.max(np.abs(base_probes @ (A_base - base_identity).T))),
            'grad_f': grad_f,
            'sigma_dot': abs(d.sigma_dot),
            'h': abs(d.h),
            'h_f_grad_f': abs(d.h) * d.f * grad_f,
            'sigma_sigma_dot_zeta': d.sigma * abs(d.sigma_dot) * zeta_size,
            'h_sigma_dot_grad_f': abs(d.h * d.sigma_dot) * grad_f,
        }

    points = st.sample(plan)
    rows = map_samples(measure, points)
    columns = {key: [row[key] for row in rows] for key in rows[0]}
    small = lambda key: all(abs(v) <= plan.bound(1.0) for v in columns[key])
    passed = all(r['residual'] <= plan.bound(r['scale']) for r in rows)
    sufficient = small('hdot_minus_1') and small('base_concurrent_residual') and small('grad_f') and small('sigma_dot')
    projections_vanish = small('h_f_grad_f') and small('sigma_sigma_dot_zeta')
    implication = small('h_sigma_dot_grad_f')
    residuals = columns['residual']
    report = ClassificationReport(
        operation='concurrent_st',
        verdict='concurrent' if passed else 'not concurrent',
        passed=passed,
        worst_residual=max(residuals),
        witness=witness_of(points, residuals),
        derived={
            'rho': float(np.mean(columns['rho'])),
            'rho_deviation': max(abs(r - 2.0) for r in columns['rho']),
            'sufficient_conditions': sufficient,
            'h_zero': small('h'),
            'sigma_constant': small('sigma_dot'),
            'projections_vanish': projections_vanish,
            'h_sigma_dot_grad_f_zero': implication,
            'generalized_robertson_walker': st.is_generalized_robertson_walker,
            'standard_static': st.is_standard_static,
        },
        table=sample_table(points, st.coords, **columns),
    )
    if passed and not (projections_vanish and implication):
        report.note('concurrent field with non-vanishing projection terms')
    if sufficient and not passed:
        report.note('sufficient conditions hold but the field is not concurrent')
    return report


# --- two-dimensional concurrent fields -------------------------------------------

PARAMETER_RANGES = {
    'a': (0.0, 1.0),
    'b': (0.0, 1.0),
    'r': (0.5, 2.0),
    'c': (0.5, 2.0),
}


@dataclass(frozen=True)
class ConcurrentFamily:
    """
    A family of concurrent fields ζ̄ = h ∂_t + k ∂_x on -f(x)^2 dt^2 + σ(t)^2 dx^2
    with free parameters among a, b, r, c.
    """
    case: str
    h: str
    k: str
    sigma: str
    f: str
    params: Tuple[str, ...]

    @property
    def zeta(self):
        parts = []
        if self.h != '0':
            parts.append(f"({self.h}) d/dt")
        if self.k != '0':
            parts.append(f"({self.k}) d/dx")
        return ' + '.join(parts) or '0'

    def instantiate(self, values: Dict[str, float], time='t', space='x'):
        """Concrete space-time and field for the given parameter values."""
        missing = set(self.params) - set(values)
        if missing:
            raise DimensionMismatchError(f"missing parameters {sorted(missing)} for {self.case}")
        bind = lambda text: substitute(as_expr(text), {name: values[name] for name in self.params})
        rename = {'t': as_expr(time), 'x': as_expr(space)}
        base = Chart(f"R_{space}", [space], [[1.0]])
        st = DoublyWarpedSpacetime(
            base,
            f=substitute(bind(self.f), rename),
            sigma=substitute(bind(self.sigma), rename),
            time=time,
            name=f"appendix_{self.case}",
        )
        field = SpacetimeField(
            substitute(bind(self.h), rename),
            VectorField(base.name, {space: substitute(bind(self.k), rename)}),
        )
        return st, field

    def draw(self, rng):
        return {name: float(rng.uniform(*PARAMETER_RANGES[name])) for name in self.params}


def solve_concurrent_2d():
    """
    The concurrent fields on a two-dimensional doubly warped space-time with
    M = R. The defining system

        ḣ f + k f' = f,   h f f' + k σ σ̇ = 0,   h f f' - k σ σ̇ = 0,   h σ̇ + k' σ = σ

    forces h f f' = 0 and k σ σ̇ = 0, which leaves three families.
    """
    return [
        ConcurrentFamily('h=0', h='0', k='x+a', sigma='c', f='r*(x+a)', params=('a', 'c', 'r')),
        ConcurrentFamily('k=0', h='t+a', k='0', sigma='r*(t+a)', f='c', params=('a', 'c', 'r')),
        ConcurrentFamily('f,sigma const', h='t+a', k='x+b', sigma='c', f='r', params=('a', 'b', 'c', 'r')),
    ]


def perturbed_family():
    """A non-member used as a negative control: f = r (x+a)^2."""
    return ConcurrentFamily('perturbed', h='0', k='x+a', sigma='c', f='r*(x+a)^2', params=('a', 'c', 'r'))


def verify_concurrent_families(plan, draws=5, families=None):
    """
    Instantiate every family with ``draws`` seeded parameter sets and run the
    concurrency check on each.

    Returns:
        list[tuple[ConcurrentFamily, dict, ClassificationReport]]
    """
    rng = np.random.default_rng([int(plan.seed), 2])
    results = []
    for family in families or solve_concurrent_2d():
        for index in range(draws):
            values = family.draw(rng)
            st, field = family.instantiate(values)
            report = concurrent_check_st(st, field, plan.with_overrides(seed=plan.seed + index))
            logger.info(f"family {family.case} draw {index}: {report.verdict} ({report.worst_residual:.2e})")
            results.append((family, values, report))
    return results


def appendix_table(results):
    """One row per family: fields, warpings and the verification tally."""
    rows = []
    for family in dict.fromkeys(family for family, _, _ in results):
        reports = [report for fam, _, report in results if fam == family]
        rows.append({
            'case': family.case,
            'h': family.h,
            'k': family.k,
            'sigma': family.sigma,
            'f': family.f,
            'zeta': family.zeta,
            'verified': f"{sum(r.passed for r in reports)}/{len(reports)}",
            'worst_residual': max(r.worst_residual for r in reports),
        })
    return pd.DataFrame(rows)


def appendix_report(plan, draws=5, include_control=True):
    """
    Every family verified at ``draws`` parameter sets, plus the perturbed
    non-member, which must fail.
    """
    results = verify_concurrent_families(plan, draws)
    members_ok = all(r.passed for _, _, r in results)
    table = appendix_table(results)
    derived = {'families': len(table), 'draws': draws}
    control_ok = True
    if include_control:
        control = verify_concurrent_families(plan, 1, families=[perturbed_family()])
        control_report = control[0][2]
        control_ok = not control_report.passed
        derived['control_residual'] = control_report.worst_residual
        table = pd.concat([table, appendix_table(control)], ignore_index=True)
    passed = members_ok and control_ok
    verified = sum(
        all(r.passed for fam, _, r in results if fam == family)
        for family in dict.fromkeys(family for family, _, _ in results)
    )
    report = ClassificationReport(
        operation='appendix_families',
        verdict=f"{verified}/{derived['families']} families concurrent",
        passed=passed,
        worst_residual=max(r.worst_residual for _, _, r in results),
        derived=derived,
        table=table,
    )
    if not control_ok:
        report.note('perturbed control was certified concurrent')
    return report
