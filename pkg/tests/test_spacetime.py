import math

import numpy as np
from pytest import approx, fixture, mark, raises

from warpcheck import spacetime
from warpcheck.errors import DimensionMismatchError, NotUnitError
from warpcheck.geometry import ConformalEstimate, VectorField, lie_derivative_metric, metric_at
from warpcheck.sampling import SamplePlan
from warpcheck.spacetime import (
    DoublyWarpedSpacetime,
    SpacetimeField,
    along_curve_terms_st,
    appendix_report,
    appendix_table,
    concurrent_check_st,
    conformal_along_curve_st_report,
    conformal_factor_along_curve_st,
    killing_decomposition_check,
    lie_spacetime,
    lie_spacetime_matrix,
    lie_spacetime_oracle_report,
    perturbed_family,
    solve_concurrent_2d,
    timelike_conformal_check,
    verify_concurrent_families,
)


@fixture
def grw(plane):
    return DoublyWarpedSpacetime(plane, f=1, sigma='exp(t)', t_interval=(-0.5, 0.5), name='grw')


@fixture
def static(plane):
    return DoublyWarpedSpacetime(plane, f='1 + x^2 + y^2', sigma=1, name='static')


@fixture
def warped(plane):
    return DoublyWarpedSpacetime(plane, f='1 + x^2 + y^2', sigma='1 + t^2', name='warped')


def field(h, **spatial):
    return SpacetimeField(h, VectorField('E2', spatial))


def test_assembled_lorentzian_metric(warped):
    g = metric_at(warped.chart, {'t': 1.0, 'x': 1.0, 'y': 0.0})
    assert np.allclose(g, np.diag([-4.0, 4.0, 4.0]))
    assert warped.chart.signature == (-1, 1, 1)
    assert warped.coords == ('t', 'x', 'y')


def test_spacetime_kinds(grw, static, minkowski):
    assert grw.is_generalized_robertson_walker and not grw.is_standard_static
    assert static.is_standard_static and not static.is_generalized_robertson_walker
    assert minkowski.is_standard_static and minkowski.is_generalized_robertson_walker


def test_sigma_must_depend_on_time_only(plane):
    with raises(DimensionMismatchError):
        DoublyWarpedSpacetime(plane, f=1, sigma='x')


def test_h_must_depend_on_time_only(minkowski):
    with raises(DimensionMismatchError):
        field('x').lift(minkowski)


def test_sampling_uses_the_time_interval(grw, xy_plan):
    points = grw.sample(xy_plan)
    assert all(-0.5 <= p['t'] <= 0.5 for p in points)


# --- Lie derivative ----------------------------------------------------------

def test_lie_derivative_of_a_clock(minkowski):
    clock = field('t')
    dt = field(1)
    p = {'t': 1.0, 'x': 0.2, 'y': 0.3}
    assert lie_spacetime(minkowski, clock, dt, dt, p) == approx(-2.0)
    assert lie_spacetime(minkowski, clock, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], p) == approx(-2.0)
    assert lie_spacetime(minkowski, field(0), dt, dt, p) == 0.0


def test_lie_spacetime_matrix_matches_the_chart(warped):
    zeta = field('t^2', x='y', y='x^2')
    p = {'t': 0.7, 'x': -0.3, 'y': 0.4}
    direct = lie_derivative_metric(warped.chart, zeta.lift(warped), p)
    assert np.allclose(lie_spacetime_matrix(warped, zeta, p), direct, atol=1e-12)


@mark.parametrize("name components".split(), (
    ("warped", ('t^2', {'x': 'y', 'y': 'x^2'})),
    ("de_sitter", (1, {'x': '-x', 'y': '-y'})),
    ("static", (0, {'x': '-y', 'y': 'x'})),
))
def test_lie_spacetime_oracle(request, xy_plan, name, components):
    st = request.getfixturevalue(name)
    h, spatial = components
    assert lie_spacetime_oracle_report(st, field(h, **spatial), xy_plan).verdict == 'agree'


# --- time-like fields ----------------------------------------------------------

def test_proportional_clock_is_conformal(grw, xy_plan):
    report = timelike_conformal_check(grw, '3*exp(t)', xy_plan)
    assert report.verdict == 'conformal'
    assert report.derived['a'] == approx(3.0)
    assert report.derived['direct_conformal']
    assert report.worst_residual < 1e-8


SIGMA_PROFILES = ('exp(t)', '1 + t^2', '2 + sin(t)')


@mark.parametrize("sigma", SIGMA_PROFILES)
@mark.parametrize("a", (0.0, 0.5, 3.0))
def test_proportional_clock_grid(plane, xy_plan, sigma, a):
    st = DoublyWarpedSpacetime(plane, f=1, sigma=sigma, t_interval=(-0.5, 0.5))
    report = timelike_conformal_check(st, f"{a}*({sigma})", xy_plan)
    assert report.passed
    assert report.verdict == ('killing' if a == 0.0 else 'conformal')
    assert report.derived['a'] == approx(a, abs=1e-12)
    gap = (report.table['estimate'] - report.table['time_demand']).abs()
    assert gap.max() <= 1e-7


@mark.parametrize("sigma", SIGMA_PROFILES)
def test_clock_not_proportional_to_sigma(plane, xy_plan, sigma):
    st = DoublyWarpedSpacetime(plane, f=1, sigma=sigma, t_interval=(-0.5, 0.5))
    report = timelike_conformal_check(st, f"(2 + t)*({sigma})", xy_plan)
    assert not report.passed
    assert report.verdict == 'not conformal'


def test_factor_must_match_twice_hdot(grw, xy_plan, monkeypatch):
    estimate = spacetime.conformal_factor_estimate

    def shifted(*args):
        e = estimate(*args)
        return ConformalEstimate(e.factor + 0.5, e.residual, e.conformal)

    monkeypatch.setattr(spacetime, 'conformal_factor_estimate', shifted)
    report = timelike_conformal_check(grw, '3*exp(t)', xy_plan)
    assert not report.passed
    assert report.verdict == 'not conformal'
    assert not report.derived['factor_matches_hdot']
    assert report.worst_residual == approx(0.5)
    assert report.notes


def test_zero_clock_is_killing(grw, xy_plan):
    assert timelike_conformal_check(grw, 0, xy_plan).verdict == 'killing'


def test_unit_clock_on_minkowski_is_not_conformal(minkowski, xy_plan):
    report = timelike_conformal_check(minkowski, 't', xy_plan)
    assert report.verdict == 'not conformal'
    assert not report.derived['direct_conformal']
    # the time block demands 2 while the space block demands 0
    assert report.worst_residual == approx(2.0)


def test_near_proportional_clock(grw, xy_plan):
    report = timelike_conformal_check(grw, 'exp(t)*(1 + 0.001*t)', xy_plan)
    assert report.verdict == 'not conformal'
    assert report.derived['fit_agrees_with_direct']


def test_negative_proportionality_is_rejected(grw, xy_plan):
    report = timelike_conformal_check(grw, '-exp(t)', xy_plan)
    assert report.verdict == 'not conformal'
    assert report.derived['direct_conformal']
    assert not report.derived['fit_agrees_with_direct']
    assert report.notes


# --- Killing decomposition -----------------------------------------------------

@mark.parametrize("name h spatial verdict".split(), (
    ("de_sitter", 1, {'x': '-x', 'y': '-y'}, 'killing'),
    ("de_sitter", 1, {}, 'not killing'),
    ("static", 0, {'x': '-y', 'y': 'x'}, 'killing'),
    ("minkowski", 2, {'x': '-y', 'y': 'x'}, 'killing'),
    ("minkowski", 't', {}, 'not killing'),
    ("warped", 0, {'x': 1}, 'not killing'),
))
def test_killing_decomposition(request, xy_plan, name, h, spatial, verdict):
    st = request.getfixturevalue(name)
    report = killing_decomposition_check(st, field(h, **spatial), xy_plan)
    assert report.verdict == verdict
    assert report.derived['consistent']


def test_zero_field_has_zero_residuals(warped, xy_plan):
    report = killing_decomposition_check(warped, field(0), xy_plan)
    assert report.passed
    assert report.table['time_residual'].max() <= 1e-15
    assert report.table['space_residual'].max() <= 1e-15


# --- along a curve ---------------------------------------------------------------

def test_along_curve_factor_of_a_proportional_clock(grw):
    terms = along_curve_terms_st(grw, field('exp(t)'), field(0, x=1), {'t': 0.0, 'x': 0.1, 'y': 0.2})
    assert terms['exact'] == approx(2.0)
    assert terms['printed'] == approx(2.0)


def test_bracket_term_sign(minkowski):
    position = field('t', x='x', y='y')
    terms = along_curve_terms_st(minkowski, position, field(0, x=1), {'t': 1.0, 'x': 0.5, 'y': 0.5})
    assert terms['bracket_term'] == approx(-1.0)
    assert terms['exact'] == approx(2.0)
    assert terms['printed'] == approx(-2.0)


def test_timelike_normalization(minkowski):
    position = field('t', x='x', y='y')
    p = {'t': 1.0, 'x': 0.5, 'y': 0.5}
    assert conformal_factor_along_curve_st(minkowski, position, field(1), p, normalization=-1.0) == approx(2.0)


def test_tangent_must_be_normalized(minkowski):
    with raises(NotUnitError):
        along_curve_terms_st(minkowski, field('t'), field(0, x=2), {'t': 1.0, 'x': 0.0, 'y': 0.0})


def test_along_curve_report(minkowski, xy_plan):
    report = conformal_along_curve_st_report(minkowski, field('t', x='x', y='y'), field(0, x=1), xy_plan)
    assert report.verdict == 'factor matches'
    assert report.derived['rho'] == approx(2.0)
    assert report.derived['printed_form_residual'] == approx(4.0)


def test_along_curve_report_skips_wrong_causal_character(minkowski, xy_plan):
    report = conformal_along_curve_st_report(minkowski, field('t'), field(1), xy_plan)
    assert report.verdict == 'no admissible tangent'
    assert not report.precondition_met


# --- concurrent fields -------------------------------------------------------------

def test_position_field_is_concurrent(minkowski, xy_plan):
    report = concurrent_check_st(minkowski, field('t', x='x', y='y'), xy_plan)
    assert report.verdict == 'concurrent'
    assert report.derived['sufficient_conditions']
    assert report.derived['projections_vanish']
    assert report.derived['rho'] == approx(2.0)
    assert report.derived['rho_deviation'] <= 1e-8


def test_proportional_clock_is_not_concurrent(grw, xy_plan):
    report = concurrent_check_st(grw, field('exp(t)'), xy_plan)
    assert report.verdict == 'not concurrent'
    assert not report.derived['sufficient_conditions']


def test_three_families():
    families = solve_concurrent_2d()
    assert [f.case for f in families] == ['h=0', 'k=0', 'f,sigma const']
    assert families[0].f == 'r*(x+a)'
    assert families[1].sigma == 'r*(t+a)'
    assert families[2].zeta == '(t+a) d/dt + (x+b) d/dx'


def test_family_needs_every_parameter():
    with raises(DimensionMismatchError):
        solve_concurrent_2d()[0].instantiate({'a': 0.5})


def test_family_instances_are_concurrent():
    plan = SamplePlan(count=3, seed=1)
    results = verify_concurrent_families(plan, draws=2)
    assert len(results) == 6
    for family, values, report in results:
        assert set(values) == set(family.params)
        assert report.passed, family.case
        assert report.worst_residual <= 1e-9
        assert report.derived['rho_deviation'] <= 1e-8


def test_perturbed_family_fails():
    plan = SamplePlan(count=3, seed=1)
    [(_, _, report)] = verify_concurrent_families(plan, draws=1, families=[perturbed_family()])
    assert not report.passed
    assert report.worst_residual >= 1e-2


def test_appendix_table():
    results = verify_concurrent_families(SamplePlan(count=2, seed=1), draws=2)
    table = appendix_table(results)
    assert list(table.columns) == ['case', 'h', 'k', 'sigma', 'f', 'zeta', 'verified', 'worst_residual']
    assert list(table['verified']) == ['2/2', '2/2', '2/2']


def test_appendix_report():
    report = appendix_report(SamplePlan(count=2, seed=1), draws=2)
    assert report.passed
    assert report.verdict == '3/3 families concurrent'
    assert report.derived['control_residual'] >= 1e-2
    assert len(report.table) == 4


def test_parameter_draws_are_seeded():
    first = [values for _, values, _ in verify_concurrent_families(SamplePlan(count=1, seed=8), draws=1)]
    second = [values for _, values, _ in verify_concurrent_families(SamplePlan(count=1, seed=8), draws=1)]
    assert first == second
    assert all(0.0 <= v['a'] <= 1.0 for v in first)
    assert math.isfinite(first[0]['r'])
