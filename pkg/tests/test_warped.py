import math

import numpy as np
from pytest import approx, fixture, mark, raises

from warpcheck.errors import CoordinateCollisionError, DimensionMismatchError, GeometryError, NonPositiveWarpingError, NotUnitError
from warpcheck.expr import Point
from warpcheck.geometry import Chart, CurveState, VectorField, coordinate_line, covariant_derivative, integrate_geodesic, lie_derivative_metric, metric_at
from warpcheck.sampling import SamplePlan
from warpcheck.warped import (
    DoublyWarpedProduct,
    SplitVectorField,
    classify_conformal_product,
    conformal_along_curve_report,
    conformal_factor_along_curve,
    connection_closed_form,
    connection_oracle_report,
    constant_length_report,
    f_diamond,
    geodesic_residual,
    killing_projection,
    lie_split,
    lie_split_matrix,
    lie_split_oracle_report,
    ricci_closed_form,
    ricci_oracle_report,
    trajectory_residuals,
)


@fixture
def hyperbolic():
    """dt^2 + e^{2t} dx^2, the hyperbolic plane."""
    return DoublyWarpedProduct(
        Chart.diagonal('I', ['t'], [1]),
        Chart.diagonal('R', ['x'], [1]),
        f1='exp(t)', f2=1, name='H',
    )


@fixture
def hyperbolic_plan():
    return SamplePlan(box={'t': (-0.5, 0.5), 'x': (-1.0, 1.0)}, count=5, seed=2)


def split(w, part1=None, part2=None):
    return SplitVectorField(VectorField(w.m1.name, part1 or {}), VectorField(w.m2.name, part2 or {}))


def test_assembled_metric_is_block_diagonal(doubly_warped):
    g = metric_at(doubly_warped.chart, {'u': 0.5, 'v': 2.0})
    assert np.allclose(g, np.diag([5.0 ** 2, math.exp(1.0)]))


def test_coordinate_collision():
    w = DoublyWarpedProduct(Chart.diagonal('A', ['x'], [1]), Chart.diagonal('B', ['x'], [1]), 1, 1)
    with raises(CoordinateCollisionError):
        w.chart


def test_warping_function_must_live_on_its_factor():
    with raises(DimensionMismatchError):
        DoublyWarpedProduct(Chart.diagonal('A', ['x'], [1]), Chart.diagonal('B', ['y'], [1]), f1='y', f2=1)


def test_split_field_components_must_stay_on_their_factor(doubly_warped):
    with raises(DimensionMismatchError):
        split(doubly_warped, part1={'u': 'v'}).lift(doubly_warped)


def test_non_positive_warping_is_rejected():
    w = DoublyWarpedProduct(Chart.diagonal('A', ['u'], [1]), Chart.diagonal('B', ['v'], [1]), f1='u', f2=1)
    Y = SplitVectorField.coordinate(w, 'v')
    with raises(NonPositiveWarpingError) as info:
        connection_closed_form(w, [1.0, 0.0], Y, {'u': -1.0, 'v': 0.0})
    assert info.value.name == 'f1'
    assert info.value.point == {'u': -1.0, 'v': 0.0}
    with raises(NonPositiveWarpingError):
        connection_closed_form(w, [1.0, 0.0], Y, Point('W', {'u': -1.0, 'v': 0.0}))


def test_closed_form_connection_at_a_point(doubly_warped):
    p = {'u': 0.3, 'v': 0.8}
    X = np.array([0.4, -1.2])
    Y = split(doubly_warped, part1={'u': 'u^2'}, part2={'v': 'sin(v)'})
    oracle = covariant_derivative(doubly_warped.chart, X, Y.lift(doubly_warped), p)
    assert np.allclose(connection_closed_form(doubly_warped, X, Y, p), oracle, atol=1e-12)


def test_sphere_ricci_closed_form(sphere):
    p = {'th': 1.1, 'ph': 0.0}
    assert np.allclose(ricci_closed_form(sphere, p), metric_at(sphere.chart, p), atol=1e-12)


@mark.parametrize("name", ("sphere", "doubly_warped", "one_plus_two"))
def test_connection_and_ricci_agree_with_the_oracle(request, sphere_plan, name):
    w = request.getfixturevalue(name)
    plan = sphere_plan if name == 'sphere' else SamplePlan(count=5, seed=9)
    connection = connection_oracle_report(w, plan)
    curvature = ricci_oracle_report(w, plan)
    assert connection.verdict == 'agree'
    assert curvature.verdict == 'agree'
    assert curvature.table['asymmetry'].max() < 1e-12


def test_unscaled_diamond_term_is_flagged(doubly_warped):
    report = ricci_oracle_report(doubly_warped, SamplePlan(count=5, seed=9))
    assert report.passed
    assert report.derived['printed_form_residual'] > 1e-3
    assert report.notes


def test_unscaled_diamond_term_is_harmless_when_f2_is_one(sphere, sphere_plan):
    report = ricci_oracle_report(sphere, sphere_plan)
    assert report.derived['printed_form_residual'] < 1e-8
    assert not report.notes


def test_lie_split_oracle(doubly_warped):
    zeta = split(doubly_warped, part1={'u': 'u^2'}, part2={'v': 'sin(v)'})
    assert lie_split_oracle_report(doubly_warped, zeta, SamplePlan(count=5, seed=1)).verdict == 'agree'


def test_lie_split_value(doubly_warped):
    zeta = split(doubly_warped, part1={'u': 1})
    p = {'u': 0.2, 'v': 0.5}
    X = SplitVectorField.coordinate(doubly_warped, 'v')
    # only the 2 f1 zeta1(f1) g2 term survives on the second block
    assert lie_split(doubly_warped, zeta, X, X, p) == approx(2 * math.exp(0.4))
    direct = lie_derivative_metric(doubly_warped.chart, zeta.lift(doubly_warped), p)
    assert np.allclose(lie_split_matrix(doubly_warped, zeta, p), direct)


def test_classification_on_the_sphere(sphere, sphere_plan, rotation_split):
    report = classify_conformal_product(sphere, rotation_split, sphere_plan)
    assert report.verdict == 'killing'
    assert report.passed
    assert report.derived['killing_conditions']
    meridian = split(sphere, part1={'th': 1})
    assert classify_conformal_product(sphere, meridian, sphere_plan).verdict == 'not conformal'


def test_hyperbolic_boost_is_killing(hyperbolic, hyperbolic_plan):
    boost = split(hyperbolic, part1={'t': 1}, part2={'x': '-x'})
    report = classify_conformal_product(hyperbolic, boost, hyperbolic_plan)
    assert report.verdict == 'killing'
    # the factor fields are not Killing on their own
    assert not report.derived['killing_conditions']
    assert report.derived['rho2'] == approx(-2.0)


def test_exponential_warpings_give_a_homothetic_field():
    w = DoublyWarpedProduct(
        Chart.diagonal('U', ['u'], [1]), Chart.diagonal('V', ['v'], [1]), f1='exp(u)', f2='exp(v)',
    )
    plan = SamplePlan(box={'u': (-0.5, 0.5), 'v': (-1.0, 1.0)}, count=5, seed=4)
    report = classify_conformal_product(w, split(w, part1={'u': 1}, part2={'v': 1}), plan)
    assert report.verdict == 'homothetic'
    assert report.passed
    assert report.derived['rho'] == approx(2.0)
    assert report.derived['rho1'] == approx(0.0, abs=1e-12)
    assert report.derived['rho2'] == approx(0.0, abs=1e-12)
    assert report.derived['factor_conditions'] and report.derived['consistent']


def test_killing_projection(hyperbolic, hyperbolic_plan):
    boost = split(hyperbolic, part1={'t': 1}, part2={'x': '-x'})
    report = killing_projection(hyperbolic, boost, hyperbolic_plan)
    assert report.verdict == 'projection holds'
    assert report.derived['rho1'] == approx(0.0, abs=1e-12)
    assert report.derived['rho2'] == approx(-2.0)


def test_killing_projection_needs_a_killing_field(sphere, sphere_plan):
    report = killing_projection(sphere, split(sphere, part1={'th': 1}), sphere_plan)
    assert report.verdict == 'precondition failed'
    assert not report.precondition_met


def test_equator_has_zero_geodesic_residual(sphere):
    state = CurveState('S', Point('S', {'th': math.pi / 2, 'ph': 0.3}), [0.0, 1.0])
    r1, r2 = geodesic_residual(sphere, state)
    assert np.allclose(r1, 0.0, atol=1e-12)
    assert np.allclose(r2, 0.0, atol=1e-12)


@mark.parametrize("name position velocity".split(), (
    ("sphere", {'th': 1.4, 'ph': 0.0}, [0.3, 1.0]),
    ("hyperbolic", {'t': 0.1, 'x': 0.2}, [0.3, 0.4]),
))
def test_integrated_curves_are_geodesics(request, name, position, velocity):
    w = request.getfixturevalue(name)
    start = CurveState(w.name, Point(w.name, position), velocity)
    report = trajectory_residuals(w, integrate_geodesic(w.chart, start, 0.002, 100), 0.002)
    assert report.verdict == 'geodesic'
    assert report.derived['speed_drift'] < 1e-9


def test_frozen_curve_is_not_a_geodesic(sphere):
    start = CurveState('S', Point('S', {'th': math.pi / 2, 'ph': 0.0}), [0.1, 1.0])
    report = trajectory_residuals(sphere, coordinate_line(sphere.chart, start, 0.01, 100), 0.01)
    assert report.verdict == 'not geodesic'
    assert report.worst_residual == approx(0.5 * math.sin(0.2), rel=0.05)


def test_trajectory_needs_three_states(sphere):
    start = CurveState('S', Point('S', {'th': 1.0, 'ph': 0.0}), [0.0, 1.0])
    with raises(GeometryError):
        trajectory_residuals(sphere, [start, start], 0.1)


def test_constant_length_on_the_sphere(sphere, sphere_plan, rotation_split):
    meridian = split(sphere, part1={'th': 1})
    report = constant_length_report(sphere, meridian, rotation_split, sphere_plan)
    assert report.verdict == 'constant length'
    assert report.passed


def test_varying_length_on_a_doubly_warped_product(doubly_warped):
    report = constant_length_report(
        doubly_warped,
        SplitVectorField.coordinate(doubly_warped, 'u'),
        SplitVectorField.coordinate(doubly_warped, 'v'),
        SamplePlan(count=5, seed=4),
    )
    assert report.verdict == 'varying length'
    assert report.passed
    assert not report.derived['parallel_condition']


def test_conformal_along_curve(sphere, sphere_plan, rotation_split):
    meridian = split(sphere, part1={'th': 1})
    report = conformal_along_curve_report(sphere, rotation_split, meridian, sphere_plan)
    assert report.verdict == 'factor matches'
    assert report.derived['conformal']


def test_along_curve_factor_of_a_homothety():
    w = DoublyWarpedProduct(Chart.diagonal('A', ['x'], [1]), Chart.diagonal('B', ['y'], [1]), 1, 1, name='E')
    dilation = split(w, part1={'x': 'x'}, part2={'y': 'y'})
    tangent = np.array([0.6, 0.8])
    assert conformal_factor_along_curve(w, dilation, tangent, {'x': 0.5, 'y': 1.0}) == approx(2.0)


def test_along_curve_requires_a_unit_tangent(sphere, rotation_split):
    with raises(NotUnitError):
        conformal_factor_along_curve(sphere, rotation_split, np.array([1.0, 1.0]), {'th': 1.0, 'ph': 0.0})


def test_diamond_uses_the_other_dimension(one_plus_two):
    p = {'t': 0.5, 'th': 0.0, 'z': 0.3}
    # f1 f1'' + (n2 - 1) f1'^2 with n2 = 2
    assert f_diamond(one_plus_two, 1, p) == approx(1.25 * 2 + 1.0)
    # the time factor is one-dimensional, so only f2 Δf2 survives
    assert f_diamond(one_plus_two, 2, p) == approx(-3.0)
