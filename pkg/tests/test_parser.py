import re

from pytest import mark, raises

from warpcheck.errors import DimensionMismatchError, ScenarioError, UnresolvedReferenceError
from warpcheck.expr import Const, evaluate
from warpcheck.parser import load_scenario, loads_scenario, resolve_path

SPHERE = """
name: round
constants: {k: 2}
sampling: {count: 4, seed: 9, box: {th: [0.3, 2.8]}}
charts:
  Th: {coords: [th], diag: [1]}
  S1: {coords: [ph], diag: [1]}
products:
  S: {m1: Th, m2: S1, f1: "sin(th)"}
split_fields:
  rotation: {product: S, part2: {ph: k}}
checks:
  - {kind: ricci_oracle, target: S, expect: agree}
  - {kind: classify_conformal_product, target: S, args: {field: rotation}, label: spin}
"""


def test_loads_a_scenario():
    scenario = loads_scenario(SPHERE)
    assert scenario.name == 'round'
    assert scenario.constants == {'k': 2.0}
    assert scenario.plan.count == 4 and scenario.plan.seed == 9
    assert scenario.plan.box['th'] == (0.3, 2.8)
    assert scenario.products['S'].coords == ('th', 'ph')
    assert scenario.split_fields['rotation'].part2.components['ph'] == Const(2.0)
    assert [c.title for c in scenario.checks] == ['ricci_oracle:S', 'spin']
    assert scenario.checks[0].expect == 'agree'


def test_constants_bind_into_warping_functions():
    scenario = load_scenario('appendix_a')
    assert scenario.spacetimes['case1'].sigma == Const(0.8)
    assert scenario.spacetimes['case2'].f == Const(0.8)
    assert evaluate(scenario.spacetime_fields['zeta2'].h, {'t': 1.0}) == 1.3


def test_empty_scenario_has_no_checks():
    scenario = loads_scenario("name: empty\n")
    assert scenario.checks == []
    assert loads_scenario("", source='blank.yaml').name == 'blank'


def test_unknown_chart_reference():
    text = "products:\n  W: {m1: A, m2: B}\n"
    with raises(UnresolvedReferenceError) as info:
        loads_scenario(text, source='w.yaml')
    assert 'products.W.m1' in str(info.value)


def test_yaml_syntax_error_location():
    with raises(ScenarioError) as info:
        loads_scenario("name: x\ncharts: {A: [1, 2\n", source='bad.yaml')
    assert re.match(r"bad\.yaml:\d+:\d+", info.value.location)


def test_asymmetric_metric():
    text = "charts:\n  A: {coords: [x, y], metric: [[1, x], [0, 1]]}\n"
    with raises(ScenarioError) as info:
        loads_scenario(text)
    assert 'charts.A.metric[1][0]' in str(info.value)


def test_metric_with_an_undeclared_symbol():
    with raises(UnresolvedReferenceError):
        loads_scenario("charts:\n  A: {coords: [x], diag: [q]}\n")


@mark.parametrize("text", (
    "charts:\n  A: {coords: [x, y], diag: [1]}\n",
    "charts:\n  A: {coords: [x], diag: [1]}\nfields:\n  v: {chart: A, components: {y: 1}}\n",
    "charts:\n  A: {coords: [x], diag: [1]}\nspacetimes:\n  S: {base: A, sigma: x}\n",
))
def test_dimension_mismatches(text):
    with raises(DimensionMismatchError):
        loads_scenario(text)


def test_unknown_section():
    with raises(ScenarioError) as info:
        loads_scenario("name: x\nmanifolds: {}\n")
    assert 'manifolds' in str(info.value)


def test_time_coordinate_collision():
    text = "charts:\n  A: {coords: [t], diag: [1]}\nspacetimes:\n  S: {base: A}\n"
    with raises(ScenarioError):
        loads_scenario(text)


def test_expectation_must_be_a_verdict_or_boolean():
    with raises(ScenarioError):
        loads_scenario("checks:\n  - {kind: soliton, expect: 3}\n")


def test_bad_sampling_block():
    with raises(ScenarioError):
        loads_scenario("sampling: {count: 0}\n")


def test_missing_scenario_file():
    with raises(ScenarioError):
        resolve_path('no_such_scenario')


def test_fixture_lookup_by_name():
    scenario = load_scenario('sphere')
    assert scenario.name == 'sphere'
    assert scenario.source.endswith('sphere.yaml')
