import json
from pathlib import Path

from pytest import mark, raises

from configs.config import PATHS
from warpcheck.__main__ import main
from warpcheck.errors import SamplingError, ScenarioError
from warpcheck.parser import load_scenario, loads_scenario
from warpcheck.runner import CHECKS, RunReport, emit, list_checks, run

FLAT = """
name: flat
sampling: {count: 3, seed: 5, box: {x: [-1, 1], y: [-1, 1]}}
charts:
  E2: {coords: [x, y], diag: [1, 1]}
fields:
  rotation: {chart: E2, components: {x: "-y", y: x}}
  dilation: {chart: E2, components: {x: x, y: y}}
checks:
  - {kind: killing, target: E2, args: {field: rotation}, expect: killing}
  - {kind: conformal, target: E2, args: {field: dilation}, expect: homothetic}
  - {kind: concurrent, target: E2, args: {field: dilation}, expect: true}
"""


FIXTURES = sorted(path.stem for path in Path(PATHS['fixture_dir']).glob('*.yaml'))


@mark.parametrize("name", FIXTURES)
def test_fixture_expectations_hold(name):
    report = run(load_scenario(name))
    assert report.exit_code == 0, report.summary().to_string()
    assert all(c.matched is not False for c in report.checks)
    assert emit(report, 'json') == emit(run(load_scenario(name)), 'json')


def test_every_fixture_is_checked():
    assert len(FIXTURES) >= 12
    assert {'sphere', 'hyperbolic', 'one_plus_two', 'einstein', 'doubly_warped'} <= set(FIXTURES)


def test_run_records_verdicts():
    report = run(loads_scenario(FLAT))
    assert [c.report.verdict for c in report.checks] == ['killing', 'homothetic', 'concurrent']
    assert report.exit_code == 0
    assert report.seed == 5


def test_mismatched_expectation_sets_the_exit_code():
    report = run(loads_scenario(FLAT.replace("expect: homothetic", "expect: killing")))
    assert report.exit_code == 1
    assert report.checks[1].matched is False


def test_overrides_reach_every_check():
    report = run(loads_scenario(FLAT), seed=11, tol=1e-6, samples=2)
    assert report.seed == 11 and report.tol == 1e-6
    assert all(len(c.report.table) == 2 for c in report.checks)


def test_unknown_check_kind():
    with raises(ScenarioError) as info:
        run(loads_scenario("checks:\n  - {kind: curvature_flow}\n"))
    assert 'checks[0].kind' in str(info.value)


def test_unresolved_argument_fails_before_any_check_runs():
    text = FLAT.replace("args: {field: dilation}, expect: true", "args: {field: shear}, expect: true")
    with raises(ScenarioError):
        run(loads_scenario(text))


def test_engine_errors_become_error_entries():
    text = """
charts:
  Th: {coords: [th], diag: [1]}
  S1: {coords: [ph], diag: [1]}
products:
  S: {m1: Th, m2: S1, f1: "sin(th)"}
checks:
  - {kind: geodesic, target: S, args: {position: {th: 1.0, ph: 0.0}, velocity: [0.0, 1.0], dt: 0.0, steps: 3}}
  - {kind: ricci_oracle, target: S, expect: agree}
"""
    report = run(loads_scenario(text), samples=2)
    error, ricci = report.checks
    assert error.report.verdict == 'error'
    assert error.report.notes[0].startswith('GeometryError')
    assert ricci.report.verdict == 'agree'


def test_json_output_is_deterministic():
    first = emit(run(loads_scenario(FLAT)), 'json')
    second = emit(run(loads_scenario(FLAT)), 'json')
    assert first == second
    data = json.loads(first)
    assert data['scenario'] == 'flat'
    assert [c['check'] for c in data['checks']] == ['killing', 'conformal', 'concurrent']
    restored = RunReport.from_dict(data)
    assert [c.report.verdict for c in restored.checks] == ['killing', 'homothetic', 'concurrent']
    assert restored.exit_code == 0


def test_text_output():
    text = emit(run(loads_scenario(FLAT)), 'text').decode('utf-8')
    assert text.startswith('scenario: flat')
    assert '3/3 checks passed, 0 expectation mismatches' in text
    assert 'rho=2' in text


def test_text_output_of_an_empty_scenario():
    assert 'no checks' in emit(run(loads_scenario("name: empty\n")), 'text').decode('utf-8')


def test_unknown_format():
    with raises(ValueError):
        emit(run(loads_scenario("name: empty\n")), 'xml')


def test_every_kind_is_listed():
    table = list_checks()
    assert set(table['kind']) == set(CHECKS)
    assert {'soliton', 'th2', 'appendix_families', 'geodesic'} <= set(CHECKS)


def test_cli_exit_codes(capsys):
    assert main(['verify', 'no_such_scenario']) == 2
    assert 'error:' in capsys.readouterr().err
    assert main(['list-checks']) == 0
    assert 'killing_decomposition' in capsys.readouterr().out


def test_cli_verify_json(capsys):
    assert main(['verify', 'gaussian_soliton', '--samples', '3', '--format', 'json']) == 0
    data = json.loads(capsys.readouterr().out)
    assert data['scenario'] == 'gaussian_soliton'
    assert len(data['checks']) == 10


def test_cli_without_a_command(capsys):
    assert main([]) == 2


@mark.parametrize("argv", (
    ['verify', 'sphere', '--samples', '0'],
    ['verify', 'sphere', '--tol', '-1'],
    ['appendix-a', '--samples', '0'],
))
def test_cli_rejects_bad_run_options(capsys, argv):
    assert main(argv) == 2
    captured = capsys.readouterr()
    assert 'error:' in captured.err
    assert captured.out == ''


def test_bad_overrides_fail_before_any_check_runs():
    with raises(SamplingError):
        run(loads_scenario(FLAT), samples=0)
