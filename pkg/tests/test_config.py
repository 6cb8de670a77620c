import os

from configs.config import PATHS, ROOT_DIR, _env_path
from warpcheck.parser import load_scenario


def test_directories_are_absolute():
    assert os.path.isabs(PATHS['fixture_dir'])
    assert os.path.isabs(PATHS['log_dir'])


def test_relative_directory_resolves_against_the_project_root(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('WARPCHECK_FIXTURE_DIR', 'fixtures')
    assert _env_path('WARPCHECK_FIXTURE_DIR', 'unused') == os.path.join(ROOT_DIR, 'fixtures')


def test_absolute_directory_is_kept(monkeypatch, tmp_path):
    monkeypatch.setenv('WARPCHECK_FIXTURE_DIR', str(tmp_path))
    assert _env_path('WARPCHECK_FIXTURE_DIR', 'fixtures') == str(tmp_path)


def test_unset_directory_uses_the_default(monkeypatch):
    monkeypatch.delenv('WARPCHECK_LOG_DIR', raising=False)
    assert _env_path('WARPCHECK_LOG_DIR', 'logs') == os.path.join(ROOT_DIR, 'logs')


def test_fixture_lookup_does_not_depend_on_the_working_directory(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    assert load_scenario('sphere').name == 'sphere'
