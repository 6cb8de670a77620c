#!/usr/bin/env python
"""
Debug script to verify that all components of warpcheck are working correctly.
Helps identify import or configuration issues before running a scenario.
"""
import os
import sys
import importlib
import inspect
import traceback

# Add project root to Python path
project_root = os.path.abspath(os.path.dirname(__file__))
sys.path.insert(0, project_root)

MODULES = (
    'configs.config',
    'configs.logging_config',
    'warpcheck',
    'warpcheck.logger',
    'warpcheck.errors',
    'warpcheck.expr',
    'warpcheck.sampling',
    'warpcheck.geometry',
    'warpcheck.reports',
    'warpcheck.warped',
    'warpcheck.spacetime',
    'warpcheck.soliton',
    'warpcheck.parser',
    'warpcheck.runner',
)


def print_traceback():
    """Print the frames of the exception being handled."""
    exc_type, exc_value, exc_traceback = sys.exc_info()
    for filename, lineno, func, text in traceback.extract_tb(exc_traceback):
        print(f"  File: {filename}, Line: {lineno}, in {func}")
        if text:
            print(f"    {text}")


def check_module(module_name):
    """Try to import a module and report its status."""
    try:
        module = importlib.import_module(module_name)
        print(f"✅ Successfully imported {module_name}")
    except ImportError as e:
        print(f"❌ Failed to import {module_name}")
        print(f"  Import Error: {e}")
        print_traceback()
        return False
    except Exception as e:
        print(f"❌ Error checking {module_name}")
        print(f"  Exception: {e}")
        print_traceback()
        return False

    # Print classes in the module
    classes = [name for name, obj in inspect.getmembers(module, inspect.isclass)
               if obj.__module__ == module.__name__]
    if classes:
        print(f"   Classes: {', '.join(classes)}")

    return True


def check_directory(dir_path, writable=True):
    """Check that a directory exists (creating it if writable) and is accessible."""
    if not os.path.exists(dir_path):
        if not writable:
            print(f"❌ Directory {dir_path} does not exist")
            return False
        try:
            os.makedirs(dir_path)
            print(f"✅ Created directory {dir_path}")
        except Exception as e:
            print(f"❌ Could not create directory {dir_path}")
            print(f"  Error: {e}")
            print(f"  Error Type: {type(e).__name__}")
            return False

    mode = os.W_OK if writable else os.R_OK
    if os.access(dir_path, mode):
        print(f"✅ Directory {dir_path} exists and is {'writable' if writable else 'readable'}")
        return True
    print(f"❌ Directory {dir_path} exists but is not {'writable' if writable else 'readable'}")
    print(f"  Current Permissions: {oct(os.stat(dir_path).st_mode)[-3:]}")
    return False


def check_env_file():
    """Report on the optional .env file."""
    env_path = os.path.join(project_root, '.env')
    if not os.path.exists(env_path):
        print("ℹ️  No .env file, using defaults (see .env.example)")
        return True
    try:
        with open(env_path, 'r') as f:
            lines = f.readlines()
        print(f"✅ Found .env file with {len(lines)} lines")
        return True
    except Exception as e:
        print("❌ Could not read .env file")
        print(f"  Error: {e}")
        print_traceback()
        return False


def check_fixtures(fixture_dir):
    """Load every scenario in the fixture directory without running it."""
    from warpcheck.parser import load_scenario
    from warpcheck.runner import prepare

    ok = True
    names = sorted(n for n in os.listdir(fixture_dir) if n.endswith(('.yaml', '.yml')))
    for name in names:
        try:
            scenario = load_scenario(os.path.join(fixture_dir, name))
            prepare(scenario)
            print(f"✅ {name}: {len(scenario.checks)} checks")
        except Exception as e:
            print(f"❌ {name}: {e}")
            ok = False
    return ok


def main():
    """Run diagnostic checks on warpcheck."""
    print("🔍 warpcheck Diagnostics\n")

    print(f"Python version: {sys.version}")
    print(f"Current directory: {os.getcwd()}")
    print(f"Project root: {project_root}")

    print("\n🧪 Testing imports:")
    modules_ok = True
    for module_name in MODULES:
        modules_ok &= check_module(module_name)

    print("\n🧪 Testing directories:")
    dirs_ok = True
    fixtures_ok = False
    if modules_ok:
        from configs.config import PATHS
        dirs_ok &= check_directory(PATHS['fixture_dir'], writable=False)
        dirs_ok &= check_directory(PATHS['log_dir'])
        if dirs_ok:
            print("\n🧪 Testing scenario files:")
            fixtures_ok = check_fixtures(PATHS['fixture_dir'])
    else:
        print("❌ Skipped: configuration could not be imported")
        dirs_ok = False

    print("\n🧪 Testing configuration:")
    env_ok = check_env_file()

    print("\n📊 Diagnostic Summary:")
    print("✅ All modules imported successfully" if modules_ok else "❌ Some modules failed to import")
    print("✅ Directories are available" if dirs_ok else "❌ Some directories are missing or not accessible")
    print("✅ All scenario files load" if fixtures_ok else "❌ Some scenario files failed to load")
    print("✅ Configuration is readable" if env_ok else "❌ Configuration (.env) file is unreadable")

    print("\n📝 Conclusion:")
    if modules_ok and dirs_ok and fixtures_ok and env_ok:
        print("✅ warpcheck appears to be correctly set up")
        return 0
    print("❌ warpcheck has configuration issues that need to be fixed")
    return 1


if __name__ == "__main__":
    sys.exit(main())
