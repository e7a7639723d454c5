#!/usr/bin/env python3
"""
Pre-flight check script for the intrinsic volume engine.
Run this script before a long sweep or tube batch to verify everything is set up correctly.
"""

import sys
import os
import traceback
from pathlib import Path

def check_imports():
    """Check if all required imports are available."""
    print("🔍 Checking imports...")

    required_packages = [
        'flask',
        'click',
        'dotenv',
        'numpy',
        'scipy',
        'lark',
    ]

    optional_packages = [
        'pytest',  # For the test suite
    ]

    missing_required = []

    for package in required_packages:
        try:
            __import__(package)
            print(f"  ✅ {package}")
        except ImportError:
            print(f"  ❌ {package} (REQUIRED)")
            missing_required.append(package)

    for package in optional_packages:
        try:
            __import__(package)
            print(f"  ✅ {package} (optional)")
        except ImportError:
            print(f"  ⚠️  {package} (optional - tests cannot run)")

    if missing_required:
        print(f"\n❌ Missing required packages: {', '.join(missing_required)}")
        print("Run: pip install -r requirements.txt")
        return False

    print("✅ All required imports available")
    return True

def check_file_structure():
    """Check if all required files exist."""
    print("\n🗂️  Checking file structure...")

    required_files = [
        'lk.py',
        'lkengine/__init__.py',
        'lkengine/cli.py',
        'lkengine/geometry/metricfield.py',
        'lkengine/geometry/weylsum.py',
        'lkengine/geometry/submersion.py',
        'lkengine/geometry/tubeoracle.py',
    ]

    missing_files = [path for path in required_files if not Path(path).exists()]
    for file_path in required_files:
        print(f"  {'❌ Missing file:' if file_path in missing_files else '✅'} {file_path}")

    if missing_files:
        print(f"\n❌ Missing files: {len(missing_files)}")
        return False

    print("✅ All required files present")
    return True

def check_configuration():
    """Check that the app builds and the quadrature cap is usable."""
    print("\n⚙️  Checking configuration...")

    try:
        sys.path.insert(0, os.getcwd())

        from lkengine import create_app

        app = create_app(os.environ.get('LK_ENV', 'development'))
        max_nodes = app.config['LK_MAX_NODES']
        print(f"  ✅ LK_MAX_NODES = {max_nodes}")
        print(f"  ✅ LK_WORKERS = {app.config['LK_WORKERS']}")
        if max_nodes < 48 ** 3:
            print("  ⚠️  LK_MAX_NODES is below 48^3; three-dimensional sweeps may not converge")

        print("✅ Configuration loaded")
        return True

    except Exception as e:
        print(f"❌ Configuration error: {str(e)}")
        traceback.print_exc()
        return False

def check_quick_suites():
    """Run the fast invariant suites."""
    print("\n🧮 Running quick suites...")

    try:
        from lkengine.checks import SUITES

        all_passed = True
        for name in ('parity', 'pfaffian', 'validate-zoo', 'gauss-bonnet'):
            result = SUITES[name]()
            print(f"  {'✅' if result.passed else '❌'} {name}")
            if not result.passed:
                for line in result.lines:
                    print(f"      {line}")
                all_passed = False

        return all_passed

    except Exception as e:
        print(f"❌ Suite error: {str(e)}")
        traceback.print_exc()
        return False

def main():
    """Run all pre-flight checks."""
    print("🚀 Intrinsic Volume Engine Pre-Flight Check")
    print("=" * 40)

    checks = [
        check_imports,
        check_file_structure,
        check_configuration,
        check_quick_suites,
    ]

    all_passed = True

    for check in checks:
        if not check():
            all_passed = False

    print("\n" + "=" * 40)

    if all_passed:
        print("🎉 ALL CHECKS PASSED! Ready to run.")
        print("\nNext steps:")
        print("1. Run a sweep: python lk.py sweep zoo:warped_s2_over_s1 --i 1")
        return 0
    else:
        print("❌ SOME CHECKS FAILED! Please fix the issues above.")
        print("\nCommon fixes:")
        print("1. Missing packages: pip install -r requirements.txt")
        print("2. Convergence failures: raise LK_MAX_NODES")
        return 1

if __name__ == "__main__":
    sys.exit(main())
