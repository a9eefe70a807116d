#!/usr/bin/env python3
"""
Test runner for kato-toolkit.
Runs test categories by marker: quick closed-form checks first, acceptance runs last.
Extra arguments after the category go straight to pytest.
"""

import os
import subprocess
import sys
from pathlib import Path

# category -> (banner, pytest arguments)
CATEGORIES = {
    "smoke": ("🔥 SMOKE TESTS - Quick validation", ["tests/", "-m", "smoke", "--no-cov"]),
    "unit": ("🧮 UNIT TESTS - Closed-form oracles", ["tests/", "-m", "unit and not slow", "--no-cov"]),
    "functional": ("🚀 FUNCTIONAL TESTS - Acceptance runs",
                   ["tests/functional/", "-m", "functional and not slow", "--no-cov"]),
    "slow": ("⏰ SLOW TESTS - Large Monte Carlo and grid runs", ["tests/", "-m", "slow", "--no-cov"]),
    "all": ("🎯 ALL TESTS", ["tests/", "--no-cov"]),
    "coverage": ("📊 COVERAGE ANALYSIS",
                 ["tests/", "-m", "not slow", "--cov=kato_toolkit", "--cov-report=term-missing",
                  "--cov-report=html:htmlcov"]),
}


def run_category(name, extra):
    """Run one category with live output; returns True on success."""
    banner, args = CATEGORIES[name]
    print("=" * 60)
    print(banner)
    print("=" * 60)

    cmd = [sys.executable, "-m", "pytest", *args, *extra]
    print(f"Running: {' '.join(cmd)}")
    code = subprocess.call(cmd)
    if code != 0:
        print(f"pytest exited with code {code}")
        return False
    if name == "coverage":
        print("📁 HTML report saved to: htmlcov/index.html")
    return True


def show_test_summary():
    """Show available test commands."""
    print("=" * 60)
    print("🧪 KATO-TOOLKIT TEST RUNNER")
    print("=" * 60)
    print()
    print("Available test commands:")
    print()
    print("  smoke      - Quick validation tests (imports, closed forms)")
    print("  unit       - Unit tests per module")
    print("  functional - Acceptance runs (excluding slow ones)")
    print("  slow       - Large Monte Carlo and grid runs")
    print("  all        - Run all tests")
    print("  coverage   - Run the fast tests with coverage analysis")
    print("  help       - Show this help")
    print()
    print("Examples:")
    print("  python run_tests.py smoke")
    print("  python run_tests.py unit -k Stollmann")
    print("  python run_tests.py coverage")
    print()
    print("Reproducibility:")
    print("  - Monte Carlo tests pass fixed seeds explicitly")
    print("  - Report files are written to pytest temporary directories")
    print()


def main():
    """Main test runner."""
    if len(sys.argv) < 2 or sys.argv[1].lower() in ("help", "-h", "--help"):
        show_test_summary()
        return

    command = sys.argv[1].lower()
    if command not in CATEGORIES:
        print(f"Unknown command: {command}")
        show_test_summary()
        sys.exit(2)

    project_root = Path(__file__).parent
    os.chdir(project_root)
    os.environ["PYTHONPATH"] = os.pathsep.join(filter(None, [str(project_root), os.environ.get("PYTHONPATH")]))

    if run_category(command, sys.argv[2:]):
        print()
        print("🎉 Tests completed successfully!")
        sys.exit(0)
    print()
    print("❌ Tests failed!")
    sys.exit(1)


if __name__ == "__main__":
    main()
