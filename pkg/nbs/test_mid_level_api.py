#!/usr/bin/env python3
"""
Walk through the Mid-Level API
Composable builders for classification runs
"""

from kato_toolkit import ClassificationBuilder
from kato_toolkit.config import Config, SearchConfig

QUICK = Config(search=SearchConfig(starts_per_dim=16, potential_starts=8, refine_top=2, max_iter=60))


def test_builder_run():
    """Stable process in d=1 with a short resolvent ladder."""
    print("🏗️ ClassificationBuilder - composable runs")
    print("=" * 60)

    report = (ClassificationBuilder(QUICK)
              .process("stable:alpha=1.5,d=1")
              .measure("lebesgue:box(-1,1)")
              .exponent(4)
              .ladder([1, 4, 16])
              .with_chen(False)
              .run())

    for name, verdict, detail in report.rows():
        print(f"  {name:14s} {verdict:13s} {detail}")
    print(f"Warnings: {report.warnings or 'none'}")
    return report.verdicts["S_K"].value == "IN"


def test_builder_validation():
    """Errors point at the offending field."""
    print("\n🧯 Builder validation")
    print("=" * 60)

    try:
        ClassificationBuilder(QUICK).measure("atoms:0@1").run()
    except Exception as e:
        print(f"Missing process rejected: {e}")
        return True
    return False


def test_custom_radii():
    """Shorter radius ladders and a shifted tail origin."""
    print("\n📏 Custom radii")
    print("=" * 60)

    report = (ClassificationBuilder(QUICK)
              .process("brownian:d=3")
              .measure("sphere:r=1,d=3")
              .exponent(1.5)
              .radii(local=[1e-6, 1e-4, 1e-2, 0.5], tail=[2, 4, 8])
              .centered_at([0.5, 0, 0])
              .with_chen(False)
              .run())
    local = report.profiles["reference_local"]
    print(f"Local profile {local.values} -> {local.verdict.value}")
    return local.verdict.value == "IN"


def main():
    """Run all mid-level walkthroughs."""
    print("🚀 MID-LEVEL API WALKTHROUGH")
    print("=" * 80)

    tests = [
        ("Builder run", test_builder_run),
        ("Builder validation", test_builder_validation),
        ("Custom radii", test_custom_radii),
    ]

    results = []
    for test_name, test_func in tests:
        try:
            success = bool(test_func())
            results.append((test_name, success))
            print(f"✅ {test_name}: {'PASSED' if success else 'FAILED'}")
        except Exception as e:
            print(f"❌ {test_name}: FAILED with error: {e}")
            results.append((test_name, False))

    print("\n" + "=" * 80)
    passed = sum(1 for _, success in results if success)
    print(f"Overall: {passed}/{len(results)} walkthroughs passed")
    return passed == len(results)


if __name__ == "__main__":
    main()
