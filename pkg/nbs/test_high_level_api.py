#!/usr/bin/env python3
"""
Walk through the High-Level API
One call per question, shorthand text everywhere
"""

import math

from kato_toolkit import b0, classify_measure, exit_time, feynman_kac_at, kato_profile, potential_at
from kato_toolkit.config import Config, MonteCarloConfig

QUICK = Config(monte_carlo=MonteCarloConfig(paths=20_000, dt=1e-3, batch_size=5_000))


def test_newtonian_potential():
    """Potential of the unit ball at its center."""
    print("🧮 Newtonian potential of the unit ball")
    print("=" * 60)

    res = potential_at("brownian:d=3", "lebesgue:ball(0,1)", [0, 0, 0])
    print(f"G mu(0) = {res.value:.8f} (expected 1), status {res.status.value}")
    return abs(res.value - 1.0) < 1e-6


def test_kato_thresholds():
    """Local Kato profiles on both sides of p* = 3."""
    print("\n📉 Local Kato profiles, Brownian motion in d=3")
    print("=" * 60)

    verdicts = {}
    for p in (2.0, 3.5):
        profile = kato_profile("brownian:d=3", "lebesgue:ball(0,1)", p)
        verdicts[p] = profile.verdict.value
        print(f"p={p:g}: {profile.verdict.value}  last values {profile.values[:3]}")
    return verdicts == {2.0: "IN", 3.5: "OUT"}


def test_classification():
    """Full class report of a Dirac mass."""
    print("\n🏷️ Classifying a Dirac mass")
    print("=" * 60)

    report = classify_measure("brownian:d=3", "atoms:0;0;0@1", chen=False)
    for name, verdict, detail in report.rows():
        print(f"  {name:14s} {verdict:13s} {detail}")
    return report.verdicts["S_K"].value == "OUT"


def test_b0_domains():
    """Strip versus exponential horn."""
    print("\n🗺️ B0 profiles")
    print("=" * 60)

    strip = b0("strip:w=1,d=2")
    horn = b0("horn:exp,rate=1,d=2")
    print(f"strip: {strip.verdict.value}  horn: {horn.verdict.value}")
    return strip.verdict.value == "OUT" and horn.verdict.value == "IN"


def test_paths():
    """Exit time and Feynman-Kac with a constant potential."""
    print("\n🎲 Monte Carlo")
    print("=" * 60)

    tau = exit_time("brownian:d=1", "interval(-1,1)", [0.0], config=QUICK)
    fk = feynman_kac_at("brownian:d=1", "constant,scale=1", 1.0, [0.0], config=QUICK)
    print(f"E_0 tau = {tau.value:.4f} +- {tau.standard_error:.4f} (expected 1)")
    print(f"P_1^-V 1(0) = {fk.value:.6f} (expected {math.exp(-1):.6f})")
    return abs(tau.value - 1.0) < 0.05


def main():
    """Run all high-level walkthroughs."""
    print("🚀 HIGH-LEVEL API WALKTHROUGH")
    print("=" * 80)

    tests = [
        ("Newtonian potential", test_newtonian_potential),
        ("Kato thresholds", test_kato_thresholds),
        ("Classification", test_classification),
        ("B0 domains", test_b0_domains),
        ("Paths", test_paths),
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
