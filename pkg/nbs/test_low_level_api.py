#!/usr/bin/env python3
"""
Walk through the Low-Level API
Kernels, forms and estimators called directly
"""

import math

import numpy as np

from kato_toolkit.forms import assemble_local, dirichlet_eigenvalues, stollmann_voigt_check
from kato_toolkit.geometry import Domain
from kato_toolkit.kernels import ProcessSpec, green_kernel, heat_kernel, psi, self_test
from kato_toolkit.stochastic import PathConfig, fk_decay_rate


def test_kernel_self_test():
    """Closed-form identities."""
    print("🔬 Kernel self test")
    print("=" * 60)

    checks = self_test()
    for c in checks:
        print(f"  {'✅' if c.passed else '❌'} {c.name}: {c.detail}")
    return all(c.passed for c in checks)


def test_kernels():
    """Pointwise kernels and the damping factor Psi."""
    print("\n📐 Kernels")
    print("=" * 60)

    g = green_kernel(ProcessSpec.brownian(3), [0, 0, 0], [1, 0, 0])
    p = heat_kernel(ProcessSpec.stable(1.0, 1), 2.0, [0.0], [1.0])
    print(f"G(1) = {g.value:.8f} via {g.method.value}")
    print(f"Cauchy p_2(1) = {p.value:.8f} (expected {2 / (5 * math.pi):.8f})")
    print(f"Psi(1), d=3, alpha=1: {psi(1.0, 3, 1.0):.6f}")
    return abs(p.value - 2 / (5 * math.pi)) < 1e-10


def test_forms():
    """Dirichlet spectrum and Stollmann-Voigt margins on (0, 1)."""
    print("\n🧱 Discrete Dirichlet forms")
    print("=" * 60)

    unit = Domain.interval(0.0, 1.0)
    report = dirichlet_eigenvalues(unit, 3)
    print(f"lambda_k = {report.values} (expected {[(k * math.pi) ** 2 / 2 for k in (1, 2, 3)]})")
    form = assemble_local(unit, 1 / 128)
    sv = stollmann_voigt_check(form, 1.0, [np.sin(math.pi * form.nodes[:, 0])])
    print(f"Stollmann-Voigt margin for sin(pi x): {sv.min_margin:.6f} (expected {math.pi ** 2 / 16 - 0.5:.6f})")
    return report.converged and sv.holds


def test_ground_state():
    """lambda_0 of the harmonic oscillator from Feynman-Kac decay."""
    print("\n🌊 Feynman-Kac decay")
    print("=" * 60)

    spec = ProcessSpec.brownian(1)
    cfg = PathConfig(process=spec, dt=1e-2, paths=20_000, batch_size=5_000)
    rate = fk_decay_rate(spec, lambda x: 0.5 * np.sum(x ** 2, axis=-1), None, [1, 2, 4, 8], [[0.0]], cfg)
    print(f"lambda_0 = {rate.rate:.4f} +- {rate.standard_error:.4f} (expected 0.5)")
    return abs(rate.rate - 0.5) < 0.05


def main():
    """Run all low-level walkthroughs."""
    print("🚀 LOW-LEVEL API WALKTHROUGH")
    print("=" * 80)

    tests = [
        ("Kernel self test", test_kernel_self_test),
        ("Kernels", test_kernels),
        ("Forms", test_forms),
        ("Ground state", test_ground_state),
    ]

    results = []
    for test_name, test_func in tests:
        try:
            print(f"\n🔄 Running: {test_name}")
            success = bool(test_func())
            results.append((test_name, success))
            print(f"✅ {test_name}: {'PASSED' if success else 'FAILED'}")
        except Exception as e:
            print(f"❌ {test_name}: FAILED with error: {e}")
            results.append((test_name, False))

    print("\n" + "=" * 80)
    print("📊 WALKTHROUGH SUMMARY")
    print("=" * 80)
    passed = sum(1 for _, success in results if success)
    for test_name, success in results:
        print(f"  {'✅ PASS' if success else '❌ FAIL'} {test_name}")
    print(f"\nOverall: {passed}/{len(results)} walkthroughs passed")
    return passed == len(results)


if __name__ == "__main__":
    main()
