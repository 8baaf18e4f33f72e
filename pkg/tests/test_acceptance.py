"""Acceptance criteria 1-13, one test each, printing a PASS/FAIL line.

Run with ``pytest -m acceptance -s`` to see the summary lines.
"""
import itertools
import json
import math

import mpmath as mp
import numpy as np
import pytest

from regschrod.cli import load_default_config, main
from regschrod.clifford import Multivector, dirac_fd, geometric_product
from regschrod.geometry import ManifoldKind, ManifoldSpec, SpinStructure, all_spin_structures, lattice_from_basis
from regschrod.kernel import eval_regularized, make_params, mass_constant, pde_residual
from regschrod.periodize import (
    TruncationPolicy,
    cylinder_kernel,
    klein_kernel,
    moebius_kernel,
    torus_kernel,
    truncation_radius,
)
from regschrod.verification import run_verification

pytestmark = pytest.mark.acceptance

POLICY = TruncationPolicy(abs_tol=1e-12)


def verdict(number, ok, detail):
    print("criterion %2d: %s  %s" % (number, "PASS" if ok else "FAIL", detail))
    assert ok, "criterion %d: %s" % (number, detail)


def suite(name, section, seed=20240601):
    report = run_verification(name, {"seed": seed, name: section})
    failed = [c for c in report["cases"] if not c["pass"]]
    return report, failed


def describe(report, failed):
    worst = failed[0] if failed else None
    text = "%d/%d cases pass" % (len(report["cases"]) - len(failed), len(report["cases"]))
    if worst:
        text += "; first failure %s measured %.3g vs %.3g" % (worst["case"], worst["measured"], worst["tolerance"])
    return text


def test_criterion_01_pde_annihilation():
    rng = np.random.default_rng(1)
    combos = list(itertools.product([1, 2, 3], [0.5, 1.0]))
    bad_ratio, bad_rel, worst_rel = 0, 0, 0.0
    for k in range(100):
        n, eps = combos[k % len(combos)]
        params = make_params(eps, n)
        while True:
            x = rng.uniform(-2, 2, size=n)
            if np.linalg.norm(x) <= 2:
                break
        t = rng.uniform(0.1, 1.0)
        F = lambda y, s: eval_regularized(y, s, params)
        r1 = abs(pde_residual(F, x, t, params, 1e-3))
        r2 = abs(pde_residual(F, x, t, params, 5e-4))
        bad_ratio += not 3.5 <= r1 / r2 <= 4.5
        rel = r1 / abs(F(x, t))
        worst_rel = max(worst_rel, rel)
        bad_rel += rel > 1e-4
    verdict(1, bad_ratio == 0 and bad_rel == 0,
            "ratio failures %d/100, relative residual failures %d/100 (worst %.3g)" % (bad_ratio, bad_rel, worst_rel))


def _mass_quadrature(eps, n, t):
    mp.mp.dps = 25
    a = mp.mpc(eps, 1) / (4 * (eps ** 2 + 1) * t)
    pref = mp.mpc(eps, 1) * mp.exp(-mp.mpf(n) / 2 * mp.log(4 * mp.pi * mp.mpc(eps, 1) * t))
    if n == 1:
        val = mp.quad(lambda r: mp.exp(-a * r ** 2), [-mp.inf, 0, mp.inf])
    else:
        shell = 2 * mp.pi if n == 2 else 4 * mp.pi
        val = shell * mp.quad(lambda r: r ** (n - 1) * mp.exp(-a * r ** 2), [0, mp.inf])
    return complex(pref * val)


def test_criterion_02_mass_constant():
    errs, spread = [], []
    for eps, n in [(1.0, 1), (1.0, 2), (0.5, 1), (0.5, 3)]:
        closed = mass_constant(make_params(eps, n))
        vals = [_mass_quadrature(eps, n, t) for t in (0.1, 1.0, 10.0)]
        errs += [abs(v - closed) / abs(closed) for v in vals]
        spread.append(max(abs(v - vals[0]) for v in vals) / abs(vals[0]))
    spots = [abs(_mass_quadrature(1.0, 1, 1.0) - math.sqrt(2)) / math.sqrt(2),
             abs(_mass_quadrature(1.0, 2, 1.0) - (1 - 1j)) / abs(1 - 1j)]
    ok = max(errs + spots) <= 1e-8 and max(spread) <= 1e-8
    verdict(2, ok, "closed-form error %.2g, spot error %.2g, t-spread %.2g" % (max(errs), max(spots), max(spread)))


def test_criterion_03_periodicity():
    report, failed = suite("periodicity", {"n": [1, 2, 3], "points": 20, "abs_tol": 1e-12, "rel_tol": 1e-10})
    verdict(3, not failed and len(report["cases"]) == 2 + 4 + 8, describe(report, failed))


def _naive(kind, spec, x, t, eps, radius):
    """Image sum over every coefficient vector whose translate lies within ``radius``."""
    B, n, k = spec.lattice.basis, spec.n, spec.rank
    box = int(math.ceil(radius / np.min(np.linalg.norm(B, axis=1)))) + 1
    m = np.array(list(itertools.product(range(-box, box + 1), repeat=k)), dtype=float)
    z = np.asarray(x, float) + m @ B
    if kind is ManifoldKind.MOEBIUS:
        z[:, -1] = np.where(np.any(m % 2, axis=1), -x[-1], x[-1])
    if kind is ManifoldKind.KLEIN:
        z[:, -1] = np.where(m[:, -1] % 2, -x[-1], x[-1]) + m[:, -1]
    keep = np.linalg.norm(m @ B, axis=1) <= radius
    chi = (-1.0) ** (m[:, [i - 1 for i in sorted(spec.spin.signs)]].sum(axis=1))
    r2 = np.sum(z ** 2, axis=1)
    pref = (eps + 1j) * (4 * math.pi * (eps + 1j) * t) ** (-n / 2)
    vals = (chi * pref * np.exp(-(eps + 1j) * r2 / (4 * (eps ** 2 + 1) * t)))[keep]
    return complex(math.fsum(vals.real), math.fsum(vals.imag))


def _spec(kind, basis, spin=()):
    return ManifoldSpec(kind, lattice_from_basis(basis), SpinStructure(frozenset(spin)))


def test_criterion_04_oracle_equivalence():
    rng = np.random.default_rng(4)
    eps, t = 1.0, 0.2
    params = {n: make_params(eps, n) for n in (1, 2, 3)}
    cases = [
        (ManifoldKind.TORUS, torus_kernel, [[1.0, 0.0], [0.3, 1.1]], (1,)),
        (ManifoldKind.TORUS, torus_kernel, [[0.9, 0.1, 0.0], [0.0, 1.0, 0.2], [0.1, 0.0, 1.2]], (2,)),
        (ManifoldKind.CYLINDER, cylinder_kernel, [[1.0, 0.0, 0.0], [0.4, 1.1, 0.0]], (2,)),
        (ManifoldKind.MOEBIUS, moebius_kernel, [[1.2, 0.0]], ()),
        (ManifoldKind.MOEBIUS, moebius_kernel, [[1.2, 0.0]], (1,)),
        (ManifoldKind.KLEIN, klein_kernel, [[1.3, 0.0], [0.0, 1.0]], ()),
        (ManifoldKind.KLEIN, klein_kernel, [[1.3, 0.0], [0.0, 1.0]], (1, 2)),
    ]
    oracle_err = 0.0
    for kind, fn, basis, spin in cases:
        sp = _spec(kind, basis, spin)
        n = sp.n
        R = truncation_radius(params[n], t, POLICY, sp.lattice, copies=2)
        for _ in range(5):
            x = rng.uniform(-0.6, 0.6, size=n)
            oracle_err = max(oracle_err, abs(fn(x, t, sp, params[n], POLICY) - _naive(kind, sp, x, t, eps, 2 * R)))

    moebius = _spec(ManifoldKind.MOEBIUS, [[1.2, 0.0]])
    cylinder = _spec(ManifoldKind.CYLINDER, [[1.2, 0.0]])
    X = rng.uniform(-1, 1, size=(20, 2))
    even_err = float(np.max(np.abs(moebius_kernel(X, t, moebius, params[2], POLICY)
                                   - cylinder_kernel(X, t, cylinder, params[2], POLICY))))

    klein = _spec(ManifoldKind.KLEIN, [[1.3, 0.0], [0.0, 1.0]])
    torus = _spec(ManifoldKind.TORUS, [[1.3, 0.0], [0.0, 1.0]])
    probes = np.column_stack([rng.uniform(-0.6, 0.6, 50), rng.uniform(0.05, 0.45, 50)])
    twist = float(np.max(np.abs(klein_kernel(probes, t, klein, params[2], POLICY)
                                - torus_kernel(probes, t, torus, params[2], POLICY))))
    ok = oracle_err <= 1e-8 and even_err <= 1e-12 and twist >= 1e-3
    verdict(4, ok, "oracle error %.2g, Moebius-cylinder %.2g, Klein-torus max difference %.2g (need >= 1e-3)"
            % (oracle_err, even_err, twist))


def test_criterion_05_spectral_vs_convolution():
    report, failed = suite("semigroup", {"n": [], "cross": {"n": [1, 2], "grid": 64, "times": [0.05, 0.5], "tol": 1e-6}})
    verdict(5, not failed and len(report["cases"]) == 8, describe(report, failed))


def test_criterion_06_contraction():
    reports = [suite("contraction", {"n": n, "grid": 64 if n == 1 else 32, "samples": 50, "spin": spin,
                                     "p": [1.6, 2.0, 2.9], "times": [0.05, 0.5]})
               for n, spin in [(1, []), (2, [2])]]
    cases = [c for r, _ in reports for c in r["cases"]]
    failed = [c for _, f in reports for c in f]
    verdict(6, not failed, describe({"cases": cases}, failed))


def test_criterion_07_semigroup_law():
    report, failed = suite("semigroup", {"n": [1, 2, 3], "grid": 16, "times": [0.1, 0.3], "law_tol": 1e-10})
    verdict(7, not failed and len(report["cases"]) == 12, describe(report, failed))


def test_criterion_08_recovery():
    report, failed = suite("recovery", {"p": [1.6, 2.0, 2.9], "times": [1e-1, 1e-2, 1e-3], "tol": 1e-3})
    verdict(8, not failed, describe(report, failed))


def test_criterion_09_dissipativity():
    report, failed = suite("dissipativity", {"samples": 20, "p": [1.2, 2.0, 2.9], "tol": 1e-10, "grid": 128})
    verdict(9, not failed, describe(report, failed))


def test_criterion_10_weak_limit():
    report, failed = suite("limit", {"period": 30.0, "steps": 8, "functions": 3, "nx": 160, "nt": 120})
    verdict(10, not failed and len(report["cases"]) == 3, describe(report, failed))


def _random_mv(rng, n):
    # small integer coefficients keep every product exact in binary64
    return Multivector(n, rng.integers(-9, 10, size=1 << n) + 1j * rng.integers(-9, 10, size=1 << n))


def test_criterion_11_clifford_dirac():
    rng = np.random.default_rng(11)
    mismatches = 0
    for n in range(1, 5):
        e = [Multivector.blade(n, [i]) for i in range(1, n + 1)]
        for i, j in itertools.product(range(n), repeat=2):
            anti = geometric_product(e[i], e[j]) + geometric_product(e[j], e[i])
            mismatches += not np.array_equal(anti.coeffs, Multivector.scalar(n, -2.0 if i == j else 0.0).coeffs)
        for _ in range(20):
            a, b, c = (_random_mv(rng, n) for _ in range(3))
            left = geometric_product(geometric_product(a, b), c)
            right = geometric_product(a, geometric_product(b, c))
            mismatches += not np.array_equal(left.coeffs, right.coeffs)
    fields = [
        (lambda X, Y: np.sin(X) * np.cos(2 * Y), lambda X, Y: -5 * np.sin(X) * np.cos(2 * Y)),
        (lambda X, Y: np.exp(-(X ** 2 + Y ** 2)), lambda X, Y: (4 * (X ** 2 + Y ** 2) - 4) * np.exp(-(X ** 2 + Y ** 2))),
        (lambda X, Y: X ** 3 * Y + Y ** 4, lambda X, Y: 6 * X * Y + 12 * Y ** 2),
    ]
    ratios = []
    for u, lap in fields:
        errs = []
        for M in (40, 80):
            h = 2.0 / M
            g = np.linspace(-1, 1, M + 1)
            X, Y = np.meshgrid(g, g, indexing="ij")
            DDu = dirac_fd(dirac_fd(u(X, Y), h), h, n=2)
            errs.append(np.max(np.abs(DDu[..., 0] + lap(X, Y)[2:-2, 2:-2])))
        ratios.append(errs[0] / errs[1])
    ok = mismatches == 0 and all(3.5 <= r <= 4.5 for r in ratios)
    verdict(11, ok, "algebra mismatches %d, Dirac halving ratios %s" % (mismatches, ", ".join("%.3f" % r for r in ratios)))


def test_criterion_12_guenter():
    report, failed = suite("guenter", {"points": 100, "h": 1e-3, "tol": 1e-4})
    verdict(12, not failed and len(report["cases"]) == 2, describe(report, failed))


def test_criterion_13_cli_determinism(tmp_path, capsys):
    outs = [tmp_path / ("report%d.json" % k) for k in range(2)]
    codes = [main(["verify", "--suite", "all", "--out", str(o)]) for o in outs]
    same_json = outs[0].read_bytes() == outs[1].read_bytes()
    report = json.loads(outs[0].read_text())
    failed = [c for c in report["cases"] if not c["pass"]]
    csvs = [tmp_path / ("grid%d.csv" % k) for k in range(2)]
    for c in csvs:
        main(["solve", "--n", "2", "--eps", "1", "--grid", "16", "--times", "0.1,0.5", "--spin", "1", "--out", str(c)])
    same_csv = csvs[0].read_bytes() == csvs[1].read_bytes()
    capsys.readouterr()
    suites = sorted({c["suite"] for c in failed})
    ok = codes == [0, 0] and not failed and same_json and same_csv
    verdict(13, ok, "exit codes %s, %d/%d cases pass (failing suites: %s), byte-identical JSON %s, CSV %s"
            % (codes, len(report["cases"]) - len(failed), len(report["cases"]), suites or "none", same_json, same_csv))
