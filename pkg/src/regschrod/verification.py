"""Numerical certificates gathered into suites with a machine-readable report.

A config is a JSON-like dict; each suite runs only when its section is
present, so an empty config yields an empty (passing) report.
"""
import hashlib
import json
import math

import numpy as np

from .geometry import (
    ManifoldKind,
    ManifoldSpec,
    SpinStructure,
    all_spin_structures,
    character,
    lattice_from_basis,
)
from .guenter import AmbientFunction, guenter_laplacian
from .kernel import RegKernelParams, eval_regularized, make_params, pde_residual
from .periodize import TruncationPolicy, periodized_kernel
from .semigroup import (
    PolyGaussian,
    apply_convolution,
    apply_spectral,
    dissipativity_pairing,
    lp_norm,
    make_grid,
    spectral_data,
    weak_limit_pairings,
)

__all__ = ["SUITES", "config_hash", "run_verification", "random_bandlimited", "bump"]

SUITES = ("pde", "periodicity", "contraction", "semigroup", "dissipativity",
          "recovery", "limit", "guenter")


def config_hash(config):
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _case(suite, case, measured, tolerance, ok):
    return {"suite": suite, "case": case, "measured": float(measured),
            "tolerance": float(tolerance), "pass": bool(ok)}


def bump(s):
    """Smooth bump ``exp(-1 / (1 - s^2))`` supported on ``|s| < 1``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def random_bandlimited(spec, N, rng, band=4):
    """Grid function with random Fourier coefficients on ``|q_i| <= band``."""
    n = spec.n
    coeffs = np.zeros((N,) * n, dtype=complex)
    idx = np.arange(-band, band + 1) % N
    shape = (2 * band + 1,) * n
    coeffs[np.ix_(*[idx] * n)] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    s = spec.spin.mask(n) * 0.5
    j = np.stack(np.meshgrid(*[np.arange(N)] * n, indexing="ij"), axis=-1)
    samples = np.fft.ifftn(coeffs) * np.exp(2j * math.pi * (j @ s) / N)
    return make_grid(spec, N, lambda x: np.zeros(x.shape[:-1])).with_samples(samples)


def _torus(n, rng, spin=frozenset(), jitter=0.2):
    basis = np.eye(n) + jitter * np.triu(rng.uniform(-1, 1, size=(n, n)), 1)
    return ManifoldSpec(ManifoldKind.TORUS, lattice_from_basis(basis), SpinStructure(spin))


def _suite_pde(cfg, rng):
    cases = []
    h = cfg.get("h", 1e-3)
    rel_tol = cfg.get("rel_tol", 1e-4)
    lo, hi = cfg.get("ratio", [3.5, 4.5])
    for n in cfg.get("n", [1, 2, 3]):
        for eps in cfg.get("eps", [0.5, 1.0]):
            params = make_params(eps, n)

            def F(y, s):
                return eval_regularized(y, s, params)

            for k in range(cfg.get("points", 10)):
                while True:
                    x = rng.uniform(-2, 2, size=n)
                    if np.linalg.norm(x) <= 2:
                        break
                t = rng.uniform(0.1, 1.0)
                r1 = abs(pde_residual(F, x, t, params, h))
                r2 = abs(pde_residual(F, x, t, params, h / 2))
                ratio = r1 / r2
                rel = r1 / abs(F(x, t))
                tag = "n=%d,eps=%g,#%d" % (n, eps, k)
                cases.append(_case("pde", tag + " ratio", ratio, hi, lo <= ratio <= hi))
                cases.append(_case("pde", tag + " relative residual", rel, rel_tol, rel <= rel_tol))
    return cases


def _suite_periodicity(cfg, rng):
    cases = []
    policy = TruncationPolicy(cfg.get("abs_tol", 1e-12))
    eps = cfg.get("eps", 1.0)
    tol = cfg.get("rel_tol", 1e-10)
    for n in cfg.get("n", [1, 2, 3]):
        params = make_params(eps, n)
        base = _torus(n, rng)
        for spin in all_spin_structures(n):
            spec = ManifoldSpec(ManifoldKind.TORUS, base.lattice, spin)
            worst = 0.0
            for _ in range(cfg.get("points", 5)):
                x = rng.uniform(-0.5, 1.5, size=n)
                t = rng.uniform(*cfg.get("t", [0.1, 1.0]))
                value = periodized_kernel(x, t, spec, params, policy)
                for j in range(n):
                    shifted = periodized_kernel(x + spec.lattice.basis[j], t, spec, params, policy)
                    e_j = np.eye(n, dtype=int)[j]
                    err = abs(shifted - character(spin, e_j) * value) / (1 + abs(value))
                    worst = max(worst, err)
            cases.append(_case("periodicity", "n=%d,S=%s" % (n, sorted(spin.signs)), worst, tol, worst <= tol))
    return cases


def _params_for(cfg, n, corrupt):
    eps = cfg.get("eps", 1.0)
    # a sign-flipped eps turns the multiplier into exp(+|eps| lambda t)
    return RegKernelParams(-eps, n) if corrupt else make_params(eps, n)


def _suite_contraction(cfg, rng, corrupt):
    cases = []
    n, N = cfg.get("n", 1), cfg.get("grid", 64)
    spec = _torus(n, rng, cfg.get("spin", []))
    params = _params_for(cfg, n, corrupt)
    tol = cfg.get("tol", 1e-6)
    data = spectral_data(spec, N)
    for t in cfg.get("times", [0.05, 0.5]):
        m = data.multiplier(t, params)
        dev = float(np.max(np.abs(np.abs(m) - np.exp(-params.epsilon * data.eigenvalues * t))))
        cases.append(_case("contraction", "modulus identity t=%g" % t, dev, 1e-12, dev <= 1e-12))
    for p in cfg.get("p", [1.6, 2.0, 2.9]):
        for t in cfg.get("times", [0.05, 0.5]):
            worst = 0.0
            for _ in range(cfg.get("samples", 10)):
                u = random_bandlimited(spec, N, rng, cfg.get("band", 4))
                worst = max(worst, lp_norm(apply_spectral(u, t, params), p) / lp_norm(u, p))
            cases.append(_case("contraction", "p=%g,t=%g ratio" % (p, t), worst, 1 + tol, worst <= 1 + tol))
    return cases


def _trig_data(spec, N):
    d = spec.lattice.dual
    off = 0.5 * spec.spin.mask(spec.n) @ d

    def f(x):
        phase = np.exp(2j * math.pi * (x @ off))
        return phase * (1 + 0.3 * np.cos(2 * math.pi * (x @ d[0]))
                        + 0.2j * np.sin(4 * math.pi * (x @ d[-1])))

    return make_grid(spec, N, f)


def _suite_semigroup(cfg, rng, corrupt):
    cases = []
    law_tol = cfg.get("law_tol", 1e-10)
    for n in cfg.get("n", [1, 2]):
        params = _params_for(cfg, n, corrupt)
        spec = _torus(n, rng)
        u = random_bandlimited(spec, cfg.get("grid", 32), rng)
        norm = lp_norm(u, 2)
        for s in cfg.get("times", [0.1, 0.3]):
            for t in cfg.get("times", [0.1, 0.3]):
                err = lp_norm(apply_spectral(u, s + t, params) - apply_spectral(apply_spectral(u, t, params), s, params), 2)
                cases.append(_case("semigroup", "law n=%d s=%g t=%g" % (n, s, t), err / norm, law_tol, err <= law_tol * norm))
    cross = cfg.get("cross", {})
    if cross:
        tol = cross.get("tol", 1e-6)
        policy = TruncationPolicy(cross.get("abs_tol", 1e-12))
        for n in cross.get("n", [1, 2]):
            params = _params_for(cfg, n, corrupt)
            for spin in ([], [n]):
                spec = _torus(n, rng, spin)
                u = _trig_data(spec, cross.get("grid", 64))
                for t in cross.get("times", [0.05, 0.5]):
                    a = apply_spectral(u, t, params)
                    b = apply_convolution(u, t, params, policy)
                    rel = lp_norm(a - b, math.inf) / lp_norm(a, math.inf)
                    cases.append(_case("semigroup", "spectral/convolution n=%d S=%s t=%g" % (n, spin, t),
                                       rel, tol, rel <= tol))
    return cases


def random_poly_gaussian(n, rng):
    return PolyGaussian(center=tuple(rng.uniform(-0.5, 0.5, size=n)), rate=float(rng.uniform(0.8, 2.0)),
                        c0=float(rng.uniform(0.5, 1.5)), slope=tuple(rng.uniform(-1, 1, size=n)))


def _suite_dissipativity(cfg, rng):
    cases = []
    n = cfg.get("n", 2)
    tol = cfg.get("tol", 1e-10)
    for k in range(cfg.get("samples", 5)):
        u = random_poly_gaussian(n, rng)
        for p in cfg.get("p", [1.2, 2.0, 2.9]):
            val = dissipativity_pairing(u, p, n=n, M=cfg.get("grid", 128))
            cases.append(_case("dissipativity", "bump #%d p=%g" % (k, p), val, tol, val <= tol))
    return cases


def _suite_recovery(cfg, rng, corrupt):
    cases = []
    period = cfg.get("period", 2 * math.pi)
    spec = ManifoldSpec(ManifoldKind.TORUS, lattice_from_basis([[period]]))
    params = _params_for(cfg, 1, corrupt)
    w = 2 * math.pi / period
    u0 = make_grid(spec, cfg.get("grid", 64),
                   lambda x: 1 + 0.1 * np.cos(w * x[..., 0]) + 0.05 * np.sin(2 * w * x[..., 0]))
    times = cfg.get("times", [1e-1, 1e-2, 1e-3])
    tol = cfg.get("tol", 1e-3)
    for p in cfg.get("p", [1.6, 2.0, 2.9]):
        errs = [lp_norm(apply_spectral(u0, t, params) - u0, p) for t in times]
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        cases.append(_case("recovery", "p=%g decreasing" % p, max(b / a for a, b in zip(errs, errs[1:])), 1.0, decreasing))
        cases.append(_case("recovery", "p=%g t=%g" % (p, times[-1]), errs[-1], tol, errs[-1] <= tol))
    return cases


def limit_test_functions(L):
    c = L / 2

    def window(t):
        return bump((t - 1.5) / 0.5)

    return [
        lambda X, t: bump((X[:, 0] - c) / (0.4 * L)) * window(t),
        lambda X, t: np.cos(0.3 * X[:, 0]) * bump((X[:, 0] - c) / (0.35 * L)) * window(t) * t,
        lambda X, t: (X[:, 0] - c) ** 2 * bump((X[:, 0] - c) / (0.4 * L)) * window(t),
    ]


def _suite_limit(cfg, rng):
    cases = []
    L = cfg.get("period", 30.0)
    spec = ManifoldSpec(ManifoldKind.TORUS, lattice_from_basis([[L]]))
    eps = 2.0 ** -np.arange(1, cfg.get("steps", 8) + 1)
    for k, phi in enumerate(limit_test_functions(L)[:cfg.get("functions", 3)]):
        res = weak_limit_pairings(phi, eps, (1.0, 2.0), spec, nx=cfg.get("nx", 192), nt=cfg.get("nt", 200))
        worst = float(np.max(res.ratios[-3:]))
        cases.append(_case("limit", "phi #%d last ratios" % k, worst, 1.0, worst < 1.0))
    return cases


def _suite_guenter(cfg, rng):
    cases = []
    h = cfg.get("h", 1e-3)
    tol = cfg.get("tol", 1e-4)
    harmonics = {
        1: AmbientFunction(3, lambda x: x[0]),
        2: AmbientFunction(3, lambda x: x[0] * x[1]),
    }
    for l, f in harmonics.items():
        worst = 0.0
        top = 0.0
        for _ in range(cfg.get("points", 100)):
            x = rng.normal(size=3)
            x /= np.linalg.norm(x)
            worst = max(worst, abs(guenter_laplacian(f, x, h) + l * (l + 1) * f(x)))
            top = max(top, abs(f(x)))
        rel = worst / top
        cases.append(_case("guenter", "n=3 l=%d" % l, rel, tol, rel <= tol))
    return cases


def run_verification(suite, config):
    """Run ``suite`` (or ``"all"``) over the sections present in ``config``."""
    if suite != "all" and suite not in SUITES:
        raise ValueError("unknown suite %r; choose from %s or 'all'" % (suite, ", ".join(SUITES)))
    seed = int(config.get("seed", 0))
    corrupt = bool(config.get("corrupt_multiplier", False))
    names = SUITES if suite == "all" else (suite,)
    cases = []
    for name in names:
        cfg = config.get(name)
        if cfg is None:
            continue
        # one generator per suite keeps suites independent of each other
        rng = np.random.default_rng([seed, SUITES.index(name)])
        if name == "pde":
            cases += _suite_pde(cfg, rng)
        elif name == "periodicity":
            cases += _suite_periodicity(cfg, rng)
        elif name == "contraction":
            cases += _suite_contraction(cfg, rng, corrupt)
        elif name == "semigroup":
            cases += _suite_semigroup(cfg, rng, corrupt)
        elif name == "dissipativity":
            cases += _suite_dissipativity(cfg, rng)
        elif name == "recovery":
            cases += _suite_recovery(cfg, rng, corrupt)
        elif name == "limit":
            cases += _suite_limit(cfg, rng)
        else:
            cases += _suite_guenter(cfg, rng)
    return {
        "pass": all(c["pass"] for c in cases),
        "seed": seed,
        "config_hash": config_hash(config),
        "cases": cases,
    }
