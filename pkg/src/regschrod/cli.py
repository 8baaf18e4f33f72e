"""Command-line front end.

Subcommands ``kernel``, ``periodize``, ``solve``, ``verify`` and ``limit``.
Exit status is 0 on success, 1 when a computation fails (or a verification
case fails) and 2 for usage or configuration errors.
"""
import argparse
from dataclasses import dataclass, field
from importlib import resources
import io
import json
import math
import sys

import numpy as np

from .geometry import ManifoldKind, ManifoldSpec, SpinStructure, lattice_from_basis
from .kernel import eval_limit, eval_regularized, make_params
from .periodize import TruncationPolicy, periodized_kernel
from .semigroup import apply_convolution, apply_spectral, make_grid, weak_limit_pairings
from .verification import SUITES, limit_test_functions, run_verification

__all__ = ["RunConfig", "ConfigError", "main", "load_default_config", "read_grid_csv", "write_grid_csv"]


class ConfigError(ValueError):
    """Invalid flag or config field."""


@dataclass
class RunConfig:
    n: int = None
    manifold: str = "torus"
    basis: list = None
    spin: list = field(default_factory=list)
    epsilon: float = 1.0
    tol: float = 1e-12
    grid: int = 32
    p: list = field(default_factory=lambda: [2.0])
    times: list = field(default_factory=lambda: [0.1])
    method: str = "spectral"
    transverse: list = None
    initial: dict = None
    out: str = None

    FIELDS = ("n", "manifold", "basis", "spin", "epsilon", "tol", "grid", "p",
              "times", "method", "transverse", "initial", "out")

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.FIELDS) - set(SUITES) - {"seed", "corrupt_multiplier"}
        if unknown:
            raise ConfigError("unknown config field(s): %s" % ", ".join(sorted(unknown)))
        return cls(**{k: data[k] for k in cls.FIELDS if k in data})

    def manifold_spec(self):
        try:
            kind = ManifoldKind(self.manifold)
        except ValueError:
            raise ConfigError("field 'manifold': expected torus, cylinder, moebius or klein, got %r" % (self.manifold,))
        basis = self.basis
        if basis is None:
            if self.n is None:
                raise ConfigError("field 'basis' (or 'n' for the identity lattice) is required")
            if kind in (ManifoldKind.CYLINDER, ManifoldKind.MOEBIUS):
                raise ConfigError("field 'basis' is required for a %s" % kind.value)
            basis = np.eye(self.n).tolist()
        try:
            lattice = lattice_from_basis(basis)
        except ValueError as exc:
            raise ConfigError("field 'basis': %s" % exc)
        if self.n is not None and lattice.n != self.n:
            raise ConfigError("field 'basis': vectors have length %d but n=%d" % (lattice.n, self.n))
        try:
            return ManifoldSpec(kind, lattice, SpinStructure(frozenset(self.spin)))
        except ValueError as exc:
            raise ConfigError(str(exc))

    def params(self, n):
        try:
            return make_params(self.epsilon, n)
        except ValueError as exc:
            raise ConfigError("field 'epsilon': %s" % exc)

    def policy(self):
        try:
            return TruncationPolicy(abs_tol=self.tol)
        except ValueError as exc:
            raise ConfigError("field 'tol': %s" % exc)


def load_default_config():
    text = resources.files("regschrod").joinpath("data/default_config.json").read_text(encoding="utf-8")
    return json.loads(text)


def _fmt(v):
    return repr(float(v))


def write_grid_csv(stream, points, times, values):
    """Rows ``x1..xn,t,re,im`` with shortest round-trip decimals and LF endings."""
    n = points.shape[-1]
    stream.write(",".join(["x%d" % (i + 1) for i in range(n)] + ["t", "re", "im"]) + "\n")
    for x, t, v in zip(points, times, values):
        stream.write(",".join([_fmt(c) for c in x] + [_fmt(t), _fmt(v.real), _fmt(v.imag)]) + "\n")


def read_grid_csv(text):
    """Inverse of ``write_grid_csv``: returns ``(points, times, values)``."""
    lines = text.split("\n")
    header = lines[0].split(",")
    n = len(header) - 3
    rows = [line.split(",") for line in lines[1:] if line]
    data = np.array([[float(c) for c in row] for row in rows]).reshape(-1, n + 3)
    return data[:, :n], data[:, n], data[:, n + 1] + 1j * data[:, n + 2]


def _floats(text, name):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("flag --%s: expected comma-separated numbers, got %r" % (name, text))


def _basis(text):
    return [_floats(row, "basis") for row in text.split(";") if row.strip()]


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config_from_args(args):
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config: %s" % exc)
        except json.JSONDecodeError as exc:
            raise ConfigError("config %s line %d: %s" % (args.config, exc.lineno, exc.msg))
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    cfg = RunConfig.from_dict(data)
    for name in ("n", "manifold", "tol", "grid", "method", "out"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "eps", None) is not None:
        cfg.epsilon = args.eps
    if getattr(args, "basis", None) is not None:
        cfg.basis = _basis(args.basis)
    if getattr(args, "spin", None) is not None:
        cfg.spin = [int(v) for v in _floats(args.spin, "spin")]
    if getattr(args, "p", None) is not None:
        cfg.p = _floats(args.p, "p")
    if getattr(args, "times", None) is not None:
        cfg.times = _floats(args.times, "times")
    return cfg, data


def _points(args, n):
    raw = args.x or ["0" + ",0" * (n - 1)]
    pts = [_floats(item, "x") for item in raw]
    if any(len(p) != n for p in pts):
        raise ConfigError("flag --x: every point needs %d coordinates" % n)
    return np.array(pts, dtype=float)


def _times(args, cfg):
    if args.t is not None:
        return [args.t]
    return cfg.times


def _cmd_kernel(args):
    cfg, _ = _config_from_args(args)
    n = cfg.n or 1
    pts = _points(args, n)
    times = _times(args, cfg)
    if cfg.epsilon == 0:
        def evaluate(x, t):
            return eval_limit(x, t, n)
    else:
        params = cfg.params(n)

        def evaluate(x, t):
            return eval_regularized(x, t, params)

    def compute():
        rows = [(x, t, evaluate(x, t)) for t in times for x in pts]
        return _csv(rows)

    return compute


def _csv(rows):
    buf = io.StringIO(newline="\n")
    if rows:
        write_grid_csv(buf, np.array([r[0] for r in rows]), [r[1] for r in rows], [complex(r[2]) for r in rows])
    return buf.getvalue()


def _cmd_periodize(args):
    cfg, _ = _config_from_args(args)
    spec = cfg.manifold_spec()
    params = cfg.params(spec.n)
    policy = cfg.policy()
    pts = _points(args, spec.n)
    times = _times(args, cfg)

    def compute():
        rows = []
        for t in times:
            vals = periodized_kernel(pts, t, spec, params, policy)
            rows += [(x, t, v) for x, v in zip(pts, np.atleast_1d(vals))]
        return _csv(rows)

    return compute


def _initial_sampler(cfg, spec):
    init = cfg.initial or {"modes": [{"q": [0] * spec.rank, "c": [1.0, 0.0]}]}
    modes = init.get("modes", [])
    rate = float(init.get("transverse_rate", 1.0))
    try:
        qs = np.array([m["q"] for m in modes], dtype=float).reshape(len(modes), spec.rank)
        cs = np.array([complex(*m["c"]) for m in modes])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("field 'initial': expected modes [{q: [...%d ints], c: [re, im]}]" % spec.rank)
    shift = 0.5 * spec.spin.mask(spec.rank)

    def sampler(x):
        coords = spec.lattice.coordinates(x)
        if spec.kind is ManifoldKind.KLEIN:
            coords = coords[..., :-1]
            q = qs[:, :-1] + shift[:-1]
        else:
            q = qs + shift
        phase = np.exp(2j * math.pi * np.einsum("...i,mi->...m", coords, q))
        out = phase @ cs
        if spec.kind is ManifoldKind.KLEIN:
            out = out * np.cos(math.pi * x[..., -1]) ** 2
        elif spec.rank < spec.n:
            out = out * np.exp(-rate * np.sum(x[..., spec.rank:] ** 2, axis=-1))
        return out

    return sampler


def _cmd_solve(args):
    cfg, _ = _config_from_args(args)
    spec = cfg.manifold_spec()
    params = cfg.params(spec.n)
    policy = cfg.policy()
    if cfg.method not in ("spectral", "kernel"):
        raise ConfigError("field 'method': expected spectral or kernel, got %r" % (cfg.method,))
    if cfg.method == "spectral" and spec.kind is not ManifoldKind.TORUS:
        raise ConfigError("the spectral method needs a torus; use --method kernel")
    if any(t < 0 for t in cfg.times):
        raise ConfigError("field 'times': evolution times must be >= 0")
    u0 = make_grid(spec, cfg.grid, _initial_sampler(cfg, spec), transverse=cfg.transverse)

    def compute():
        pts = u0.points.reshape(-1, spec.n)
        rows = []
        for t in cfg.times:
            if t == 0:
                u = u0
            elif cfg.method == "spectral":
                u = apply_spectral(u0, t, params)
            else:
                u = apply_convolution(u0, t, params, policy)
            rows += [(x, t, v) for x, v in zip(pts, u.samples.reshape(-1))]
        return _csv(rows)

    return compute


def _load_verify_config(args):
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config: %s" % exc)
        except json.JSONDecodeError as exc:
            raise ConfigError("config %s line %d: %s" % (args.config, exc.lineno, exc.msg))
    else:
        config = load_default_config()
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        config = dict(config, seed=args.seed)
    return config


def _cmd_verify(args):
    config = _load_verify_config(args)
    if args.suite != "all" and args.suite not in SUITES:
        raise ConfigError("flag --suite: unknown suite %r" % (args.suite,))

    def compute():
        report = run_verification(args.suite, config)
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        return text, report["pass"]

    return compute


def _cmd_limit(args):
    config = _load_verify_config(args)
    section = dict(config.get("limit", {}))
    L = section.get("period", 30.0)
    steps = section.get("steps", 8)
    nx = args.grid or section.get("nx", 192)
    spec = ManifoldSpec(ManifoldKind.TORUS, lattice_from_basis([[L]]))
    eps = 2.0 ** -np.arange(1, steps + 1)

    def compute():
        out = []
        for k, phi in enumerate(limit_test_functions(L)):
            res = weak_limit_pairings(phi, eps, (1.0, 2.0), spec, nx=nx, nt=section.get("nt", 200))
            out.append({
                "phi": k,
                "eps": res.eps.tolist(),
                "pairings": [[z.real, z.imag] for z in res.pairings],
                "differences": res.differences.tolist(),
                "ratios": res.ratios.tolist(),
            })
        return json.dumps(out, indent=2) + "\n"

    return compute


def build_parser():
    parser = argparse.ArgumentParser(prog="regschrod", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, geometry=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--n", type=int)
        p.add_argument("--eps", type=float)
        if geometry:
            p.add_argument("--manifold", choices=[k.value for k in ManifoldKind])
            p.add_argument("--basis", help="lattice rows separated by ';', entries by ','")
            p.add_argument("--spin", help="comma-separated 1-based generator labels")
            p.add_argument("--tol", type=float)

    k = sub.add_parser("kernel", help="tabulate the regularized kernel")
    common(k, geometry=False)
    k.add_argument("--t", type=float)
    k.add_argument("--times")
    k.add_argument("--x", action="append", help="point as comma-separated coordinates; repeatable")

    p = sub.add_parser("periodize", help="evaluate a periodized kernel")
    common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--times")
    p.add_argument("--x", action="append", help="point as comma-separated coordinates; repeatable")

    s = sub.add_parser("solve", help="evolve initial data on a grid")
    common(s)
    s.add_argument("--grid", type=int)
    s.add_argument("--times")
    s.add_argument("--p")
    s.add_argument("--method", choices=["spectral", "kernel"])

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", default="all")
    v.add_argument("--config")
    v.add_argument("--out")
    v.add_argument("--seed", type=int)

    lm = sub.add_parser("limit", help="eps -> 0 weak-limit pairings")
    lm.add_argument("--config")
    lm.add_argument("--out")
    lm.add_argument("--grid", type=int)
    return parser


COMMANDS = {
    "kernel": _cmd_kernel,
    "periodize": _cmd_periodize,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "limit": _cmd_limit,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        compute = COMMANDS[args.command](args)
    except (ConfigError, ValueError, TypeError) as exc:
        print("regschrod %s: %s" % (args.command, exc), file=sys.stderr)
        return 2
    try:
        result = compute()
    except (ArithmeticError, ValueError) as exc:
        print("regschrod %s: computation failed: %s" % (args.command, exc), file=sys.stderr)
        return 1
    ok = True
    if isinstance(result, tuple):
        result, ok = result
    _emit(args, result)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
