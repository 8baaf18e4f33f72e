"""Grid functions on flat manifolds and the evolution ``exp(t (eps - i) Delta)``.

Two independent realizations are provided: a spectral one on tori (twisted
plane waves, FFT) and a kernel one (quadrature against the periodized kernel
divided by its mass constant) that also covers cylinders, Moebius strips and
Klein bottles.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import roots_legendre

from .geometry import ManifoldKind
from .kernel import mass_constant
from .periodize import DEFAULT_POLICY, _evaluate

__all__ = [
    "GridFunction",
    "SpectralData",
    "make_grid",
    "lp_norm",
    "spectral_data",
    "apply_spectral",
    "laplacian_spectral",
    "apply_convolution",
    "PolyGaussian",
    "dissipativity_pairing",
    "gradient_pairing",
    "WeakLimit",
    "weak_limit_pairings",
    "decay_fit",
]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on a uniform grid over a fundamental domain.

    Axes follow the lattice generators (lattice coordinates ``j / N``); the
    Klein bottle's last axis samples cell midpoints of ``[-1/2, 1/2]``.
    Cylinders and Moebius strips carry ``n - k`` extra axes of cell
    midpoints over the transverse box ``[-half_width, half_width]`` with
    ``M`` points each.
    """

    spec: object
    N: int
    samples: np.ndarray
    points: np.ndarray
    weight: float
    transverse: tuple = None

    @property
    def shape(self):
        return self.samples.shape

    @property
    def volume(self):
        return self.weight * self.samples.size

    def with_samples(self, samples):
        samples = np.array(samples, dtype=complex).reshape(self.shape)
        samples.setflags(write=False)
        return GridFunction(self.spec, self.N, samples, self.points, self.weight, self.transverse)

    def __add__(self, other):
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other):
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c):
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__


def _grid_points(spec, N, transverse):
    n, k = spec.n, spec.rank
    basis = spec.lattice.basis
    if spec.kind in (ManifoldKind.TORUS, ManifoldKind.KLEIN):
        axes = [np.arange(N) / N for _ in range(n)]
        if spec.kind is ManifoldKind.KLEIN:
            # cell midpoints, symmetric under both mirrors x_n -> +-1 - x_n
            axes[-1] = (np.arange(N) + 0.5) / N - 0.5
        coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return coords @ basis, spec.lattice.covolume / N ** n, None
    half_width, M = transverse if transverse is not None else (2.0, N)
    if M < 2 or not half_width > 0:
        raise ValueError("transverse box needs half_width > 0 and at least 2 points")
    axes = [np.arange(N) / N for _ in range(k)]
    # midpoints, symmetric under x_n -> -x_n
    axes += [-half_width + 2.0 * half_width * (np.arange(M) + 0.5) / M for _ in range(n - k)]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    points = coords[..., :k] @ basis
    points[..., k:] += coords[..., k:]
    weight = spec.lattice.covolume * (2.0 * half_width) ** (n - k) / (N ** k * M ** (n - k))
    return points, weight, (float(half_width), int(M))


def make_grid(spec, N, sampler, transverse=None):
    """Sample ``sampler`` on the fundamental-domain grid of ``spec``.

    ``sampler`` receives an array of points with trailing axis ``n``; a
    function that only handles single points is applied pointwise.
    """
    if int(N) != N or N < 2:
        raise ValueError("grid resolution must be an integer >= 2, got %r" % (N,))
    N = int(N)
    points, weight, transverse = _grid_points(spec, N, transverse)
    lead = points.shape[:-1]
    try:
        values = np.asarray(sampler(points), dtype=complex)
        if values.shape != lead:
            values = np.broadcast_to(values, lead)
    except (TypeError, ValueError, IndexError):
        flat = points.reshape(-1, spec.n)
        values = np.array([complex(sampler(p)) for p in flat]).reshape(lead)
    bad = ~np.isfinite(values)
    if np.any(bad):
        where = tuple(np.argwhere(bad)[0])
        raise ValueError("non-finite sample %r at point %s" % (values[where], points[where].tolist()))
    samples = np.array(values, dtype=complex)
    samples.setflags(write=False)
    points.setflags(write=False)
    return GridFunction(spec, N, samples, points, weight, transverse)


def lp_norm(u, p):
    """``(sum_i w |u_i|^p)^(1/p)``; ``p = inf`` gives the max norm."""
    a = np.abs(u.samples)
    if p == math.inf:
        return float(a.max(initial=0.0))
    if not p >= 1:
        raise ValueError("p must be >= 1, got %r" % (p,))
    return float((u.weight * np.sum(a ** p)) ** (1.0 / p))


@dataclass(frozen=True)
class SpectralData:
    """Twisted frequencies ``q + s/2`` (dual coordinates), eigenvalues and offset."""

    frequencies: np.ndarray
    eigenvalues: np.ndarray
    offset: np.ndarray

    def multiplier(self, t, params):
        """``exp(-t lambda / kappa) = exp(-t lambda (eps - i))``."""
        return np.exp(-t * self.eigenvalues * (params.epsilon - 1j))


def spectral_data(spec, N):
    if spec.kind is not ManifoldKind.TORUS:
        raise ValueError("the spectral path is defined on tori only; use apply_convolution")
    n = spec.n
    s = spec.spin.mask(n) * 0.5
    q = np.stack(np.meshgrid(*[np.fft.fftfreq(N, 1.0 / N) for _ in range(n)], indexing="ij"), axis=-1)
    freqs = q + s
    ginv = np.linalg.inv(spec.lattice.gram)
    lam = 4.0 * math.pi ** 2 * np.einsum("...i,ij,...j->...", freqs, ginv, freqs)
    offset = s @ spec.lattice.dual
    return SpectralData(freqs, lam, offset)


def _twist(u):
    # exp(2 pi i <delta_S, x>) at the grid nodes, with delta_S = sum_{i in S} w_i / 2
    n = u.spec.n
    s = u.spec.spin.mask(n) * 0.5
    j = np.stack(np.meshgrid(*[np.arange(u.N) for _ in range(n)], indexing="ij"), axis=-1)
    return np.exp(2j * math.pi * (j @ s) / u.N)


def _spectral_apply(u, symbol):
    twist = _twist(u)
    coeffs = np.fft.fftn(u.samples / twist)
    return u.with_samples(np.fft.ifftn(coeffs * symbol) * twist)


def apply_spectral(u0, t, params):
    """Evolve a torus grid function by the multiplier ``exp(-t lambda / kappa)``."""
    data = spectral_data(u0.spec, u0.N)
    if t == 0:
        return u0.with_samples(u0.samples)
    return _spectral_apply(u0, data.multiplier(t, params))


def laplacian_spectral(u):
    """Spectral Laplacian (symbol ``-lambda``) of a torus grid function."""
    data = spectral_data(u.spec, u.N)
    return _spectral_apply(u, -data.eigenvalues)


def apply_convolution(u0, t, params, policy=None, chunk=2048):
    """``(1/c) sum_y w K(x, y) u0(y)`` with the periodized kernel ``K``.

    On tori ``K(x, y) = P(x - y)``; the differences of grid nodes are again
    grid nodes up to a lattice vector, which contributes its character.
    Elsewhere the two-point kernel with pole ``y`` is summed directly.
    """
    if not t > 0:
        raise ValueError("apply_convolution needs t > 0")
    policy = policy or DEFAULT_POLICY
    spec = u0.spec
    scale = u0.weight / mass_constant(params)
    flat_u = u0.samples.reshape(-1)
    X = u0.points.reshape(-1, spec.n)
    if spec.kind is ManifoldKind.TORUS:
        n, N = spec.n, u0.N
        table = _evaluate(spec, X, t, params, policy, exact=True).reshape(u0.shape)
        idx = np.stack(np.meshgrid(*[np.arange(N) for _ in range(n)], indexing="ij"), axis=-1).reshape(-1, n)
        mask = spec.spin.mask(n)
        out = np.empty(len(idx), dtype=complex)
        rows = max(1, (1 << 22) // len(idx))
        for start in range(0, len(idx), rows):
            I = idx[start:start + rows]
            diff = I[:, None, :] - idx[None, :, :]
            # x_i - y_j = (diff mod N)/N . basis + floor(diff/N) . basis
            wrapped = (diff < 0) @ mask
            sign = 1 - 2 * (wrapped & 1)
            vals = table[tuple(np.moveaxis(diff % N, -1, 0))] * sign
            out[start:start + rows] = vals @ flat_u
        return u0.with_samples(scale * out)
    P_ = len(X)
    out = np.empty(P_, dtype=complex)
    rows = max(1, chunk // P_)
    for start in range(0, P_, rows):
        xi = X[start:start + rows]
        Xp = np.repeat(xi, P_, axis=0)
        Yp = np.tile(X, (len(xi), 1))
        K = _evaluate(spec, Xp, t, params, policy, pole=Yp, exact=False, chunk=chunk)
        out[start:start + rows] = K.reshape(len(xi), P_) @ flat_u
    return u0.with_samples(scale * out)


@dataclass(frozen=True)
class PolyGaussian:
    """``u(x) = (c0 + b . (x - x0)) exp(-a |x - x0|^2)`` with closed-form derivatives."""

    center: tuple
    rate: float
    c0: float = 1.0
    slope: tuple = None

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        r = x - np.asarray(self.center, dtype=float)
        b = np.zeros(x.shape[-1]) if self.slope is None else np.asarray(self.slope, dtype=float)
        g = np.exp(-self.rate * np.sum(r * r, axis=-1))
        q = self.c0 + r @ b
        return r, b, g, q

    def __call__(self, x):
        _, _, g, q = self._parts(x)
        return q * g

    def gradient(self, x):
        r, b, g, q = self._parts(x)
        return (b - 2.0 * self.rate * q[..., None] * r) * g[..., None]

    def laplacian(self, x):
        r, b, g, q = self._parts(x)
        a, n = self.rate, r.shape[-1]
        r2 = np.sum(r * r, axis=-1)
        # Delta(q g) = 2 grad q . grad g + q Delta g  (q is affine)
        return (-4.0 * a * (r @ b) + q * (4.0 * a * a * r2 - 2.0 * a * n)) * g


def _box(n, half_width, M):
    h = 2.0 * half_width / M
    ax = -half_width + h * (np.arange(M) + 0.5)
    pts = np.stack(np.meshgrid(*[ax] * n, indexing="ij"), axis=-1)
    return pts, h ** n


def dissipativity_pairing(u, p, n=2, half_width=4.0, M=256):
    """Quadrature of ``Re <|u|^{p-2} u, -Delta u>`` on a flat box.

    ``u`` must provide ``u(x)`` and ``u.laplacian(x)`` and decay to
    negligible size at the box boundary.
    """
    if not 1 < p < 3:
        raise ValueError("p must lie in (1, 3), got %r" % (p,))
    pts, w = _box(n, half_width, M)
    val = np.asarray(u(pts), dtype=complex)
    lap = np.asarray(u.laplacian(pts), dtype=complex)
    a = np.abs(val)
    with np.errstate(divide="ignore", invalid="ignore"):
        dual = np.where(a > 0, a ** (p - 2) * val, 0.0)
    return float(np.real(w * np.sum(dual * np.conj(-lap))))


def gradient_pairing(u, p, n=2, half_width=4.0, M=256):
    """``(p - 1) int |u|^{p-2} |grad u|^2`` for real ``u`` on the same box."""
    pts, w = _box(n, half_width, M)
    val = np.abs(np.asarray(u(pts), dtype=float))
    grad = np.asarray(u.gradient(pts), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(val > 0, val ** (p - 2), 0.0)
    return float((p - 1) * w * np.sum(weight * np.sum(grad * grad, axis=-1)))


@dataclass(frozen=True)
class WeakLimit:
    eps: np.ndarray
    pairings: np.ndarray
    differences: np.ndarray

    @property
    def ratios(self):
        d = self.differences
        with np.errstate(divide="ignore", invalid="ignore"):
            return d[1:] / d[:-1]


def weak_limit_pairings(phi, eps_sequence, t_window, spec, nx=192, nt=200, policy=None):
    """Pairings ``int int P^eps(x, t) phi(x, t) dx dt`` along a sequence of ``eps``.

    ``phi(points, t)`` is evaluated on the torus grid (rectangle rule in
    ``x``) and at Gauss-Legendre nodes in ``t`` over ``t_window`` (which must
    stay away from ``t = 0``).  Returns the pairings and the moduli of their
    successive differences.
    """
    from .kernel import make_params

    eps = np.asarray(eps_sequence, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps values must be positive and strictly decreasing")
    t0, t1 = t_window
    if not 0 < t0 < t1:
        raise ValueError("time window must satisfy 0 < t0 < t1")
    grid = make_grid(spec, nx, lambda x: np.zeros(x.shape[:-1]))
    X = grid.points.reshape(-1, spec.n)
    nodes, weights = roots_legendre(nt)
    ts = 0.5 * (t1 - t0) * nodes + 0.5 * (t1 + t0)
    wt = 0.5 * (t1 - t0) * weights
    test = np.array([np.asarray(phi(X, t), dtype=complex) * np.ones(len(X)) for t in ts])
    pairings = np.zeros(len(eps), dtype=complex)
    for i, e in enumerate(eps):
        params = make_params(e, spec.n)
        if not np.any(test):
            continue
        acc = 0j
        for t, w, f in zip(ts, wt, test):
            vals = _evaluate(spec, X, t, params, policy, exact=False)
            acc += w * grid.weight * np.dot(vals, f)
        pairings[i] = acc
    return WeakLimit(eps, pairings, np.abs(np.diff(pairings)))


def decay_fit(times, norms, params):
    """Diagnostic fit ``norm(t) <= a exp(-|kappa| b t)`` over a trajectory.

    ``b`` is the least-squares slope of ``log norm`` against ``-|kappa| t``
    (clipped at 0) and ``a`` the smallest constant making the bound hold.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    k = abs(params.kappa)
    if len(times) < 2 or np.any(norms <= 0):
        return {"a": float(norms.max(initial=0.0)), "b": 0.0}
    slope = np.polyfit(times, np.log(norms), 1)[0]
    b = max(0.0, -slope / k)
    a = float(np.max(norms * np.exp(k * b * times)))
    return {"a": a, "b": float(b)}
