"""Lattice periodizations of the regularized kernel onto flat manifolds.

Every series is a sum over images ``g_m(x) - y`` of a point ``x`` (with an
optional pole ``y``, default the origin), weighted by the spin/pin character.
Images are grouped into classes that each run over a shifted lattice, and
a term is kept when the in-span distance of its shifted lattice point is at
most the truncation radius ``R``.  ``R`` comes from a rigorous tail bound:
the kernel modulus is a Gaussian majorant times (for derivatives) a
polynomial, and lattice points are counted through their Voronoi cells.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import gamma, gammaincc

from .geometry import (
    ManifoldKind,
    character,
    enumerate_shifted,
    lattice_from_basis,
    sgn_moebius,
)
from .kernel import MultiIndex, derivative_polynomials, eval_regularized, kernel_derivative

__all__ = [
    "TruncationError",
    "TruncationPolicy",
    "tail_bound",
    "truncation_radius",
    "periodized_kernel",
    "torus_kernel",
    "cylinder_kernel",
    "moebius_kernel",
    "klein_kernel",
    "torus_kernel_derivative",
    "representation_sum",
]

MAX_DERIVATIVE_ORDER = 4


class TruncationError(ArithmeticError):
    """The requested tolerance cannot be met within the radius cap."""


@dataclass(frozen=True)
class TruncationPolicy:
    abs_tol: float = 1e-12
    max_radius: float = 1e3
    validated: bool = False

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.max_radius > 0:
            raise ValueError("max_radius must be positive")


DEFAULT_POLICY = TruncationPolicy()


def _growth_polynomial(params, t, alpha):
    """Nonnegative coefficients of ``G`` with ``|prod_j P_{alpha_j}(y_j)| <= G(|y|)``."""
    g = np.array([1.0])
    if alpha is None:
        return g
    a = params.exponent_rate / t
    for k in alpha:
        if k:
            g = P.polymul(g, np.abs(derivative_polynomials(k, a)[k]))
    return g


def tail_bound(R, lattice, params, t, alpha=None, copies=1):
    """Upper bound on ``sum |term|`` over lattice points at in-span distance > R.

    Each point ``p`` owns its Voronoi cell (volume ``V``, radius ``<= mu``), so
    ``sum_{|p|>R} g(|p|) <= S_{k-1}/V * int_{R-2mu}^inf g(s) (s+mu)^{k-1} ds``
    for ``g`` decreasing beyond ``R - 2mu``.  Returns ``inf`` when ``R`` is
    below the range where that argument applies.
    """
    k = lattice.rank
    mu = lattice.covering_bound
    beta = params.decay_rate(t)
    amp = abs(params.prefactor(t))
    g = _growth_polynomial(params, t, alpha)
    s0 = R - 2.0 * mu
    if s0 < math.sqrt((len(g) - 1) / (2.0 * beta)) or s0 < 0:
        return math.inf
    q = P.polymul(g, P.polypow([mu, 1.0], k - 1))
    h = (np.arange(len(q)) + 1) / 2.0
    # int_{s0}^inf s^j exp(-beta s^2) ds = beta^{-h} Gamma(h) Q(h, beta s0^2) / 2
    moments = 0.5 * beta ** (-h) * gamma(h) * gammaincc(h, beta * s0 * s0)
    surface = 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)
    return float(copies * amp * surface / lattice.covolume * np.dot(q, moments))


def truncation_radius(params, t, policy, lattice, alpha=None, copies=1):
    """Smallest radius (to bisection accuracy) whose certified tail is ``<= abs_tol``."""
    if not t > 0:
        raise ValueError("truncation radius needs t > 0")
    tol = policy.abs_tol

    def tail(r):
        return tail_bound(r, lattice, params, t, alpha, copies)

    beta = params.decay_rate(t)
    deg = len(_growth_polynomial(params, t, alpha)) - 1
    lo = 2.0 * lattice.covering_bound + math.sqrt(deg / (2.0 * beta))
    if lo > policy.max_radius or tail(policy.max_radius) > tol:
        raise TruncationError(
            "tolerance %g needs a truncation radius beyond max_radius=%g; "
            "use a larger eps*t or a looser tolerance" % (tol, policy.max_radius))
    if tail(lo) <= tol:
        return lo
    hi = policy.max_radius
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if tail(mid) <= tol:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-9 * hi:
            break
    return hi


@lru_cache(maxsize=64)
def _even_klein_lattice(lattice):
    basis = np.array(lattice.basis)
    basis[-1] *= 2.0
    return lattice_from_basis(basis)


@dataclass
class _ImageClass:
    lattice: object
    centers: np.ndarray
    to_m: object
    flip: object = None


def _image_classes(spec, X, Y):
    """Shifted-lattice classes covering every image ``g_m(x) - y``."""
    kind = spec.kind
    lat = spec.lattice
    if kind in (ManifoldKind.TORUS, ManifoldKind.CYLINDER, ManifoldKind.MOEBIUS):
        flip = sgn_moebius if kind is ManifoldKind.MOEBIUS else None
        return [_ImageClass(lat, X - Y, lambda c: c, flip)]
    # Klein: m_n = 2 j + r; the last coordinate of the image is
    # (-1)^r x_n + r + 2 j, so each parity r runs over Omega_{n-1} + 2 Z e_n
    even = _even_klein_lattice(lat)
    out = []
    for r in (0, 1):
        centers = X - Y
        centers[:, -1] = (-1) ** r * X[:, -1] + r - Y[:, -1]

        def to_m(c, r=r):
            m = c.copy()
            m[:, -1] = 2 * m[:, -1] + r
            return m

        out.append(_ImageClass(even, centers, to_m, (lambda m, r=r: np.full(len(m), (-1) ** r))))
    return out


def _class_terms(cls, spec, X, Y, R):
    """Masked image points of one class for a batch of points.

    All points share one enumeration around a reference center, so the kept
    term set of each point is exactly what a single-point call would keep.
    """
    lat = cls.lattice
    proj = lat.project(cls.centers)
    ref = proj[0] if len(proj) == 1 else 0.5 * (proj.min(axis=0) + proj.max(axis=0))
    spread = float(np.max(np.linalg.norm(proj - ref, axis=1)))
    slack = 0.0 if len(proj) == 1 else 1e-9 * (1.0 + R)
    coeffs, vecs = enumerate_shifted(lat, ref, R + spread + slack)
    inspan = np.linalg.norm(proj[:, None, :] + vecs[None, :, :], axis=2)
    mask = inspan <= R
    rows, cols = np.nonzero(mask)
    z = cls.centers[rows] + vecs[cols]
    m = cls.to_m(coeffs)[cols]
    sign = np.ones(len(cols))
    if cls.flip is not None:
        s = cls.flip(m)
        if spec.kind is ManifoldKind.MOEBIUS:
            z[:, -1] = s * X[rows, -1] - Y[rows, -1]
        sign = s
    return rows, z, m, sign


def _series(spec, X, Y, t, params, R, alpha, exact):
    n = spec.n
    total = np.zeros(len(X), dtype=complex)
    parts = [[] for _ in range(len(X))] if exact else None
    for cls in _image_classes(spec, X, Y):
        rows, z, m, sign = _class_terms(cls, spec, X, Y, R)
        if len(rows) == 0:
            continue
        if alpha is None or not any(alpha):
            vals = eval_regularized(z, t, params)
            if np.ndim(vals) == 0:
                vals = np.array([vals])
        else:
            vals = np.atleast_1d(kernel_derivative(z, t, params, alpha))
            # chain rule for the x_n flip of Moebius/Klein images
            vals = vals * sign ** alpha[n - 1]
        vals = vals * character(spec.spin, m)
        if exact:
            bounds = np.searchsorted(rows, np.arange(len(X) + 1))
            for i in range(len(X)):
                parts[i].append(vals[bounds[i]:bounds[i + 1]])
        else:
            np.add.at(total, rows, vals)
    if exact:
        for i, chunks in enumerate(parts):
            v = np.concatenate(chunks) if chunks else np.zeros(0, dtype=complex)
            total[i] = complex(math.fsum(v.real), math.fsum(v.imag))
    return total


def _radius(spec, t, params, policy, alpha):
    if spec.kind is ManifoldKind.KLEIN:
        return truncation_radius(params, t, policy, _even_klein_lattice(spec.lattice), alpha, copies=2)
    return truncation_radius(params, t, policy, spec.lattice, alpha)


def _evaluate(spec, x, t, params, policy=None, pole=None, alpha=None, exact=True, chunk=None):
    policy = policy or DEFAULT_POLICY
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (spec.n,):
        raise ValueError("points must have trailing dimension %d, got shape %s" % (spec.n, x.shape))
    lead = x.shape[:-1]
    X = x.reshape(-1, spec.n)
    if pole is None:
        Y = np.zeros_like(X)
    else:
        Y = np.broadcast_to(np.asarray(pole, dtype=float), x.shape).reshape(-1, spec.n)
    t = float(t)
    if t <= 0:
        out = np.zeros(len(X), dtype=complex)
    else:
        R = _radius(spec, t, params, policy, alpha)
        step = chunk or len(X) or 1
        out = np.concatenate([
            _series(spec, X[i:i + step], Y[i:i + step], t, params, R, alpha, exact)
            for i in range(0, len(X), step)
        ]) if len(X) else np.zeros(0, dtype=complex)
        if policy.validated:
            wide = np.concatenate([
                _series(spec, X[i:i + step], Y[i:i + step], t, params, 2.0 * R, alpha, exact)
                for i in range(0, len(X), step)
            ]) if len(X) else np.zeros(0, dtype=complex)
            worst = float(np.max(np.abs(wide - out), initial=0.0))
            if worst >= policy.abs_tol:
                raise TruncationError(
                    "doubling the radius %g changed the sum by %g >= abs_tol" % (R, worst))
    out = out.reshape(lead)
    return complex(out) if out.ndim == 0 else out


def periodized_kernel(x, t, spec, params, policy=None, pole=None):
    """Periodized kernel of any manifold kind at points ``x`` (shape ``(..., n)``).

    With ``pole`` set, returns the two-point kernel ``sum_m chi(m) e(g_m(x) - pole)``.
    """
    return _evaluate(spec, x, t, params, policy, pole)


def _require(spec, *kinds):
    if spec.kind not in kinds:
        raise ValueError("expected a %s manifold, got %s" % (
            " or ".join(k.value for k in kinds), spec.kind.value))


def torus_kernel(x, t, spec, params, policy=None, pole=None):
    """``sum_m chi(m) e(x + m.v; t)`` over the full-rank lattice."""
    _require(spec, ManifoldKind.TORUS)
    return _evaluate(spec, x, t, params, policy, pole)


def cylinder_kernel(x, t, spec, params, policy=None, pole=None):
    """Subseries over a rank-k sublattice.  A torus spec is the degenerate k = n case."""
    _require(spec, ManifoldKind.CYLINDER, ManifoldKind.TORUS)
    return _evaluate(spec, x, t, params, policy, pole)


def moebius_kernel(x, t, spec, params, policy=None, pole=None):
    """``sum_m chi(m) e(x_ + v, x', sgn(m) x_n; t)``."""
    _require(spec, ManifoldKind.MOEBIUS)
    return _evaluate(spec, x, t, params, policy, pole)


def klein_kernel(x, t, spec, params, policy=None, pole=None):
    """``sum_m chi(m) e(x_ + v_, (-1)^{m_n} x_n + m_n; t)``."""
    _require(spec, ManifoldKind.KLEIN)
    return _evaluate(spec, x, t, params, policy, pole)


def torus_kernel_derivative(x, t, spec, params, policy=None, alpha=None):
    """Termwise ``d^alpha`` of the torus series, with the radius re-derived for the
    derivative's polynomial growth."""
    _require(spec, ManifoldKind.TORUS)
    alpha = MultiIndex(alpha if alpha is not None else (0,) * spec.n)
    if len(alpha) != spec.n:
        raise ValueError("multi-index length %d does not match n=%d" % (len(alpha), spec.n))
    if alpha.order > MAX_DERIVATIVE_ORDER:
        raise ValueError("derivative order %d exceeds the supported cap %d" % (alpha.order, MAX_DERIVATIVE_ORDER))
    return _evaluate(spec, x, t, params, policy, alpha=alpha if alpha.order else None)


def representation_sum(x, t, spec, params, poles, coeffs, alphas=None, phi=0.0, policy=None):
    """``phi + sum_i b_i d^{alpha_i} P(x - a_i, t)`` on a torus.

    With constant ``phi`` this is annihilated by ``Delta - kappa d/dt`` away
    from the poles ``a_i``.
    """
    _require(spec, ManifoldKind.TORUS)
    poles = np.atleast_2d(np.asarray(poles, dtype=float))
    if alphas is None:
        alphas = [(0,) * spec.n] * len(poles)
    if not len(poles) == len(coeffs) == len(alphas):
        raise ValueError("poles, coefficients and multi-indices must have equal length")
    x = np.asarray(x, dtype=float)
    total = phi(t) if callable(phi) else phi
    for a, b, alpha in zip(poles, coeffs, alphas):
        total = total + b * torus_kernel_derivative(x - a, t, spec, params, policy, alpha)
    return total
