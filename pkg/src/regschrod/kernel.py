"""Regularized fundamental solution of the Schroedinger operator.

For ``eps > 0`` the imaginary unit is replaced by
``kappa = (eps + i) / (eps**2 + 1)`` and the kernel

    e(x, t) = (eps + i) H(t) (4 pi (eps + i) t)**(-n/2)
              * exp(-(eps + i) |x|^2 / (4 (eps**2 + 1) t))

is annihilated by ``Delta - kappa d/dt`` away from the origin.  Complex powers
use the principal branch.
"""
from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "KernelOverflowError",
    "SingularPointError",
    "RegKernelParams",
    "MultiIndex",
    "make_params",
    "eval_regularized",
    "eval_limit",
    "kernel_derivative",
    "derivative_polynomials",
    "mass_constant",
    "modulus_bound",
    "pde_residual",
]


class KernelOverflowError(ArithmeticError):
    """A kernel evaluation produced a non-finite value."""


class SingularPointError(ValueError):
    """Evaluation requested at the space-time singularity."""


@dataclass(frozen=True)
class RegKernelParams:
    epsilon: float
    n: int

    @property
    def kappa(self):
        return (self.epsilon + 1j) / (self.epsilon ** 2 + 1)

    @property
    def exponent_rate(self):
        """Complex coefficient ``a`` with ``e ~ exp(-a |x|^2 / t)``."""
        return (self.epsilon + 1j) / (4.0 * (self.epsilon ** 2 + 1))

    def decay_rate(self, t):
        """Real Gaussian decay rate ``eps / (4 (eps^2 + 1) t)``."""
        if t <= 0:
            raise ValueError("decay rate defined for t > 0 only")
        return self.epsilon / (4.0 * (self.epsilon ** 2 + 1) * t)

    def prefactor(self, t):
        """``(eps + i) (4 pi (eps + i) t)**(-n/2)`` for scalar ``t > 0``."""
        z = 4.0 * math.pi * (self.epsilon + 1j) * t
        return (self.epsilon + 1j) * np.exp(-0.5 * self.n * np.log(z))


class MultiIndex(tuple):
    """Per-coordinate derivative orders."""

    def __new__(cls, orders):
        orders = tuple(int(k) for k in orders)
        if any(k < 0 for k in orders):
            raise ValueError("derivative orders must be nonnegative: %r" % (orders,))
        return super().__new__(cls, orders)

    @property
    def order(self):
        return sum(self)


def make_params(epsilon, n):
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0 (got %r); use eval_limit for the limit kernel" % (epsilon,))
    if int(n) != n or n < 1:
        raise ValueError("dimension must be a positive integer, got %r" % (n,))
    return RegKernelParams(float(epsilon), int(n))


def _split(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (n,):
        raise ValueError("points must have trailing dimension %d, got shape %s" % (n, x.shape))
    return x


def _finite(values):
    if not np.all(np.isfinite(values)):
        raise KernelOverflowError("kernel evaluation overflowed (non-finite value)")
    return values


def _scalarize(values, x):
    return complex(values) if np.ndim(x) == 1 else values


def eval_regularized(x, t, params):
    """Regularized kernel at points ``x`` (shape ``(..., n)``) and time(s) ``t``.

    ``t`` broadcasts against ``x.shape[:-1]``; ``H(t) = 0`` for ``t <= 0``.
    Returns a complex scalar for a single point.
    """
    x = _split(x, params.n)
    r2 = np.einsum("...i,...i->...", x, x)
    if np.ndim(t) == 0 and t > 0:
        # single time: one prefactor for all points
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            vals = params.prefactor(float(t)) * np.exp(-params.exponent_rate / float(t) * r2)
        out = _finite(vals)
        return _scalarize(out, x) if out.ndim == 0 else out
    t = np.broadcast_to(np.asarray(t, dtype=float), np.broadcast_shapes(np.shape(t), r2.shape))
    r2 = np.broadcast_to(r2, t.shape)
    out = np.zeros(t.shape, dtype=complex)
    live = t > 0
    if np.any(live):
        tl = t[live]
        eps = params.epsilon
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            logz = np.log(4.0 * np.pi * (eps + 1j) * tl)
            vals = (eps + 1j) * np.exp(-0.5 * params.n * logz - params.exponent_rate * r2[live] / tl)
        out[live] = _finite(vals)
    return _scalarize(out, x) if out.ndim == 0 else out


def eval_limit(x, t, n):
    """Unregularized kernel ``i H(t) (4 pi i t)**(-n/2) exp(-i |x|^2 / (4 t))``."""
    x = _split(x, n)
    r2 = np.einsum("...i,...i->...", x, x)
    t = np.broadcast_to(np.asarray(t, dtype=float), np.broadcast_shapes(np.shape(t), r2.shape))
    r2 = np.broadcast_to(r2, t.shape)
    if np.any((t == 0) & (r2 == 0)):
        raise SingularPointError("limit kernel is singular at x = 0, t = 0")
    out = np.zeros(t.shape, dtype=complex)
    live = t > 0
    if np.any(live):
        tl = t[live]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            logz = np.log(4.0 * np.pi * 1j * tl)
            vals = 1j * np.exp(-0.5 * n * logz - 1j * r2[live] / (4.0 * tl))
        out[live] = _finite(vals)
    return _scalarize(out, x) if out.ndim == 0 else out


def derivative_polynomials(order, a):
    """Coefficients of ``P_k`` with ``d^k/dy^k exp(-a y^2) = P_k(y) exp(-a y^2)``.

    ``a`` is the complex Gaussian rate ``kappa / (4 t)``.  Uses
    ``P_{k+1} = P_k' - 2 a y P_k``.
    """
    polys = [np.array([1.0 + 0j])]
    for _ in range(order):
        p = polys[-1]
        polys.append(P.polysub(P.polyder(p), 2.0 * a * P.polymulx(p)))
    return polys


def kernel_derivative(x, t, params, alpha):
    """Exact partial derivative ``d^alpha e(x, t)``.

    Returns 0 for ``t <= 0``.
    """
    alpha = MultiIndex(alpha)
    if len(alpha) != params.n:
        raise ValueError("multi-index length %d does not match n=%d" % (len(alpha), params.n))
    x = _split(x, params.n)
    t = float(t)
    if t <= 0:
        return 0j if x.ndim == 1 else np.zeros(x.shape[:-1], dtype=complex)
    base = eval_regularized(x, t, params)
    a = params.exponent_rate / t
    factor = np.ones(x.shape[:-1], dtype=complex)
    for j, k in enumerate(alpha):
        if k:
            factor = factor * P.polyval(x[..., j], derivative_polynomials(k, a)[k])
    out = _finite(base * factor)
    return complex(out) if x.ndim == 1 else out


def mass_constant(params):
    """``c(eps, n) = integral of e(x, t) over R^n``, independent of ``t``.

    Each coordinate contributes ``(4 pi t / kappa)**(1/2) = (4 pi (eps - i) t)**(1/2)``,
    which cancels the prefactor's ``t`` dependence.
    """
    eps = params.epsilon
    ratio = np.sqrt(eps - 1j) / np.sqrt(eps + 1j)
    return complex((eps + 1j) * ratio ** params.n)


def modulus_bound(x, t, params):
    """Gaussian majorant ``|prefactor(t)| * exp(-decay_rate(t) |x|^2)``."""
    x = _split(x, params.n)
    r2 = np.einsum("...i,...i->...", x, x)
    return abs(params.prefactor(t)) * np.exp(-params.decay_rate(t) * r2)


def pde_residual(F, x, t, params, h):
    """Centered-difference value of ``(Delta - kappa d/dt) F`` at ``(x, t)``.

    ``F`` is called as ``F(point, time)`` with a length-``n`` array.
    """
    x = np.asarray(x, dtype=float)
    if t - h <= 0:
        raise ValueError("time stencil [t - h, t + h] crosses t = 0 (t=%g, h=%g)" % (t, h))
    f0 = F(x, t)
    lap = 0j
    for j in range(x.shape[0]):
        step = np.zeros_like(x)
        step[j] = h
        lap += (F(x + step, t) - 2.0 * f0 + F(x - step, t)) / h ** 2
    dt = (F(x, t + h) - F(x, t - h)) / (2.0 * h)
    return complex(lap - params.kappa * dt)
