"""Guenter tangential derivatives ``D_j = d_j - nu_j d_nu`` for spheres centred at 0.

``nu(x) = x / |x|``; the derivatives are taken in the ambient space, so
``sum_j D_j D_j`` reproduces the Laplace-Beltrami operator of the sphere
through ``x``.  Generator labels ``j`` are 1-based.
"""
from dataclasses import dataclass

import numpy as np

__all__ = ["AmbientFunction", "guenter_derivative", "guenter_gradient", "guenter_laplacian"]


@dataclass(frozen=True)
class AmbientFunction:
    """Function on a neighbourhood of a sphere, optionally with its gradient."""

    n: int
    evaluator: object
    gradient: object = None

    def __call__(self, x):
        return self.evaluator(x)


def _normal(x):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0:
        raise ValueError("the normal x/|x| is undefined at the origin")
    return x / r


def _fd_gradient(func, x, h):
    g = np.empty(len(x), dtype=complex)
    for i in range(len(x)):
        step = np.zeros_like(x)
        step[i] = h
        g[i] = (func(x + step) - func(x - step)) / (2.0 * h)
    return g


def _gradient(f, x, h):
    if f.gradient is not None:
        return np.asarray(f.gradient(x), dtype=complex)
    return _fd_gradient(f, x, h)


def _tangential(grad, nu):
    return grad - nu * np.dot(nu, grad)


def _check(f, j, x):
    if x.shape != (f.n,):
        raise ValueError("expected a point in R^%d, got shape %s" % (f.n, x.shape))
    if not 1 <= j <= f.n:
        raise ValueError("derivative label %r outside 1..%d" % (j, f.n))


def guenter_derivative(j, f, x, h=1e-3):
    """``D_j f(x) = d_j f - nu_j d_nu f``; analytic gradient used when available."""
    x = np.asarray(x, dtype=float)
    _check(f, j, x)
    nu = _normal(x)
    return complex(_tangential(_gradient(f, x, h), nu)[j - 1])


def guenter_gradient(f, x, h=1e-3):
    """All ``D_j f(x)`` as a vector; orthogonal to ``nu(x)``."""
    x = np.asarray(x, dtype=float)
    _check(f, 1, x)
    return _tangential(_gradient(f, x, h), _normal(x))


def guenter_laplacian(f, x, h=1e-3):
    """``sum_j D_j (D_j f)`` with centred differences for the outer derivative."""
    x = np.asarray(x, dtype=float)
    _check(f, 1, x)
    nu = _normal(x)
    total = 0j
    for j in range(1, f.n + 1):
        inner = AmbientFunction(f.n, lambda y, j=j: guenter_derivative(j, f, y, h))
        total += _tangential(_fd_gradient(inner, x, h), nu)[j - 1]
    return total
