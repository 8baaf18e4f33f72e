"""Complexified Clifford algebra Cl(0, n) and a finite-difference Dirac operator.

Blades are indexed by bitmask: bit ``j`` set means generator ``e_{j+1}`` is a
factor, in ascending order.  ``e_i e_j + e_j e_i = -2 delta_ij``.
"""
from functools import lru_cache

import numpy as np

__all__ = [
    "Multivector",
    "blade_sign",
    "product_table",
    "geometric_product",
    "modulus_sq",
    "inner_product",
    "dirac_fd",
]


def _popcount(x):
    return bin(x).count("1")


def blade_sign(a, b):
    """Sign of ``e_A e_B = sign * e_{A xor B}`` for bitmasks ``a``, ``b``."""
    # transpositions needed to move each generator of b past the larger ones in a
    swaps = 0
    a_shift = a >> 1
    while a_shift:
        swaps += _popcount(a_shift & b)
        a_shift >>= 1
    # every shared generator squares to -1
    swaps += _popcount(a & b)
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def product_table(n):
    """Blade product table for Cl(0, n).

    Returns ``(index, sign)``, two ``(2**n, 2**n)`` integer arrays with
    ``e_A e_B = sign[A, B] * e_{index[A, B]}``.
    """
    size = 1 << n
    index = np.empty((size, size), dtype=np.intp)
    sign = np.empty((size, size), dtype=np.int8)
    for a in range(size):
        for b in range(size):
            index[a, b] = a ^ b
            sign[a, b] = blade_sign(a, b)
    index.setflags(write=False)
    sign.setflags(write=False)
    return index, sign


class Multivector:
    """Element of the complexified Clifford algebra Cl(0, n).

    Coefficients are stored densely as a complex array of length ``2**n``
    indexed by blade bitmask.
    """

    __slots__ = ("n", "coeffs")

    def __init__(self, n, coeffs=None):
        if n < 1:
            raise ValueError("dimension must be positive, got %r" % (n,))
        self.n = int(n)
        size = 1 << self.n
        if coeffs is None:
            data = np.zeros(size, dtype=complex)
        elif isinstance(coeffs, dict):
            data = np.zeros(size, dtype=complex)
            for key, value in coeffs.items():
                mask = _as_mask(key, self.n)
                data[mask] += value
        else:
            data = np.array(coeffs, dtype=complex)
            if data.shape != (size,):
                raise ValueError("expected %d coefficients, got shape %s" % (size, data.shape))
        data.setflags(write=False)
        self.coeffs = data

    @classmethod
    def scalar(cls, n, value=1.0):
        return cls(n, {0: value})

    @classmethod
    def blade(cls, n, generators, value=1.0):
        """``value * e_{g1} e_{g2} ...`` for 1-based generator labels.

        The generators are multiplied in the order given, so repeated or
        unordered labels pick up the corresponding sign.
        """
        out = cls.scalar(n, value)
        for g in generators:
            out = out * cls(n, {(g,): 1.0})
        return out

    @classmethod
    def vector(cls, values):
        values = np.asarray(values, dtype=complex)
        n = values.shape[0]
        return cls(n, {1 << j: values[j] for j in range(n)})

    def _check(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        if other.n != self.n:
            raise ValueError("dimension mismatch: %d vs %d" % (self.n, other.n))
        return other

    def __add__(self, other):
        if np.isscalar(other):
            other = Multivector.scalar(self.n, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Multivector(self.n, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            other = Multivector.scalar(self.n, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Multivector(self.n, self.coeffs - other.coeffs)

    def __neg__(self):
        return Multivector(self.n, -self.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return Multivector(self.n, self.coeffs * other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return geometric_product(self, other)

    def __rmul__(self, other):
        if np.isscalar(other):
            return Multivector(self.n, self.coeffs * other)
        return NotImplemented

    def __repr__(self):
        terms = []
        for mask in np.flatnonzero(self.coeffs):
            label = "".join(str(j + 1) for j in range(self.n) if mask >> j & 1)
            terms.append("%s*e%s" % (self.coeffs[mask], label or "0"))
        return "Multivector(n=%d, %s)" % (self.n, " + ".join(terms) or "0")

    def allclose(self, other, atol=1e-12):
        other = other if isinstance(other, Multivector) else Multivector.scalar(self.n, other)
        return self.n == other.n and np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)

    def scalar_part(self):
        return self.coeffs[0]

    def grade(self, k):
        masks = np.arange(1 << self.n)
        keep = np.array([_popcount(int(m)) == k for m in masks])
        return Multivector(self.n, np.where(keep, self.coeffs, 0))

    def conjugate(self):
        """Clifford conjugation combined with complex conjugation.

        ``conj(e_A) = (-1)**(|A|(|A|+1)/2) e_A``, so ``e_A conj(e_A) = 1``.
        """
        grades = np.array([_popcount(m) for m in range(1 << self.n)])
        signs = np.where((grades * (grades + 1) // 2) % 2, -1.0, 1.0)
        return Multivector(self.n, signs * np.conj(self.coeffs))


def _as_mask(key, n):
    if isinstance(key, (int, np.integer)):
        mask = int(key)
    else:
        mask = 0
        for g in key:
            if not 1 <= g <= n:
                raise ValueError("generator label %r outside 1..%d" % (g, n))
            mask |= 1 << (g - 1)
    if not 0 <= mask < (1 << n):
        raise ValueError("blade index %r outside the power set of 1..%d" % (key, n))
    return mask


def geometric_product(a, b):
    if a.n != b.n:
        raise ValueError("dimension mismatch: %d vs %d" % (a.n, b.n))
    index, sign = product_table(a.n)
    outer = np.outer(a.coeffs, b.coeffs) * sign
    out = np.zeros(1 << a.n, dtype=complex)
    np.add.at(out, index.ravel(), outer.ravel())
    return Multivector(a.n, out)


def modulus_sq(a):
    """``|a|^2 = 2**n * sum_A |a_A|^2``."""
    return float((1 << a.n) * np.sum(np.abs(a.coeffs) ** 2))


def inner_product(u, v, weights):
    """Discrete ``2**n * sum_i w_i [u_i conj(v_i)]_0``.

    ``u`` and ``v`` are sampled multivector fields: arrays whose last axis has
    length ``2**n`` (blade coefficients).  ``weights`` broadcasts against the
    sample axes.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError("grid mismatch: %s vs %s" % (u.shape, v.shape))
    size = u.shape[-1]
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ValueError("last axis must hold 2**n blade coefficients, got %d" % size)
    # [e_A conj(e_B)]_0 = delta_AB
    local = np.sum(u * np.conj(v), axis=-1)
    w = np.broadcast_to(np.asarray(weights, dtype=float), local.shape)
    return complex((1 << n) * np.sum(w * local))


def _centered(u, axis, h, n):
    # trims one point per side on each of the n leading (spatial) axes
    sl_hi = [slice(1, -1)] * n
    sl_lo = [slice(1, -1)] * n
    sl_hi[axis] = slice(2, None)
    sl_lo[axis] = slice(None, -2)
    return (u[tuple(sl_hi)] - u[tuple(sl_lo)]) / (2.0 * h)


def dirac_fd(u, h, n=None):
    """Centered-difference Dirac operator ``D = sum_j e_j d/dx_j``.

    Parameters
    ----------
    u : array_like
        A scalar field on an ``n``-dimensional grid (shape ``(N1, ..., Nn)``)
        or a multivector field with a trailing blade axis of length ``2**n``.
        Pass ``n`` to disambiguate the latter.
    h : float or sequence of float
        Grid spacing, per axis if a sequence.
    n : int, optional
        Spatial dimension.  Defaults to ``u.ndim`` (scalar field).

    Returns
    -------
    ndarray
        Multivector field on the interior points, shape
        ``(N1 - 2, ..., Nn - 2, 2**n)``.
    """
    u = np.asarray(u, dtype=complex)
    if n is None:
        n = u.ndim
        u = u[..., None] * np.eye(1 << n, dtype=complex)[0]
    elif u.ndim != n + 1 or u.shape[-1] != 1 << n:
        raise ValueError("multivector field must have shape (N1..Nn, 2**n)")
    if any(s < 3 for s in u.shape[:n]):
        raise ValueError("grid too small for the centered stencil: %s" % (u.shape[:n],))
    steps = np.broadcast_to(np.asarray(h, dtype=float), (n,))
    index, sign = product_table(n)
    interior = tuple(s - 2 for s in u.shape[:n])
    out = np.zeros(interior + (1 << n,), dtype=complex)
    for j in range(n):
        du = _centered(u, j, steps[j], n)
        gen = 1 << j
        # left multiplication by e_j maps blade B to e_j e_B
        for b in range(1 << n):
            out[..., index[gen, b]] += sign[gen, b] * du[..., b]
    return out
