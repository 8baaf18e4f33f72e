"""Lattices, spin/pin sign characters and the flat manifolds built from them."""
from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

__all__ = [
    "Lattice",
    "lattice_from_basis",
    "enumerate_shifted",
    "reduce",
    "SpinStructure",
    "all_spin_structures",
    "character",
    "sgn_moebius",
    "ManifoldKind",
    "ManifoldSpec",
    "identify",
]

MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class Lattice:
    """Rank-``k`` lattice in R^n with basis rows ``v_1..v_k``.

    ``dual`` rows ``w_i`` lie in the span of the basis and satisfy
    ``<w_i, v_j> = delta_ij``.
    """

    basis: np.ndarray
    gram: np.ndarray = field(repr=False)
    dual: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.basis.shape[1]

    @property
    def rank(self):
        return self.basis.shape[0]

    @property
    def covolume(self):
        """Volume of a fundamental cell within the span."""
        return math.sqrt(np.linalg.det(self.gram))

    @property
    def covering_bound(self):
        """Upper bound ``sum |v_i| / 2`` on the covering radius."""
        return 0.5 * float(np.sum(np.linalg.norm(self.basis, axis=1)))

    def key(self):
        return (self.basis.shape, self.basis.tobytes())

    def __eq__(self, other):
        return isinstance(other, Lattice) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def coordinates(self, x):
        """Lattice coordinates ``<w_i, x>`` of points ``x`` (shape ``(..., n)``)."""
        return np.asarray(x, dtype=float) @ self.dual.T

    def project(self, x):
        """Orthogonal projection of ``x`` onto the span of the basis."""
        return self.coordinates(x) @ self.basis


def lattice_from_basis(vectors):
    basis = np.atleast_2d(np.asarray(vectors, dtype=float))
    if basis.ndim != 2 or basis.shape[0] > basis.shape[1]:
        raise ValueError("need k <= n basis vectors of length n, got shape %s" % (basis.shape,))
    if not np.all(np.isfinite(basis)):
        raise ValueError("basis contains non-finite entries")
    sv = np.linalg.svd(basis, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > MAX_CONDITION:
        raise ValueError("basis vectors are linearly dependent or ill-conditioned (cond > %g)" % MAX_CONDITION)
    gram = basis @ basis.T
    dual = np.linalg.solve(gram, basis)
    for arr in (basis, gram, dual):
        arr.setflags(write=False)
    return Lattice(basis, gram, dual)


def enumerate_shifted(lattice, center, radius):
    """Lattice vectors ``v`` with ``|center + v| <= radius``.

    Returns ``(coeffs, vectors)``: integer coefficient rows ``m`` and the
    vectors ``v = m @ basis``, sorted by ``|center + v|`` with ties broken
    lexicographically on ``m``.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    center = np.asarray(center, dtype=float)
    c = lattice.coordinates(center)
    wnorm = np.linalg.norm(lattice.dual, axis=1)
    # |<w_i, center + v>| <= |w_i| radius, and <w_i, center + v> = c_i + m_i
    lo = np.floor(-c - radius * wnorm).astype(int)
    hi = np.ceil(-c + radius * wnorm).astype(int)
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    coeffs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lattice.rank)
    vectors = coeffs @ lattice.basis
    dist = np.linalg.norm(center + vectors, axis=1)
    keep = dist <= radius
    coeffs, vectors, dist = coeffs[keep], vectors[keep], dist[keep]
    order = np.lexsort(tuple(coeffs[:, i] for i in range(lattice.rank - 1, -1, -1)) + (dist,))
    return coeffs[order], vectors[order]


def reduce(x, lattice):
    """Split ``x = representative + m @ basis`` with lattice coordinates in [0, 1)."""
    if lattice.rank != lattice.n:
        raise ValueError("reduce needs a full-rank lattice (rank %d < n=%d)" % (lattice.rank, lattice.n))
    c = lattice.coordinates(x)
    m = np.floor(c)
    frac = c - m
    # guard against frac == 1.0 after rounding
    wrap = frac >= 1.0
    m = np.where(wrap, m + 1, m)
    frac = np.where(wrap, 0.0, frac)
    return frac @ lattice.basis, m.astype(int)


@dataclass(frozen=True)
class SpinStructure:
    """Sign character ``m -> (-1)**sum_{i in S} m_i`` on a rank-``k`` lattice.

    ``signs`` holds 1-based generator labels.
    """

    signs: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "signs", frozenset(int(i) for i in self.signs))
        if any(i < 1 for i in self.signs):
            raise ValueError("spin generator labels are 1-based: %r" % (sorted(self.signs),))

    def check(self, rank):
        if any(i > rank for i in self.signs):
            raise ValueError("spin structure %r refers to generators beyond rank %d" % (sorted(self.signs), rank))

    def mask(self, rank):
        return np.array([1 if i + 1 in self.signs else 0 for i in range(rank)])

    @property
    def is_trivial(self):
        return not self.signs


def all_spin_structures(rank):
    """The ``2**rank`` sign characters, ordered by bitmask."""
    return [SpinStructure(frozenset(i + 1 for i in range(rank) if b >> i & 1)) for b in range(1 << rank)]


def character(spin, m):
    """``(-1)**sum_{i in S} m_i``; ``m`` may be a batch of rows."""
    m = np.asarray(m, dtype=int)
    rank = m.shape[-1]
    spin.check(rank)
    parity = (m @ spin.mask(rank)) & 1
    out = 1 - 2 * parity
    return int(out) if out.ndim == 0 else out


def sgn_moebius(m):
    """+1 if every coefficient is even (``v`` in ``2 Omega_k``), else -1."""
    m = np.asarray(m, dtype=int)
    out = np.where(np.all(m % 2 == 0, axis=-1), 1, -1)
    return int(out) if out.ndim == 0 else out


class ManifoldKind(Enum):
    TORUS = "torus"
    CYLINDER = "cylinder"
    MOEBIUS = "moebius"
    KLEIN = "klein"


@dataclass(frozen=True)
class ManifoldSpec:
    """Flat manifold: quotient of R^n by a lattice, possibly with a flip.

    * ``TORUS``: rank-n lattice.
    * ``CYLINDER``: rank k < n lattice spanning the first k coordinate axes.
    * ``MOEBIUS``: as the cylinder; ``x_n`` is flipped by ``sgn_moebius``.
    * ``KLEIN``: lattice ``Omega_{n-1} + Z e_n`` with ``Omega_{n-1}`` in R^{n-1};
      the image under ``m`` flips ``x_n`` by ``(-1)**m_n``.
    """

    kind: ManifoldKind
    lattice: Lattice
    spin: SpinStructure = SpinStructure()

    def __post_init__(self):
        kind = ManifoldKind(self.kind)
        object.__setattr__(self, "kind", kind)
        lat = self.lattice
        n, k = lat.n, lat.rank
        self.spin.check(k)
        if kind is ManifoldKind.TORUS:
            if k != n:
                raise ValueError("torus needs a rank-n lattice (rank %d, n=%d)" % (k, n))
        elif kind in (ManifoldKind.CYLINDER, ManifoldKind.MOEBIUS):
            if not 1 <= k <= n - 1:
                raise ValueError("%s needs rank k in 1..n-1 (rank %d, n=%d)" % (kind.value, k, n))
            if np.any(lat.basis[:, k:] != 0):
                raise ValueError("%s lattice must lie in the first k=%d coordinates" % (kind.value, k))
        else:
            if n < 2 or k != n:
                raise ValueError("klein needs n >= 2 and a rank-n lattice")
            last = np.zeros(n)
            last[-1] = 1.0
            if np.any(lat.basis[:-1, -1] != 0) or not np.array_equal(lat.basis[-1], last):
                raise ValueError(
                    "klein lattice must be normalized to Omega_{n-1} + Z e_n "
                    "(apply a rotation and a dilation first)")

    @property
    def n(self):
        return self.lattice.n

    @property
    def rank(self):
        return self.lattice.rank


def identify(spec, x, m):
    """Representative of ``x`` after undoing the group element labelled ``m``.

    Moebius: ``(x_ + v, x', x_n) -> (x_, x', sgn(v) x_n)``.
    Klein: ``(x_ + v_, x_n + m_n) -> (x_, (-1)**m_n x_n)``.
    """
    x = np.array(x, dtype=float)
    m = np.asarray(m, dtype=int)
    if m.shape != (spec.rank,):
        raise ValueError("expected %d coefficients, got %s" % (spec.rank, m.shape))
    if spec.kind is ManifoldKind.MOEBIUS:
        x = x - m @ spec.lattice.basis
        x[-1] *= sgn_moebius(m)
        return x
    if spec.kind is ManifoldKind.KLEIN:
        x = x - m @ spec.lattice.basis
        if m[-1] % 2:
            x[-1] = -x[-1]
        return x
    raise ValueError("identify applies to moebius and klein manifolds, not %s" % spec.kind.value)
