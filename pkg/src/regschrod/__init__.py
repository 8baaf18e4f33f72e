"""Regularized Schroedinger kernels, their periodizations on flat manifolds and
the associated evolution semigroup."""
from .clifford import Multivector, dirac_fd, geometric_product, inner_product, modulus_sq
from .geometry import (
    Lattice,
    ManifoldKind,
    ManifoldSpec,
    SpinStructure,
    character,
    enumerate_shifted,
    identify,
    lattice_from_basis,
    reduce,
    sgn_moebius,
)
from .kernel import (
    RegKernelParams,
    eval_limit,
    eval_regularized,
    kernel_derivative,
    make_params,
    mass_constant,
    pde_residual,
)
from .periodize import (
    TruncationError,
    TruncationPolicy,
    cylinder_kernel,
    klein_kernel,
    moebius_kernel,
    periodized_kernel,
    torus_kernel,
    torus_kernel_derivative,
    truncation_radius,
)
from .semigroup import (
    GridFunction,
    apply_convolution,
    apply_spectral,
    dissipativity_pairing,
    lp_norm,
    make_grid,
    weak_limit_pairings,
)
from .verification import run_verification

__version__ = "0.1.0"
