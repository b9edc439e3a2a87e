"""Symbolic Jacobian analysis of chemical reaction networks with monotone kinetics."""

from .charpoly import (
    CoefficientExpansion,
    P0Report,
    SignClass,
    characteristic_expansions,
    coefficient_expansion,
    evaluate,
    instability_certificate,
    minor_expansion,
    mixed_sign_witness,
    p0_check,
    sign_class,
)
from .dynamics import Trajectory, detect_oscillation, find_equilibrium, integrate
from .exact_linalg import det_int
from .kinetics import MMParams, Triple, mm_jacobian, mm_rates, realize_mm
from .network import Network, Reaction, load_network, parse_network, positive_kernel
from .selections import ChildSelection, cb_component, cb_evaluate, enumerate_all, enumerate_selections, parse_selection
from .spectral import (
    HuntOptions,
    check_pithm,
    eigenvalues,
    hunt_from_integer_conditions,
    hunt_imaginary,
    inertia,
    inherit_inertia,
    jacobian,
)

__version__ = "0.1.0"
