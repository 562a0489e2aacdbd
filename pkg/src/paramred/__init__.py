"""Exact formal reduction of singularly-perturbed linear differential
systems near turning points."""

__version__ = "0.1.0"

from .coeff import QQ, AlgebraicNumber, ExtensionTower, Upoly, adjoin_root, distinct_root_partition
from .series import BiSeries, PuiseuxSeries, bi_derive, normalize, ramify_eps, ramify_x, rescale_to_regular
from .linalg import PerturbedSystem, Trunc, char_poly, gauge_apply, smith_column_reduce, sylvester_solve
from .scalar import ScalarEquation, eps_polygon, exp_order_scalar, scalar_moser, scalar_to_irreducible_system
from .reduce import (
    eigen_shift,
    eps_rank_reduce,
    exp_order_system,
    katz_ramify,
    resolve_turning_point,
    split,
    theta,
)
from .driver import (
    Config,
    ExpPart,
    InputSystem,
    ReductionTrace,
    formal_reduce,
    input_from_presentation,
    integrate_rank1,
    iterative_restraining,
    restraining_indices,
    stretch,
)
