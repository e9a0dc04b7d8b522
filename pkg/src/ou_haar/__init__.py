"""Multiresolution (Haar-like) construction of Wiener and Ornstein-Uhlenbeck paths."""

from .basis import (
    BasisIndex,
    Kind,
    ProcessParams,
    basis_eval,
    basis_star_eval,
    haar_eval,
    locate_index,
    phi_eval,
    phi_star_eval,
    psi_eval,
    psi_star_eval,
)
from .bridge import BridgeStats, Conditioning, bridge, ou_bridge, wiener_bridge
from .covariance import (
    cov_exact,
    cov_partial_sum,
    cov_telescoped,
    head_sum,
    ou_cov_exact,
    tail_identity,
    telescope_trace,
    wiener_cov_exact,
)
from .dyadic import DyadicRational, binary_digits
from .errors import DomainError, PreconditionError
from .fpt import FptResult, exhaustive_bracket, first_passage_bracket
from .sampler import GridPath, PathExpansion, empirical_covariance, ensemble

__version__ = "0.1.0"
