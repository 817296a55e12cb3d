"""Lie systems with a Vessiot-Guldberg Lie algebra isomorphic to sl(2, R).

One solution of the reduced equation on SL(2, R) gives, through explicit
group actions, the general solution of every system in the family
(Riccati, Milne-Pinney, harmonic oscillator, second- and third-order
Kummer-Schwarz, Wei-Norman).
"""
from .actions import act_ho, act_ks2, act_ks3, act_mp, act_riccati, act_wn, apply_action, fundamental_field_check
from .errors import ChartError, DegeneracyError, DomainError, Sl2Error, UsageError
from .reconstruction import (
    ResidualReport,
    cross_validate,
    invert_ks2,
    invert_ks3,
    invert_mp,
    invert_riccati,
    reconstruct,
)
from .reduced import ReducedPath, reduced_residual, right_translate, solve_reduced
from .sl2 import (
    CanonicalCoords,
    SL2Element,
    Sl2AlgebraElement,
    basis,
    commutator,
    compose,
    decompose_second_kind,
    exp_basis,
    exp_traceless,
    from_second_kind,
    inverse,
    project_unimodular,
)
from .superposition import (
    MixedConstants,
    PGL2Element,
    basic_sr_ks3,
    constants_from_initial,
    first_integral,
    fit_mobius_relation,
    mixed_sr_ks2,
    mobius,
    schwarzian_exact,
    schwarzian_fd,
    symmetry_residual,
    wronskian,
)
from .systems import (
    Coefficient,
    CurveCoefficient,
    SolverConfig,
    SystemKind,
    Trajectory,
    eval_field,
    generators,
    integrate,
    integrate_batch,
    lie_bracket_fd,
)

__version__ = "0.1.0"
