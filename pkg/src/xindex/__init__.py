"""Numerical toolkit for relative indices of dissipative operators on
weighted block algebras: negative-part operators, trace determinants,
Schur-complement identities, characteristic functions, and a seeded
verification harness.
"""

from .algebra import (
    AlgebraDescriptor,
    Operator,
    block2,
    diagonal_operator,
    from_blocks,
    identity,
    inverse,
    norm,
    psd_sqrt,
    scalar_operator,
    spectral,
    tau2,
    trace,
    zeros,
)
from .bschwinger import (
    BSInstance,
    BSLimitMode,
    block_corollary,
    bs_limit,
    factor_perturbation,
    sa_specialization,
    schur_complements,
    verify_bs,
)
from .dets import (
    cayley_path,
    det_tau_dissipative,
    det_tau_unitary,
    det_tau_via_path,
    dlhs_det_path,
    fk_det,
    linear_path,
    path_determinant,
    polar_identity_check,
    sampled_path,
)
from .ensembles import Ensemble, generate, trial_rng
from .errors import (
    BranchCutError,
    DomainError,
    ExistenceError,
    NumericError,
    PathError,
    StructuralError,
    ToolkitError,
)
from .harness import ExperimentConfig, config_from_sources, execute, run
from .matio import load_operator, save_operator
from .oplog import IM_CUT, RE_CUT, arg_unitary, exp_op, log_integral, log_op, log_series
from .reports import VerificationReport, read_ndjson, write_ndjson
from .scattering import (
    BKInstance,
    birman_krein,
    birman_krein_prescribed,
    boundary_resolvent,
    char_function,
    xi_dissipative_identity,
)
from .xi import (
    EpsSchedule,
    XiStrategy,
    XiTag,
    kernel_projections,
    morse_index,
    ssf_curve,
    tau_fredholm_index,
    xi_index,
    xi_operator,
    xi_selfadjoint_split,
    xi_trace,
)

__version__ = "0.1.0"
