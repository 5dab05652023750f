"""Structure-preserving approximation of SU(N)-valued loops by polynomial loops."""
from .errors import (
    AliasingError,
    BranchCutError,
    DegreeViolation,
    InfeasiblePlanError,
    LoopForgeError,
    StructureError,
)
from .loops import (
    GridLoop,
    LoopClassReport,
    TrigMatrixLoop,
    analyze,
    classify,
    degree_trim,
    embed_T,
    evaluate,
    matrix_exp_skew,
    matrix_log_principal,
    multiply,
    sup_distance,
    synthesize,
)
from .pipeline import (
    ApproxPlan,
    Factor,
    FactoredLoop,
    approximate_factor,
    approximate_loop,
    assemble,
    homotopy_factorize,
    plan_parameters,
)
from .splitting import (
    SplittingScheme,
    apply_scheme_loops,
    apply_scheme_matrices,
    build_scheme,
    order_study,
    suzuki_bound,
    yoshida_coeffs,
)
from .su2 import BasisCoeffs, basis_element, exp_factor, expand_in_basis, ordered_product
from .vp import SmoothnessSpec, partial_sum, synth_lip_su_loop, vp_mean

__version__ = "0.1.0"
