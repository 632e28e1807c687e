"""rotlab: obstruction invariants and repair for almost rotation-commuting unitaries."""

__version__ = "0.1.0"

from .config import DEFAULT_TOL, Tolerances  # noqa: E402
from .linalg import eig_normal, func_calc, normalized_trace, op_norm  # noqa: E402
from .obstruction import (  # noqa: E402
    ObstructionReport,
    RieffelParams,
    bott_element_theta0,
    common_gap_theta,
    defect,
    exel_lhs,
    exel_rhs,
    log_branch,
    obstruction_report,
    rieffel_element,
    rieffel_functions,
    rieffel_projection,
)
from .reps import (  # noqa: E402
    PhaseMatrix,
    RationalPhase,
    canonical_trace,
    clock_matrix,
    nondegeneracy_check,
    rational_pair_rep,
    rational_torus3_rep,
    shift_matrix,
)
from .search import (  # noqa: E402
    SearchConfig,
    SearchResult,
    bott_index_triple,
    plant_instance,
    repair,
    riemannian_gradient,
    unitaries_from_selfadjoint,
    voiculescu_triple,
)
