"""relent — relative entropy of entanglement with restricted measurements.

Numerical toolbox for E_R^P over separable/PPT reference sets, its
measurement-restricted variants with certified lower bounds, and
verification suites for the underlying inequalities.
"""

from .entropy import (
    classical_kl,
    measured_relative_entropy,
    quantum_relative_entropy,
    von_neumann_entropy,
)
from .povm import (
    CertifiedValue,
    MeasurementClassSpec,
    Povm,
    informationally_complete_lo,
    matthews_faithfulness_bound,
    pinsker_lower_bound,
    restricted_ree,
    restricted_relative_entropy,
    validate_povm,
)
from .qops import DensityOperator, ProductDecomposition
from .refsets import (
    ReferenceSetSpec,
    SolverConfig,
    is_ppt_all_cuts,
    min_kl_over_reference_set,
    multipartite_mutual_information,
    relative_entropy_of_entanglement,
    trace_distance_to_set,
)
from .states import (
    bell_diagonal,
    bell_phi_plus,
    ghz_state,
    maximally_mixed,
    tiles_state,
    werner_state,
)
from .verify import VerificationReport, run_suite

__version__ = "0.1.0"
