"""Sparse observability indices of LTI systems from models and from trajectory data."""

from .numlin import NumericalConfig, DEFAULT_CONFIG
from .sysmodel import (
    AttackSpec,
    DataMatrices,
    LtiSystem,
    Scenario,
    Strategy,
    Trajectory,
    build_data_matrices,
    inject_attack,
    pendulum_system,
    random_system,
    simulate,
)
from .oracle import SparseObsResult, pbh_observable, sparse_obs_index_eig, sparse_obs_index_enum
from .datadriven import (
    FastPathUnavailable,
    InformativityVerdict,
    ResilienceReport,
    check_informative_attack_free,
    dispatch_rho_max,
    rho_max_attack_free,
    rho_max_attack_free_poly,
    rho_max_poisoned,
    rho_max_poisoned_poly,
)

__version__ = "0.1.0"
