"""Model-based sparse observability index of a known (A, C).

Two independent routes: PBH rank tests over every sensor subset, and the
sparsest output image of each eigenspace. They must agree on every system.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .numlin import (
    DEFAULT_CONFIG,
    NumericalConfig,
    count_nonzero_rows,
    eigen_structure,
    numerical_rank,
    sparsest_vector_in_subspace,
)
from .sysmodel import LtiSystem


@dataclass(frozen=True)
class SparseObsResult:
    """Sparse observability index with its certificate.

    ``index == -1`` means the system is unobservable with all sensors.
    ``witness_subset`` is a removal set of size ``index + 1`` that destroys
    observability; ``witness_eigenvector`` is an eigenvector whose output
    image has exactly ``index + 1`` nonzero entries.
    """

    index: int
    method: str
    witness_subset: frozenset[int] | None = None
    witness_eigenvector: np.ndarray | None = None


def pbh_observable(sys: LtiSystem, sensor_set, cfg: NumericalConfig = DEFAULT_CONFIG, eig=None) -> bool:
    """PBH test for (A, C_sensor_set), checked at each clustered eigenvalue of A."""
    rows = sorted(sensor_set)
    if any(not 0 <= i < sys.q for i in rows):
        raise ValueError(f"sensor set {rows} is outside 0..{sys.q - 1}")
    eig = eig if eig is not None else eigen_structure(sys.A, cfg)
    n = sys.n
    C_sub = sys.C[rows]
    scale = max(np.linalg.norm(sys.A, 2), np.linalg.norm(sys.C, 2))
    for cluster in eig.representatives(cfg.eig_cluster_tol):
        stacked = np.vstack([sys.A - cluster.lam * np.eye(n), C_sub])
        # Cutoff tied to the whole system so a noise-level stack is not full rank.
        threshold = cfg.rank_rtol * max(scale, abs(cluster.lam)) * max(stacked.shape)
        if numerical_rank(stacked, cfg, threshold=threshold) < n:
            return False
    return True


def sparse_obs_index_enum(sys: LtiSystem, cfg: NumericalConfig = DEFAULT_CONFIG) -> SparseObsResult:
    """Largest delta such that removing any delta sensors keeps the system observable."""
    q = sys.q
    eig = eigen_structure(sys.A, cfg)
    sensors = range(q)
    for delta in range(q):
        for removed in itertools.combinations(sensors, delta):
            kept = set(sensors).difference(removed)
            if not pbh_observable(sys, kept, cfg, eig):
                if delta == 0:
                    return SparseObsResult(-1, "subset_enum")
                return SparseObsResult(delta - 1, "subset_enum", frozenset(removed))
    # Removing all q sensors always breaks observability.
    return SparseObsResult(q - 1, "subset_enum", frozenset(sensors))


def sparse_obs_index_eig(sys: LtiSystem, cfg: NumericalConfig = DEFAULT_CONFIG) -> SparseObsResult:
    """Index as (min over eigenvectors v of ||C v||_0) - 1."""
    eig = eigen_structure(sys.A, cfg)
    best, witness = None, None
    for cluster in eig.representatives(cfg.eig_cluster_tol):
        k, v = sparsest_vector_in_subspace(sys.C, cluster.basis, cfg)
        if best is None or k < best:
            best, witness = k, v
    if best == 0:
        return SparseObsResult(-1, "eig_sparsity", witness_eigenvector=witness)
    return SparseObsResult(best - 1, "eig_sparsity", witness_eigenvector=witness)


def witness_support_size(sys: LtiSystem, result: SparseObsResult, cfg: NumericalConfig = DEFAULT_CONFIG) -> int:
    return count_nonzero_rows(sys.C @ result.witness_eigenvector, cfg)
