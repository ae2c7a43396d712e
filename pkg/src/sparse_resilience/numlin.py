"""Tolerance-aware linear algebra shared by the model-based and data-driven indices.

Every rank and support test in the package goes through this module, so the
tolerances in :class:`NumericalConfig` are the single place where floating
point meets the exact-arithmetic rank and l0 conditions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NumericalConfig:
    """Tolerances for numerical rank, entry-zero tests and eigenvalue clustering."""

    rank_rtol: float = 1e-8
    zero_atol: float = 1e-9
    zero_rtol: float = 1e-8
    eig_cluster_tol: float = 1e-7

    def __post_init__(self):
        for name in ("rank_rtol", "zero_atol", "zero_rtol", "eig_cluster_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")

    def replace(self, **overrides) -> "NumericalConfig":
        values = {k: v for k, v in overrides.items() if v is not None}
        return NumericalConfig(**{**self.__dict__, **values})


DEFAULT_CONFIG = NumericalConfig()


@dataclass(frozen=True)
class EigenCluster:
    lam: complex
    basis: np.ndarray = field(repr=False)

    @property
    def geo_mult(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class EigenStructure:
    """Clustered spectrum of a square matrix with orthonormal eigenspace bases."""

    clusters: tuple[EigenCluster, ...]

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    @property
    def eigenvalues(self) -> list[complex]:
        return [c.lam for c in self.clusters]

    @property
    def all_simple(self) -> bool:
        return all(c.geo_mult == 1 for c in self.clusters)

    def representatives(self, tol: float) -> list[EigenCluster]:
        """One cluster per complex-conjugate pair (the one with nonnegative imaginary part).

        Valid for real matrices only: rank and support results at conj(lam)
        are the conjugates of those at lam.
        """
        reps = []
        for c in self.clusters:
            if c.lam.imag < -tol and any(
                abs(o.lam - np.conj(c.lam)) <= tol for o in self.clusters
            ):
                continue
            reps.append(c)
        return reps


def _as_2d(M) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[np.newaxis, :]
    return M


def rank_threshold(M, cfg: NumericalConfig = DEFAULT_CONFIG) -> float:
    """Singular-value cutoff used by :func:`numerical_rank` for ``M``."""
    M = _as_2d(M)
    if M.size == 0:
        return 0.0
    smax = np.linalg.norm(M, 2)
    return cfg.rank_rtol * smax * max(M.shape)


def numerical_rank(M, cfg: NumericalConfig = DEFAULT_CONFIG, threshold: float | None = None) -> int:
    """Number of singular values above ``rank_rtol * s_max * max(rows, cols)``.

    ``threshold`` overrides the relative cutoff with an absolute one; the
    sparsest-vector search uses this so that submatrices are judged against
    the scale of the full matrix rather than their own.
    """
    M = _as_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    if threshold is None:
        threshold = cfg.rank_rtol * s[0] * max(M.shape)
    return int(np.count_nonzero(s > threshold))


def pseudoinverse(M) -> np.ndarray:
    """Moore-Penrose pseudoinverse."""
    return np.linalg.pinv(np.asarray(M))


def kernel_basis(M, cfg: NumericalConfig = DEFAULT_CONFIG, threshold: float | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical right null space of ``M``.

    ``threshold`` is an absolute singular-value cutoff replacing the relative one.
    """
    M = _as_2d(M).astype(complex)
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    if s[0] == 0.0:
        return np.eye(ncols, dtype=complex)
    if threshold is None:
        threshold = cfg.rank_rtol * s[0] * max(M.shape)
    r = int(np.count_nonzero(s > threshold))
    return vh[r:].conj().T


def _cluster_eigenvalues(values: np.ndarray, tol: float) -> list[complex]:
    # Deterministic order, then repeated centroid merging until centers are > tol apart.
    order = np.lexsort((values.imag, values.real))
    groups = [[complex(v)] for v in values[order]]
    merged = True
    while merged:
        merged = False
        centers = [np.mean(g) for g in groups]
        for i, j in itertools.combinations(range(len(groups)), 2):
            if abs(centers[i] - centers[j]) <= tol:
                groups[i].extend(groups.pop(j))
                merged = True
                break
    return [complex(np.mean(g)) for g in groups]


def eigen_structure(A, cfg: NumericalConfig = DEFAULT_CONFIG) -> EigenStructure:
    """Cluster the eigenvalues of ``A`` and attach an orthonormal eigenspace basis to each.

    Raises ``numpy.linalg.LinAlgError`` if the eigensolver does not converge.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"eigen_structure needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    values = np.linalg.eigvals(A)
    centers = _cluster_eigenvalues(values, cfg.eig_cluster_tol)
    norm_a = np.linalg.norm(A, 2)
    clusters = []
    for lam in centers:
        if abs(lam.imag) <= cfg.eig_cluster_tol:
            lam = complex(lam.real, 0.0)
        shifted = A - lam * np.eye(n)
        # A - lam I can be pure rounding noise (A close to lam I), so judge it
        # against the scale of A rather than its own.
        basis = kernel_basis(shifted, cfg, threshold=cfg.rank_rtol * max(norm_a, abs(lam)) * n)
        if basis.shape[1] == 0:
            # Centroid of a split defective cluster can miss the cutoff; keep the
            # closest direction so every cluster carries an eigenvector.
            _, _, vh = np.linalg.svd(shifted)
            basis = vh[-1:].conj().T
        clusters.append(EigenCluster(lam, _normalize_phase_columns(basis)))
    return EigenStructure(tuple(clusters))


def _normalize_phase_columns(basis: np.ndarray) -> np.ndarray:
    if basis.shape[1] != 1:
        return basis
    return normalize_phase(basis[:, 0])[:, np.newaxis]


def normalize_phase(v) -> np.ndarray:
    """Scale ``v`` to unit norm with its largest-magnitude entry real and positive."""
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return v
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k]) / norm


def zero_threshold(v, cfg: NumericalConfig = DEFAULT_CONFIG) -> float:
    v = np.asarray(v)
    peak = float(np.max(np.abs(v))) if v.size else 0.0
    return cfg.zero_atol + cfg.zero_rtol * peak


def count_nonzero_rows(v, cfg: NumericalConfig = DEFAULT_CONFIG) -> int:
    """Tolerant l0 count: entries with ``|v_i| > zero_atol + zero_rtol * max|v|``."""
    v = np.asarray(v).ravel()
    if v.size == 0:
        return 0
    return int(np.count_nonzero(np.abs(v) > zero_threshold(v, cfg)))


def zero_set_threshold(P, cfg: NumericalConfig = DEFAULT_CONFIG) -> float:
    """Absolute singular-value cutoff for zero-set feasibility tests on rows of ``P``.

    Floored at ``zero_atol`` so that a ``P`` made only of rounding noise counts
    as zero, matching :func:`count_nonzero_rows`.
    """
    return max(rank_threshold(P, cfg), cfg.zero_atol)


def zero_set_feasible(P, rows, cfg: NumericalConfig = DEFAULT_CONFIG, threshold: float | None = None) -> bool:
    """True iff some nonzero coefficient vector annihilates every row of ``P`` in ``rows``."""
    P = np.asarray(P)
    rows = list(rows)
    d = P.shape[1]
    if len(rows) < d:
        return True
    if threshold is None:
        threshold = zero_set_threshold(P, cfg)
    return numerical_rank(P[rows], cfg, threshold=threshold) < d


def sparsest_vector_in_subspace(M, B, cfg: NumericalConfig = DEFAULT_CONFIG) -> tuple[int, np.ndarray]:
    """Minimum tolerant l0 norm of ``M @ z`` over nonzero ``z`` in the column span of ``B``.

    Returns ``(min_l0, witness)`` with ``witness = B @ c`` for the minimizing
    coefficients. For one-dimensional spans the answer is the nonzero count of
    ``M @ B``. Otherwise the feasible zero-sets (row sets that some ``c``
    annihilates) are enumerated level by level; feasibility is closed under
    taking subsets, so a candidate of size ``s + 1`` is tested only when all of
    its ``s``-subsets were feasible. Cost is exponential in the row count.
    Ties between maximum zero-sets go to the one leaving the lexicographically
    smallest support.
    """
    M = _as_2d(M).astype(complex)
    B = np.asarray(B, dtype=complex)
    if B.ndim == 1:
        B = B[:, np.newaxis]
    if B.shape[1] == 0:
        raise ValueError("subspace basis must have at least one column")
    if M.shape[1] != B.shape[0]:
        raise ValueError(f"shape mismatch: M is {M.shape}, B is {B.shape}")
    d = B.shape[1]
    if numerical_rank(B, cfg) < d:
        raise ValueError(f"subspace basis is rank deficient (expected {d} independent columns)")

    q = M.shape[0]
    P = M @ B
    if d == 1:
        return count_nonzero_rows(P[:, 0], cfg), normalize_phase(B[:, 0])

    zset = _max_zero_set(P, cfg)
    if len(zset) == 0:
        c = np.zeros(d, dtype=complex)
        c[0] = 1.0
    else:
        _, _, vh = np.linalg.svd(P[list(zset)], full_matrices=True)
        c = vh[-1].conj()
    return q - len(zset), normalize_phase(B @ c)


def _max_zero_set(P: np.ndarray, cfg: NumericalConfig) -> tuple[int, ...]:
    q, d = P.shape
    threshold = zero_set_threshold(P, cfg)

    # Rows that vanish on their own belong to every maximal zero-set.
    always = [i for i in range(q) if np.linalg.norm(P[i]) <= threshold]
    rest = [i for i in range(q) if i not in always]

    def feasible(extra):
        return zero_set_feasible(P, always + list(extra), cfg, threshold)

    if feasible(rest):
        return tuple(range(q))

    # Sets of size < d - len(always) are trivially feasible.
    base = max(0, d - 1 - len(always))
    base = min(base, len(rest))
    def support_key(zs):
        return tuple(i for i in rest if i not in zs)

    level = [c for c in itertools.combinations(rest, base) if feasible(c)]
    best = min(level, key=support_key) if level else ()
    while level:
        known = set(level)
        candidates = []
        for s in level:
            for j in rest:
                if s and j <= s[-1]:
                    continue
                cand = s + (j,)
                if all(sub in known for sub in itertools.combinations(cand, len(s))):
                    candidates.append(cand)
        level = [c for c in candidates if feasible(c)]
        if level:
            best = min(level, key=support_key)
    return tuple(sorted(always + list(best)))
