"""Seeded generators of test systems with non-trivial sparse observability indices.

Plain Gaussian (A, C) almost surely gives the trivial index q - 1, so most
ensembles here use block-diagonal dynamics (sparse eigenvectors) observed
through a masked C.
"""

import numpy as np

from sparse_resilience import LtiSystem, build_data_matrices, random_system, simulate


def _block(rng, kind, value=None):
    if kind == 1:
        r = value if value is not None else rng.uniform(0.5, 1.1) * rng.choice([-1.0, 1.0])
        return np.array([[r]])
    r = rng.uniform(0.6, 1.05)
    th = rng.uniform(0.2, 2.9)
    return r * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])


def structured_system(rng, n, q, repeated=False, mix=None, density=None) -> LtiSystem:
    """Block-diagonal A (optionally with a repeated real eigenvalue) and masked Gaussian C.

    ``mix`` applies an orthogonal change of basis, which keeps the spectrum
    but makes eigenvectors dense.
    """
    blocks, size = [], 0
    while size < n:
        kind = 2 if (n - size >= 2 and rng.random() < 0.4) else 1
        blocks.append(_block(rng, kind))
        size += kind
    if repeated and n >= 2:
        blocks = [np.array([[0.8]]), np.array([[0.8]])] + [_block(rng, 1) for _ in range(n - 2)]
    A = np.zeros((n, n))
    i = 0
    for b in blocks:
        k = b.shape[0]
        A[i:i + k, i:i + k] = b
        i += k
    perm = rng.permutation(n)
    A = A[np.ix_(perm, perm)]
    density = density if density is not None else rng.uniform(0.3, 0.9)
    C = rng.standard_normal((q, n)) * (rng.random((q, n)) < density)
    if mix if mix is not None else rng.random() < 0.25:
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        A = Q @ A @ Q.T
        C = C @ Q.T
    return LtiSystem(A, C)


def has_distinct_eigenvalues(sys, gap=1e-3):
    ev = np.linalg.eigvals(sys.A)
    d = np.abs(ev[:, None] - ev[None, :]) + np.eye(len(ev)) * 1e9
    return d.min() > gap


def ensemble_system(seed, n_range=(2, 6), q_range=(3, 8), repeated_ok=True):
    """Mixture of normalized Gaussian systems and structured systems, keyed by seed."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    q = int(rng.integers(q_range[0], q_range[1] + 1))
    if seed % 4 == 0:
        return random_system(n, q, rng, spectral_radius=1.0)
    return structured_system(rng, n, q, repeated=repeated_ok and seed % 7 == 0)


def clean_data(sys, seed, T=None):
    rng = np.random.default_rng(10_000 + seed)
    T = T if T is not None else sys.n + 10
    traj = simulate(sys, rng.standard_normal(sys.n), T)
    return traj, build_data_matrices(traj.states, traj.nominal_outputs)


def data_ready_system(seed, n_range=(2, 6), q_range=(3, 8)):
    """Ensemble system redrawn until its eigenvalues are distinct (single trajectories need that)."""
    k = 0
    while True:
        sys = ensemble_system(seed * 1000 + k, n_range, q_range, repeated_ok=False)
        if has_distinct_eigenvalues(sys):
            return sys
        k += 1
