"""Data-driven sparse observability index from attack-free or poisoned trajectory data.

Attack-free data identify the sparse observability index exactly whenever
X- has full row rank; poisoned data only certify a conservative value,
``floor((min_lambda zeta(lambda) - 1) / 2)``.

Kernel directions: the minimizations over ``z`` with ``(X+ - lam X-) z = 0``
are taken over ``z = pinv(X-) v`` with ``v`` in the lam-eigenspace of
``X+ pinv(X-)``. For ``T > n`` the literal kernel also contains
``ker(X-)``, on which every output vanishes; those directions carry no
information about the state and are excluded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .numlin import (
    DEFAULT_CONFIG,
    EigenStructure,
    NumericalConfig,
    count_nonzero_rows,
    eigen_structure,
    normalize_phase,
    numerical_rank,
    pseudoinverse,
    sparsest_vector_in_subspace,
)
from .sysmodel import DataMatrices, Scenario


class FastPathUnavailable(ValueError):
    """Some eigenvalue of the identified state matrix has geometric multiplicity above one."""


@dataclass(frozen=True)
class InformativityVerdict:
    informative: bool
    rho_tested: int
    failing_lambda: complex | None = None
    failing_subset: frozenset[int] | None = None
    rank_deficient_xminus: bool = False


@dataclass(frozen=True)
class ResilienceReport:
    """Data-driven index with per-eigenvalue sparsity scores and certificate.

    ``zeta_per_lambda`` maps one eigenvalue per conjugate pair of the
    identified state matrix to the minimum nonzero count of the outputs over
    its admissible kernel directions. ``witness`` is ``(lam, z)`` attaining
    the minimum. ``path`` is ``"poly"``, ``"general"`` or ``"none"`` (the
    rank gate failed before any path ran).
    """

    scenario: Scenario
    rho_max: int
    n: int
    q: int
    T: int
    zeta_per_lambda: dict[complex, int] = field(default_factory=dict)
    fast_path_used: bool = False
    path: str = "none"
    rank_deficient: bool = False
    assumed_l: int | None = None
    l_admissible: bool | None = None
    witness: tuple[complex, tuple[complex, ...]] | None = None

    @property
    def informative(self) -> bool:
        return self.rho_max >= 0

    @property
    def estimation_budget(self) -> int:
        """Attacks under which the state can still be reconstructed."""
        return self.rho_max // 2 if self.rho_max >= 0 else -1

    @property
    def detection_budget(self) -> int:
        return self.rho_max


@dataclass
class _Identified:
    """Quantities shared by every path: rank gate, pinv(X-), spectrum of X+ pinv(X-)."""

    data: DataMatrices
    full_rank: bool
    xm_pinv: np.ndarray | None = None
    eig: EigenStructure | None = None
    reps: list = field(default_factory=list)


def _identify(data: DataMatrices, cfg: NumericalConfig) -> _Identified:
    if numerical_rank(data.x_minus, cfg) < data.n:
        return _Identified(data, False)
    xm_pinv = pseudoinverse(data.x_minus)
    eig = eigen_structure(data.x_plus @ xm_pinv, cfg)
    return _Identified(data, True, xm_pinv, eig, eig.representatives(cfg.eig_cluster_tol))


def _require(data: DataMatrices, scenario: Scenario):
    if data.scenario_tag is not scenario:
        raise ValueError(f"expected {scenario.value} data, got {data.scenario_tag.value}")


def _flagged(data: DataMatrices, scenario: Scenario, assumed_l=None) -> ResilienceReport:
    return ResilienceReport(
        scenario=scenario,
        rho_max=-1,
        n=data.n,
        q=data.q,
        T=data.T,
        rank_deficient=True,
        assumed_l=assumed_l,
        l_admissible=None if assumed_l is None else False,
    )


def check_informative_attack_free(data: DataMatrices, rho: int, cfg: NumericalConfig = DEFAULT_CONFIG,
                                  _ident: _Identified | None = None) -> InformativityVerdict:
    """Rank test ``rank [X+ - lam X-; Y_G] = n`` for every kept sensor set G of size q - rho.

    The test is evaluated in the equivalent form ``rank [A_hat - lam I; C_hat_G] = n``
    with ``A_hat = X+ pinv(X-)`` and ``C_hat = Y pinv(X-)``. Only eigenvalues of ``X+ pinv(X-)`` need checking: elsewhere the top block
    alone has rank n. The first failing (lam, G) in lexicographic order of G
    is returned as the certificate.
    """
    _require(data, Scenario.ATTACK_FREE)
    if not 0 <= rho < data.q:
        raise ValueError(f"rho must lie in 0..{data.q - 1}, got {rho}")
    ident = _ident or _identify(data, cfg)
    if not ident.full_rank:
        return InformativityVerdict(False, rho, rank_deficient_xminus=True)
    n = data.n
    # [X+ - lam X-; Y_G] = [A_hat - lam I; C_hat_G] X- with X- of full row rank, so
    # the rank is read off the identified pair, free of the conditioning of X-.
    a_hat = data.x_plus @ ident.xm_pinv
    c_hat = data.outputs @ ident.xm_pinv
    scale = max(np.linalg.norm(a_hat, 2), np.linalg.norm(c_hat, 2))
    for kept in itertools.combinations(range(data.q), data.q - rho):
        c_sub = c_hat[list(kept)]
        for cluster in ident.reps:
            stacked = np.vstack([a_hat - cluster.lam * np.eye(n), c_sub])
            threshold = cfg.rank_rtol * max(scale, abs(cluster.lam)) * max(stacked.shape)
            if numerical_rank(stacked, cfg, threshold=threshold) < n:
                return InformativityVerdict(False, rho, cluster.lam, frozenset(kept))
    return InformativityVerdict(True, rho)


def _zeta_general(ident: _Identified, cfg: NumericalConfig):
    data = ident.data
    M = data.outputs @ ident.xm_pinv
    zetas, witness = {}, None
    for cluster in ident.reps:
        k, v = sparsest_vector_in_subspace(M, cluster.basis, cfg)
        zetas[cluster.lam] = k
        if witness is None or k < witness[0]:
            witness = (k, cluster.lam, ident.xm_pinv @ v)
    return zetas, witness


def _zeta_poly(ident: _Identified, cfg: NumericalConfig):
    if not ident.eig.all_simple:
        worst = max(ident.eig, key=lambda c: c.geo_mult)
        raise FastPathUnavailable(
            f"eigenvalue {worst.lam:.6g} has geometric multiplicity {worst.geo_mult}"
        )
    data = ident.data
    zetas, witness = {}, None
    for cluster in ident.reps:
        v = cluster.basis[:, 0]
        z = ident.xm_pinv @ v
        k = count_nonzero_rows(data.outputs @ z, cfg)
        zetas[cluster.lam] = k
        if witness is None or k < witness[0]:
            witness = (k, cluster.lam, z)
    return zetas, witness


def _report(data, scenario, rho_max, zetas, witness, fast, assumed_l=None) -> ResilienceReport:
    wit = None
    if witness is not None:
        _, lam, z = witness
        wit = (complex(lam), tuple(complex(x) for x in normalize_phase(z)))
    return ResilienceReport(
        scenario=scenario,
        rho_max=rho_max,
        n=data.n,
        q=data.q,
        T=data.T,
        zeta_per_lambda={complex(k): int(v) for k, v in zetas.items()},
        fast_path_used=fast,
        path="poly" if fast else "general",
        assumed_l=assumed_l,
        l_admissible=None if assumed_l is None else assumed_l <= rho_max,
        witness=wit,
    )


def rho_max_attack_free(data: DataMatrices, cfg: NumericalConfig = DEFAULT_CONFIG,
                        _ident: _Identified | None = None) -> ResilienceReport:
    """Largest rho passing the subset rank test, by ascending rho with early exit.

    The index comes from the subset-enumerated rank test; the zeta map is
    reported alongside from the exact sparsest-vector search.
    """
    _require(data, Scenario.ATTACK_FREE)
    ident = _ident or _identify(data, cfg)
    if not ident.full_rank:
        return _flagged(data, Scenario.ATTACK_FREE)
    rho = 0
    while rho < data.q and check_informative_attack_free(data, rho, cfg, ident).informative:
        rho += 1
    zetas, witness = _zeta_general(ident, cfg)
    return _report(data, Scenario.ATTACK_FREE, rho - 1, zetas, witness, fast=False)


def rho_max_attack_free_poly(data: DataMatrices, cfg: NumericalConfig = DEFAULT_CONFIG,
                             _ident: _Identified | None = None) -> ResilienceReport:
    """Polynomial-time index when every eigenvalue of ``X+ pinv(X-)`` is geometrically simple.

    Raises :class:`FastPathUnavailable` otherwise; callers fall back to
    :func:`rho_max_attack_free`.
    """
    _require(data, Scenario.ATTACK_FREE)
    ident = _ident or _identify(data, cfg)
    if not ident.full_rank:
        return _flagged(data, Scenario.ATTACK_FREE)
    zetas, witness = _zeta_poly(ident, cfg)
    return _report(data, Scenario.ATTACK_FREE, min(zetas.values()) - 1, zetas, witness, fast=True)


def _poisoned_index(zetas) -> int:
    return (min(zetas.values()) - 1) // 2


def rho_max_poisoned(data: DataMatrices, assumed_l: int | None = None, cfg: NumericalConfig = DEFAULT_CONFIG,
                     _ident: _Identified | None = None) -> ResilienceReport:
    """Conservative index from poisoned outputs, exact l0 minimization per eigenspace.

    The value only certifies resilience when the attack budget satisfies
    ``assumed_l <= rho_max``; that check is reported in ``l_admissible``.
    """
    _require(data, Scenario.POISONED)
    ident = _ident or _identify(data, cfg)
    if not ident.full_rank:
        return _flagged(data, Scenario.POISONED, assumed_l)
    zetas, witness = _zeta_general(ident, cfg)
    return _report(data, Scenario.POISONED, _poisoned_index(zetas), zetas, witness, False, assumed_l)


def rho_max_poisoned_poly(data: DataMatrices, assumed_l: int | None = None, cfg: NumericalConfig = DEFAULT_CONFIG,
                          _ident: _Identified | None = None) -> ResilienceReport:
    _require(data, Scenario.POISONED)
    ident = _ident or _identify(data, cfg)
    if not ident.full_rank:
        return _flagged(data, Scenario.POISONED, assumed_l)
    zetas, witness = _zeta_poly(ident, cfg)
    return _report(data, Scenario.POISONED, _poisoned_index(zetas), zetas, witness, True, assumed_l)


def dispatch_rho_max(data: DataMatrices, scenario=None, assumed_l: int | None = None,
                     cfg: NumericalConfig = DEFAULT_CONFIG) -> ResilienceReport:
    """Run the polynomial path when every eigenvalue is simple, the general path otherwise."""
    scenario = Scenario.parse(scenario) if scenario is not None else data.scenario_tag
    if data.scenario_tag is not scenario:
        data = data.with_outputs(data.outputs, scenario)
    ident = _identify(data, cfg)
    if not ident.full_rank:
        return _flagged(data, scenario, assumed_l if scenario is Scenario.POISONED else None)
    fast = ident.eig.all_simple
    if scenario is Scenario.ATTACK_FREE:
        run = rho_max_attack_free_poly if fast else rho_max_attack_free
        return run(data, cfg, _ident=ident)
    run = rho_max_poisoned_poly if fast else rho_max_poisoned
    return run(data, assumed_l, cfg, _ident=ident)
