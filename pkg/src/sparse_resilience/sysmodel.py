"""Autonomous LTI systems, trajectory simulation and sparse sensor-attack injection.

Sensor indices are 0-based throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Scenario(str, Enum):
    ATTACK_FREE = "attack_free"
    POISONED = "poisoned"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        return cls(str(value).replace("-", "_"))


@dataclass(frozen=True)
class LtiSystem:
    """The pair (A, C) of ``x(k+1) = A x(k)``, ``y(k) = C x(k)``."""

    A: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if C.shape[1] != A.shape[0]:
            raise ValueError(f"C must have {A.shape[0]} columns, got {C.shape}")
        if C.shape[0] < 1:
            raise ValueError("C needs at least one sensor row")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # n x (T+1)
    nominal_outputs: np.ndarray  # q x T

    @property
    def horizon(self) -> int:
        return self.nominal_outputs.shape[1]


class Strategy(str, Enum):
    ZEROING = "zeroing"
    CONSTANT_BIAS = "constant_bias"
    RANDOM_BOUNDED = "random_bounded"


@dataclass(frozen=True)
class AttackSpec:
    """Fixed attack support with budget ``l`` and a per-step strategy.

    ``bias`` holds one value per attacked sensor (in ``sorted(support)``
    order) for the constant-bias strategy; ``bound`` and ``seed`` drive the
    random-bounded one.
    """

    support: frozenset[int]
    budget: int
    strategy: Strategy = Strategy.ZEROING
    bias: tuple[float, ...] | None = None
    bound: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "support", frozenset(int(i) for i in self.support))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.budget < 0:
            raise ValueError("attack budget must be nonnegative")
        if len(self.support) > self.budget:
            raise ValueError(
                f"support of size {len(self.support)} exceeds the budget l={self.budget}"
            )
        if self.strategy is Strategy.CONSTANT_BIAS:
            if self.bias is None or len(self.bias) != len(self.support):
                raise ValueError("constant_bias needs one bias value per attacked sensor")


@dataclass(frozen=True)
class DataMatrices:
    """Shifted state data and an output block, tagged with the scenario they came from.

    ``build_data_matrices`` produces single-trajectory data; direct
    construction also accepts any pair with ``x_plus = A x_minus``.
    """

    x_minus: np.ndarray
    x_plus: np.ndarray
    outputs: np.ndarray
    scenario_tag: Scenario = Scenario.ATTACK_FREE

    def __post_init__(self):
        xm = np.atleast_2d(np.asarray(self.x_minus, dtype=float))
        xp = np.atleast_2d(np.asarray(self.x_plus, dtype=float))
        y = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if xm.shape != xp.shape:
            raise ValueError(f"x_minus {xm.shape} and x_plus {xp.shape} differ in shape")
        if y.shape[1] != xm.shape[1]:
            raise ValueError(f"outputs have {y.shape[1]} columns, state data have {xm.shape[1]}")
        object.__setattr__(self, "x_minus", xm)
        object.__setattr__(self, "x_plus", xp)
        object.__setattr__(self, "outputs", y)
        object.__setattr__(self, "scenario_tag", Scenario.parse(self.scenario_tag))

    @property
    def n(self) -> int:
        return self.x_minus.shape[0]

    @property
    def q(self) -> int:
        return self.outputs.shape[0]

    @property
    def T(self) -> int:
        return self.x_minus.shape[1]

    def with_outputs(self, outputs, tag=None) -> "DataMatrices":
        return DataMatrices(self.x_minus, self.x_plus, outputs, tag or self.scenario_tag)


def simulate(sys: LtiSystem, x0, T: int) -> Trajectory:
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (sys.n,):
        raise ValueError(f"x0 must have length {sys.n}")
    if T < sys.n:
        raise ValueError(f"horizon T={T} must be at least n={sys.n}")
    X = np.empty((sys.n, T + 1))
    X[:, 0] = x0
    for k in range(T):
        X[:, k + 1] = sys.A @ X[:, k]
    return Trajectory(X, sys.C @ X[:, :T])


def inject_attack(traj: Trajectory, sys: LtiSystem, spec: AttackSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(poisoned_outputs, E)`` with E nonzero only on ``spec.support`` rows."""
    q, T = traj.nominal_outputs.shape
    support = sorted(spec.support)
    if any(not 0 <= i < q for i in support):
        raise ValueError(f"attack support {support} is outside sensors 0..{q - 1}")
    E = np.zeros((q, T))
    if support:
        if spec.strategy is Strategy.ZEROING:
            E[support] = -traj.nominal_outputs[support]
        elif spec.strategy is Strategy.CONSTANT_BIAS:
            E[support] = np.asarray(spec.bias, dtype=float)[:, np.newaxis]
        else:
            rng = np.random.default_rng(spec.seed)
            E[support] = rng.uniform(-spec.bound, spec.bound, size=(len(support), T))
    poisoned = traj.nominal_outputs + E
    if spec.strategy is Strategy.ZEROING:
        poisoned[support] = 0.0
    return poisoned, E


def build_data_matrices(states, outputs, tag=Scenario.ATTACK_FREE) -> DataMatrices:
    states = np.atleast_2d(np.asarray(states, dtype=float))
    outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
    if states.shape[1] != outputs.shape[1] + 1:
        raise ValueError(
            f"state matrix needs exactly one more column than the outputs "
            f"({states.shape[1]} vs {outputs.shape[1]})"
        )
    return DataMatrices(states[:, :-1], states[:, 1:], outputs, tag)


PENDULUM_A = ((0.9878, 0.0498), (-0.4880, 0.9878))
PENDULUM_C = ((1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
PENDULUM_X0 = (0.1, 0.0)
PENDULUM_ATTACKED_SENSOR = 1


def pendulum_system() -> LtiSystem:
    """Linearized pendulum (m = L = 1, g = 9.8) sampled at 0.05 s, three sensors."""
    return LtiSystem(np.array(PENDULUM_A), np.array(PENDULUM_C))


def random_system(n: int, q: int, seed=None, spectral_radius: float | None = None) -> LtiSystem:
    """Draw A (n x n) and C (q x n) with i.i.d. standard Gaussian entries.

    With ``spectral_radius`` set, A is rescaled to that spectral radius
    afterwards. Rescaling leaves eigenvectors, multiplicities and hence the
    sparse observability index unchanged, but keeps long trajectories from
    being dominated by the fastest mode.
    """
    if n < 1 or q < 1:
        raise ValueError("n and q must be positive")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    C = rng.standard_normal((q, n))
    if spectral_radius is not None:
        r = float(np.max(np.abs(np.linalg.eigvals(A))))
        if r > 0.0:
            A = A * (spectral_radius / r)
    return LtiSystem(A, C)
