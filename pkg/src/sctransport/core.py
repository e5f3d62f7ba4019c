"""Self-consistent standard map and the plain standard map.

The self-consistent map couples N standard-map oscillators ``(x_k, y_k)``
through a mean field with amplitude ``kappa`` and phase ``theta``::

    eta      = sum_k gamma_k sin(x_k - theta)
    kappa'   = sqrt(kappa**2 + eta**2) + eta
    y_k'     = y_k - kappa' sin(x_k - theta)
    x_k'     = x_k + y_k'
    theta'   = theta - Omega + (1 / kappa') d(eta)/d(theta)

Sums over oscillators use :func:`math.fsum`, which is correctly rounded and
therefore independent of summation order.  This makes ``step_sc`` exactly
equivariant under oscillator permutations and exactly invariant under the
replication ``gamma -> gamma / 2`` with duplicated oscillators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Below this kappa' the phase update divides by (numerically) zero.
KAPPA_FLOOR = 1e-300


class DimensionError(ValueError):
    """Oscillator arrays and coupling arrays disagree in length."""


class PhaseSingularityError(ArithmeticError):
    """The updated mean-field amplitude vanished, so the phase update is undefined."""


def wrap_angle(a):
    """Map angles into ``[0, 2pi)``.

    A single conditional shift handles the usual case of a bounded increment;
    anything still outside the interval (large momenta) falls back to a floor
    reduction.
    """
    if np.ndim(a) == 0:
        a = float(a)
        if a >= TWO_PI:
            a -= TWO_PI
        elif a < 0.0:
            a += TWO_PI
        if 0.0 <= a < TWO_PI:
            return a
        a = a - TWO_PI * math.floor(a / TWO_PI)
        return 0.0 if a >= TWO_PI else a
    a = np.array(a, dtype=float, copy=True)
    a[a >= TWO_PI] -= TWO_PI
    a[a < 0.0] += TWO_PI
    bad = (a < 0.0) | (a >= TWO_PI)
    if bad.any():
        b = a[bad]
        b = b - TWO_PI * np.floor(b / TWO_PI)
        b[b >= TWO_PI] = 0.0
        a[bad] = b
    return a


@dataclass
class SCState:
    """Full state of the self-consistent map."""

    x: np.ndarray
    y: np.ndarray
    kappa: float
    theta: float
    n: int = 0

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        self.kappa = float(self.kappa)
        self.theta = float(self.theta)
        if self.x.ndim != 1 or self.x.shape != self.y.shape:
            raise DimensionError(f"x and y must be 1-D of equal length, got {self.x.shape} and {self.y.shape}")
        if self.x.size < 1:
            raise DimensionError("at least one oscillator is required")

    @property
    def N(self) -> int:
        return self.x.size

    def copy(self) -> "SCState":
        return replace(self, x=self.x.copy(), y=self.y.copy())

    def as_vector(self) -> np.ndarray:
        """Flatten as ``(x_1, y_1, ..., x_N, y_N, kappa, theta)``."""
        z = np.empty(2 * self.N + 2)
        z[0:-2:2] = self.x
        z[1:-2:2] = self.y
        z[-2] = self.kappa
        z[-1] = self.theta
        return z

    @classmethod
    def from_vector(cls, z, n: int = 0) -> "SCState":
        z = np.asarray(z, dtype=float)
        if z.size < 4 or z.size % 2:
            raise DimensionError(f"state vector length must be 2N+2 with N>=1, got {z.size}")
        return cls(x=z[0:-2:2].copy(), y=z[1:-2:2].copy(), kappa=z[-2], theta=z[-1], n=n)

    def wrapped_view(self) -> tuple[np.ndarray, np.ndarray]:
        """Positions and momenta both reduced to ``[0, 2pi)`` for phase-space plots."""
        return wrap_angle(self.x), wrap_angle(self.y)


@dataclass
class SCParams:
    """Coupling strengths ``gamma_k`` and the drift parameter ``Omega``."""

    gamma: np.ndarray
    omega: float = 0.0

    def __post_init__(self):
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        self.omega = float(self.omega)

    @classmethod
    def uniform(cls, gamma: float, n: int, omega: float = 0.0) -> "SCParams":
        return cls(np.full(n, float(gamma)), omega)


@dataclass(frozen=True)
class StdPoint:
    x: float
    y: float


@dataclass(frozen=True)
class Grid2D:
    """Regular lattice of cell centres on ``x_range x y_range``."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be >= 1")
        if not (self.x_range[0] < self.x_range[1] and self.y_range[0] < self.y_range[1]):
            raise ValueError("grid ranges must satisfy lo < hi")

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Seed coordinates, x-major ordering (x index varies slowest)."""
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        xs = x0 + (np.arange(self.nx) + 0.5) * ((x1 - x0) / self.nx)
        ys = y0 + (np.arange(self.ny) + 0.5) * ((y1 - y0) / self.ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return X.ravel(), Y.ravel()


def seed_grid(g: Grid2D) -> list[StdPoint]:
    xs, ys = g.arrays()
    return [StdPoint(float(a), float(b)) for a, b in zip(xs, ys)]


def _check(state: SCState, params: SCParams) -> None:
    if params.gamma.shape != state.x.shape:
        raise DimensionError(f"gamma has length {params.gamma.size}, state has N={state.N}")


def eta(state: SCState, params: SCParams) -> float:
    """Mean-field drive ``sum_k gamma_k sin(x_k - theta)``."""
    _check(state, params)
    return math.fsum(params.gamma * np.sin(state.x - state.theta))


def eta_dtheta(state: SCState, params: SCParams) -> float:
    """Analytic theta-derivative of :func:`eta`: ``-sum_k gamma_k cos(x_k - theta)``."""
    _check(state, params)
    return -math.fsum(params.gamma * np.cos(state.x - state.theta))


def kappa_update(kappa: float, e: float) -> float:
    """``sqrt(kappa**2 + e**2) + e`` without cancellation when ``e < 0``."""
    r = math.hypot(kappa, e)
    if e >= 0.0:
        return r + e
    return kappa * (kappa / (r - e))


def _advance(state: SCState, params: SCParams) -> tuple[SCState, float]:
    """One iteration; also returns the unwrapped phase increment."""
    _check(state, params)
    phase = state.x - state.theta
    s = np.sin(phase)
    e = math.fsum(params.gamma * s)
    de = -math.fsum(params.gamma * np.cos(phase))
    k1 = kappa_update(state.kappa, e)
    if k1 < KAPPA_FLOOR:
        raise PhaseSingularityError(
            f"kappa vanished at step n={state.n} (kappa={state.kappa!r}, eta={e!r})"
        )
    y1 = state.y - k1 * s
    x1 = wrap_angle(state.x + y1)
    dtheta = -params.omega + de / k1
    theta1 = wrap_angle(state.theta + dtheta)
    return SCState(x1, y1, k1, theta1, state.n + 1), dtheta


def step_sc(state: SCState, params: SCParams) -> SCState:
    return _advance(state, params)[0]


def step_std(p: StdPoint, eps: float, phi: float = 0.0) -> StdPoint:
    y1 = p.y - eps * math.sin(p.x - phi)
    return StdPoint(wrap_angle(p.x + y1), y1)


def step_std_unwrapped(x, y, eps: float, phi: float = 0.0):
    """Standard map on the lift (no angle reduction); accepts arrays."""
    y1 = y - eps * np.sin(x - phi)
    return x + y1, y1


def std_jacobian(x: float, eps: float, phi: float = 0.0) -> np.ndarray:
    c = eps * math.cos(x - phi)
    return np.array([[1.0 - c, 1.0], [-c, 1.0]])


@dataclass
class MeanFieldTrace:
    """Time series of the mean field; ``dtheta[i] = theta^{n_i} - theta^{n_i - 1}`` (unwrapped)."""

    n: np.ndarray
    kappa: np.ndarray
    dtheta: np.ndarray
    snapshots: dict[int, SCState] = field(default_factory=dict)
    final: SCState | None = None


def run_trajectory(
    state0: SCState,
    params: SCParams,
    n_steps: int,
    snapshot_stride: int = 0,
    snapshot_at: Sequence[int] = (),
) -> MeanFieldTrace:
    """Iterate ``step_sc`` and record the mean field after every step.

    Snapshots are kept every ``snapshot_stride`` steps (0 disables) and at
    every iteration index listed in ``snapshot_at``.  Row 0 of the trace is
    the initial state, whose phase increment is undefined (NaN).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    wanted = {int(k) for k in snapshot_at}
    kap = np.empty(n_steps + 1)
    dth = np.empty(n_steps + 1)
    kap[0], dth[0] = state0.kappa, np.nan
    snaps: dict[int, SCState] = {}
    if 0 in wanted:
        snaps[state0.n] = state0.copy()
    s = state0
    for i in range(1, n_steps + 1):
        s, d = _advance(s, params)
        kap[i], dth[i] = s.kappa, d
        if i in wanted or (snapshot_stride and i % snapshot_stride == 0):
            snaps[s.n] = s
    return MeanFieldTrace(np.arange(state0.n, state0.n + n_steps + 1), kap, dth, snaps, s)


def uniform_state(grid: Grid2D, kappa0: float, theta0: float = 0.0) -> SCState:
    xs, ys = grid.arrays()
    return SCState(xs, ys, kappa0, theta0)


def conserved_momentum(state: SCState, params: SCParams) -> float:
    """``sum_k gamma_k y_k + kappa**2 / 2``, invariant under ``step_sc``."""
    return math.fsum(params.gamma * state.y) + 0.5 * state.kappa**2
