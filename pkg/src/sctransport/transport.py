"""Alternating-kick standard map and global-transport experiments.

The map applies ``y' = y - k_n sin x, x' = x + y'`` with ``k_n = kappa2`` on
even ``n`` and ``kappa1`` on odd ``n``; ``n`` starts at 0, so the first step
uses ``kappa2``.

Escape tests run in a numba kernel that advances every seed through blocks of
iterations; seeds that have escaped are frozen.  Results depend only on the
seed lattice, never on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .core import TWO_PI, Grid2D, StdPoint, wrap_angle

KAPPA_C = 0.971635406

_BLOCK = 4096


@dataclass(frozen=True)
class AltParams:
    kappa1: float
    kappa2: float
    allow_negative: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.kappa1) and math.isfinite(self.kappa2)):
            raise ValueError("kappa values must be finite")
        if not self.allow_negative and (self.kappa1 < 0 or self.kappa2 < 0):
            raise ValueError("negative kappa requires allow_negative=True")

    def kappa_at(self, n: int) -> float:
        return self.kappa1 if n % 2 else self.kappa2

    @property
    def delta(self) -> float:
        return self.kappa2 - self.kappa1

    @property
    def mean(self) -> float:
        return 0.5 * (self.kappa1 + self.kappa2)

    @classmethod
    def from_mean_delta(cls, kbar: float, dk: float) -> "AltParams":
        return cls(kbar - 0.5 * dk, kbar + 0.5 * dk)

    def swapped(self) -> "AltParams":
        return AltParams(self.kappa2, self.kappa1, self.allow_negative)


@dataclass(frozen=True)
class EscapeCriterion:
    """Escape thresholds ``y_m + 2 pi ell`` (upper) and ``-2 pi ell`` (lower)."""

    y_m: float
    ell: int = 1
    max_iters: int = 100_000

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")

    @property
    def y_upper(self) -> float:
        return self.y_m + TWO_PI * self.ell

    @property
    def y_lower(self) -> float:
        return -TWO_PI * self.ell


def step_alt(p: StdPoint, n: int, ap: AltParams) -> StdPoint:
    k = ap.kappa_at(n)
    y1 = p.y - k * math.sin(p.x)
    return StdPoint(wrap_angle(p.x + y1), y1)


def double_step_reduced(p: StdPoint, kappa1: float) -> StdPoint:
    """Two steps with kicks ``(kappa1, 0)``: ``y1 = y - kappa1 sin x``, ``x2 = x + 2 y1``.

    With ``Y = 2 y`` this is one standard-map step with ``eps = 2 kappa1``.
    """
    y1 = p.y - kappa1 * math.sin(p.x)
    return StdPoint(wrap_angle(p.x + 2.0 * y1), y1)


def alt_orbit(p: StdPoint, ap: AltParams, n_steps: int, n0: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Orbit of ``step_alt`` from step index ``n0``; y unwrapped."""
    xs = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    xs[0], ys[0] = p.x, p.y
    for i in range(n_steps):
        p = step_alt(p, n0 + i, ap)
        xs[i + 1], ys[i + 1] = p.x, p.y
    return xs, ys


# --------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _wrap(x):
    if x >= TWO_PI:
        x -= TWO_PI
    elif x < 0.0:
        x += TWO_PI
    if x < 0.0 or x >= TWO_PI:
        x = x - TWO_PI * math.floor(x / TWO_PI)
        if x >= TWO_PI:
            x = 0.0
    return x


@numba.njit(cache=True)
def _escape_kernel(x0, y0, k_even, k_odd, n0, max_iters, y_hi, y_lo, two_sided, stop_on_first, block):
    """First-escape step per seed (-1 if none).  Escape: y >= y_hi, or (two_sided) y <= y_lo."""
    ns = x0.size
    x = x0.copy()
    y = y0.copy()
    hit = np.full(ns, -1, np.int64)
    done = 0
    while done < max_iters:
        stop = min(done + block, max_iters)
        any_hit = False
        for s in range(ns):
            if hit[s] >= 0:
                continue
            xs = x[s]
            ys = y[s]
            for i in range(done, stop):
                if (n0 + i) % 2 == 0:
                    ys -= k_even * math.sin(xs)
                else:
                    ys -= k_odd * math.sin(xs)
                xs = _wrap(xs + ys)
                if ys >= y_hi or (two_sided and ys <= y_lo):
                    hit[s] = i + 1
                    any_hit = True
                    break
            x[s] = xs
            y[s] = ys
        done = stop
        if stop_on_first and any_hit:
            break
    return hit


def _seeds(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    return grid.arrays()


def escape_steps(
    ap: AltParams,
    grid: Grid2D,
    crit: EscapeCriterion,
    two_sided: bool = False,
    stop_on_first: bool = False,
    n0: int = 0,
) -> np.ndarray:
    """Per-seed first-escape iteration (``-1`` = did not escape)."""
    xs, ys = _seeds(grid)
    return _escape_kernel(
        xs,
        ys,
        float(ap.kappa2),
        float(ap.kappa1),
        int(n0),
        int(crit.max_iters),
        float(crit.y_upper),
        float(crit.y_lower),
        bool(two_sided),
        bool(stop_on_first),
        _BLOCK,
    )


def _check_band(grid: Grid2D, crit: EscapeCriterion) -> None:
    (x0, x1), (y0, y1) = grid.x_range, grid.y_range
    if x0 < 0 or x1 > TWO_PI + 1e-12 or y0 < 0 or y1 > crit.y_m + 1e-12:
        raise ValueError("seed grid must lie within [0, 2pi] x [0, y_m]")


def escape_fraction(ap: AltParams, grid: Grid2D, crit: EscapeCriterion, n0: int = 0) -> float:
    """Percentage of seeds whose unwrapped ``y`` reaches ``y_m + 2 pi ell`` (upward only)."""
    _check_band(grid, crit)
    hit = escape_steps(ap, grid, crit, two_sided=False, n0=n0)
    return 100.0 * np.count_nonzero(hit >= 0) / hit.size


def has_global_transport(ap: AltParams, grid: Grid2D, crit: EscapeCriterion, n0: int = 0) -> bool:
    """True iff some seed reaches ``y >= y_m + 2 pi ell`` or ``y <= -2 pi ell``."""
    _check_band(grid, crit)
    hit = escape_steps(ap, grid, crit, two_sided=True, stop_on_first=True, n0=n0)
    return bool((hit >= 0).any())


# --------------------------------------------------------------------------
# horn boundary


@dataclass
class HornCell:
    kappa1: float
    kappa2_min: float  # upper end of the final bracket (transport observed); NaN if censored
    lo: float  # largest kappa2 seen without transport
    hi: float
    evaluations: int
    censored: str | None = None
    monotone: bool = True


@dataclass
class SweepGrid:
    """Named axes plus one payload entry per cell (x-major over the axes)."""

    axes: dict[str, np.ndarray]
    payload: list = field(default_factory=list)

    def __post_init__(self):
        self.axes = {k: np.asarray(v, dtype=float) for k, v in self.axes.items()}

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.axes.values())

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.axes else 0

    def cells(self) -> list[dict[str, float]]:
        names = list(self.axes)
        mesh = np.meshgrid(*self.axes.values(), indexing="ij")
        flat = [m.ravel() for m in mesh]
        return [{n: float(f[i]) for n, f in zip(names, flat)} for i in range(self.size)]

    def validate(self) -> None:
        if len(self.payload) != self.size:
            raise ValueError(f"payload has {len(self.payload)} entries, grid has {self.size} cells")


def _bisect_transport(predicate, lo: float, hi: float, tol: float, prescan: int) -> tuple[float, float, int, bool, str | None]:
    n_eval = 0
    monotone = True
    if prescan >= 2:
        pts = np.linspace(lo, hi, prescan)
        flags = []
        for k in pts:
            flags.append(predicate(float(k)))
            n_eval += 1
        flags = np.array(flags)
        if not flags[-1]:
            return lo, hi, n_eval, monotone, "no transport at upper bracket end"
        if flags[0]:
            return lo, hi, n_eval, monotone, "transport already at lower bracket end"
        first = int(np.argmax(flags))
        monotone = bool(flags[first:].all())
        lo, hi = float(pts[first - 1]), float(pts[first])
    else:
        if not predicate(hi):
            return lo, hi, 1, monotone, "no transport at upper bracket end"
        if predicate(lo):
            return lo, hi, 2, monotone, "transport already at lower bracket end"
        n_eval = 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        n_eval += 1
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi, n_eval, monotone, None


def horn_boundary(
    kappa1_grid: Sequence[float],
    crit: EscapeCriterion,
    grid: Grid2D,
    tol: float = 1e-3,
    kappa2_max: float = 1.2,
    prescan: int = 5,
) -> list[HornCell]:
    """Minimal ``kappa2`` with global transport at each fixed ``kappa1``.

    Bisection in ``kappa2`` over ``[kappa1, kappa2_max]`` after a coarse
    pre-scan that locates the first transport cell and records whether the
    scanned flags were monotone.  Bracket failures give censored cells.
    """
    out = []
    for k1 in kappa1_grid:
        k1 = float(k1)
        if not 0.0 <= k1 <= KAPPA_C:
            raise ValueError(f"kappa1={k1} outside [0, kappa_c]")

        def pred(k2, k1=k1):
            return has_global_transport(AltParams(k1, k2), grid, crit)

        lo, hi, n, mono, why = _bisect_transport(pred, k1, kappa2_max, tol, prescan)
        out.append(HornCell(k1, float("nan") if why else hi, lo, hi, n, why, mono))
    return out


def diagonal_onset(
    crit: EscapeCriterion,
    grid: Grid2D,
    tol: float = 1e-3,
    bracket: tuple[float, float] = (0.9, 1.05),
    prescan: int = 4,
) -> HornCell:
    """Transport onset along ``kappa1 = kappa2`` (bisection on the common value)."""

    def pred(k):
        return has_global_transport(AltParams(k, k), grid, crit)

    lo, hi, n, mono, why = _bisect_transport(pred, bracket[0], bracket[1], tol, prescan)
    return HornCell(float("nan"), float("nan") if why else hi, lo, hi, n, why, mono)


def axis_intercept(
    crit: EscapeCriterion,
    grid: Grid2D,
    tol: float = 1e-3,
    bracket: tuple[float, float] = (0.4, 0.6),
    prescan: int = 4,
) -> HornCell:
    """Horn boundary at ``kappa1 = 0`` with a bracket focused near ``kappa_c / 2``."""

    def pred(k2):
        return has_global_transport(AltParams(0.0, k2), grid, crit)

    lo, hi, n, mono, why = _bisect_transport(pred, bracket[0], bracket[1], tol, prescan)
    return HornCell(0.0, float("nan") if why else hi, lo, hi, n, why, mono)


def fig5_grid(nx: int = 100, ny: int = 100) -> tuple[Grid2D, EscapeCriterion]:
    ym = math.pi / 5
    return Grid2D((0.0, TWO_PI), (0.0, ym), nx, ny), EscapeCriterion(ym, 1, 100_000)


def fig7_grid(nx: int = 100, ny: int = 100, ell: int = 1, max_iters: int = 500_000) -> tuple[Grid2D, EscapeCriterion]:
    ym = 3 * math.pi / 5
    return Grid2D((0.0, TWO_PI), (0.0, ym), nx, ny), EscapeCriterion(ym, ell, max_iters)
