"""Rotational invariant circles of the standard map by Fourier quasi-Newton.

A circle of rotation ``omega`` is written in Lagrangian form
``x(t) = t + u(t)``, ``y(t) = omega + u(t) - u(t - omega)`` where ``u`` is
2pi-periodic and solves::

    E(t) = u(t + omega) - 2 u(t) + u(t - omega) + kappa sin(t + u(t)) + lam = 0

``lam`` is an auxiliary constant that vanishes at an invariant circle.  Each
quasi-Newton step uses the substitution ``Delta = l w`` with ``l = 1 + u'``,
which turns the linearised equation into two constant-coefficient difference
equations solved diagonally in Fourier space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TWO_PI

GOLDEN_OMEGA = TWO_PI * (math.sqrt(5.0) - 1.0) / 2.0


class BreakdownSuspected(RuntimeError):
    def __init__(self, msg: str, defect: float, kappa: float):
        super().__init__(msg)
        self.defect = defect
        self.kappa = kappa


class InvalidCircle(ValueError):
    pass


@dataclass
class CircleParam:
    """Circle of the standard map; ``coeffs[j]`` (j = 0..J) are the rfft-normalised
    Fourier coefficients of ``u``, i.e. ``u(t) = sum_{|j|<=J} c_j e^{ijt}`` with ``c_{-j} = conj(c_j)``."""

    omega: float
    coeffs: np.ndarray
    kappa: float
    lam: float = 0.0
    defect: float = float("nan")
    iterations: int = 0

    @property
    def J(self) -> int:
        return self.coeffs.size - 1

    def full_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """Harmonics ``-J..J`` and their coefficients."""
        j = np.arange(-self.J, self.J + 1)
        c = np.concatenate([np.conj(self.coeffs[:0:-1]), self.coeffs])
        return j, c

    def u(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        j = np.arange(1, self.J + 1)
        ph = np.exp(1j * np.multiply.outer(t, j))
        return self.coeffs[0].real + 2.0 * np.real(ph @ self.coeffs[1:])

    def u_complex(self, t) -> np.ndarray:
        j, c = self.full_coeffs()
        return np.exp(1j * np.multiply.outer(np.asarray(t, dtype=float), j)) @ c

    def u_lattice(self, M: int) -> np.ndarray:
        """``u`` on ``t_i = 2 pi i / M``."""
        return self._lattice(M)

    def du_lattice(self, M: int) -> np.ndarray:
        return self._lattice(M, deriv=True)

    def embed(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        ut = self.u(t)
        return t + ut, self.omega + ut - self.u(t - self.omega)

    def _lattice(self, M: int, shift: float = 0.0, deriv: bool = False) -> np.ndarray:
        # FFT evaluation on t_i = 2 pi i / M (+ shift), oversampled when M cannot resolve J
        L = M
        while L <= 2 * self.J:
            L *= 2
        spec = np.zeros(L // 2 + 1, dtype=complex)
        j = np.arange(self.J + 1)
        c = self.coeffs * np.exp(1j * j * shift)
        spec[: self.J + 1] = 1j * j * c if deriv else c
        return np.fft.irfft(spec * L, n=L)[:: L // M]

    def invariance_defect(self, M: int = 2048) -> float:
        """Sup-norm of ``K(t + omega) - F(K(t))`` on an ``M``-point lattice."""
        t = TWO_PI * np.arange(M) / M
        u0 = self._lattice(M)
        um = self._lattice(M, -self.omega)
        up = self._lattice(M, self.omega)
        x = t + u0
        y = self.omega + u0 - um
        y1 = y - self.kappa * np.sin(x)
        x1 = x + y1
        xa = t + self.omega + up
        ya = self.omega + up - u0
        return float(max(np.max(np.abs(xa - x1)), np.max(np.abs(ya - y1))))

    def graph(self, xq, tol: float = 1e-14) -> np.ndarray:
        """``f(x)`` with the circle as the graph ``y = f(x)``; requires ``1 + u' > 0``."""
        xq = np.mod(np.asarray(xq, dtype=float), TWO_PI)
        t = xq - self.u(xq)  # fixed-point start
        for _ in range(50):
            xt = t + self.u(t)
            j = np.arange(1, self.J + 1)
            du = 2.0 * np.real(np.exp(1j * np.multiply.outer(t, j)) @ (1j * j * self.coeffs[1:]))
            dt = (xt - xq) / (1.0 + du)
            t = t - dt
            if np.max(np.abs(dt)) < tol:
                break
        return self.embed(t)[1]

    def min_twist_derivative(self, M: int = 8192) -> float:
        M = max(M, 4 * (self.J + 1))
        return float(1.0 + np.min(self.du_lattice(M)))


def _solve_fixed(kappa: float, omega: float, u0: np.ndarray, lam0: float, tol: float, maxit: int):
    """Quasi-Newton at fixed ``kappa`` on the lattice implied by ``u0``; returns ``(u, lam, err, it)``."""
    M = u0.size
    t = TWO_PI * np.arange(M) / M
    j = np.fft.rfftfreq(M, 1.0 / M)
    e_p = np.exp(1j * j * omega)
    u = u0.copy()
    lam = lam0
    err = np.inf
    kmax = M // 2
    cut = _cutoff(M)

    def shift(f, s):
        F = np.fft.rfft(f)
        F = F * np.exp(1j * j * s)
        F[kmax] = 0.0
        return np.fft.irfft(F, n=M)

    for it in range(1, maxit + 1):
        U = np.fft.rfft(u)
        U[kmax] = 0.0
        up = np.fft.irfft(U * e_p, n=M)
        um = np.fft.irfft(U * np.conj(e_p), n=M)
        E = up - 2.0 * u + um + kappa * np.sin(t + u) + lam
        err = float(np.max(np.abs(E)))
        if err < tol:
            return u, lam, err, it - 1
        if not np.isfinite(err) or err > 1.0:
            break
        l = 1.0 + np.fft.irfft(1j * j * U, n=M)
        if np.min(l) <= 0.0:
            break
        lp = shift(l, omega)
        dlam = -np.mean(l * E) / np.mean(l)
        R = np.fft.rfft(-l * (E + dlam))
        R[0] = 0.0
        Bh = np.zeros_like(R)
        Bh[1:] = R[1:] / (1.0 - np.conj(e_p[1:]))
        B = np.fft.irfft(Bh, n=M)
        inv = 1.0 / (l * lp)
        c = -np.mean(B * inv) / np.mean(inv)
        W = (B + c) * inv
        Wh = np.fft.rfft(W)
        Wh[0] = 0.0
        wh = np.zeros_like(Wh)
        wh[1:] = Wh[1:] / (e_p[1:] - 1.0)
        w = np.fft.irfft(wh, n=M)
        u = u + l * w
        lam = lam + dlam
        U = np.fft.rfft(u)
        U[cut:] = 0.0  # dealias: products feed back into the top modes
        u = np.fft.irfft(U, n=M)
        u = u - np.mean(u) * (1.0 + np.fft.irfft(1j * j * np.fft.rfft(u), n=M))
    return u, lam, err, maxit


def _cutoff(M: int) -> int:
    """First discarded harmonic on an ``M``-point lattice (2/3 dealiasing rule)."""
    return (M // 2) * 2 // 3


def _tail(u: np.ndarray) -> float:
    U = np.abs(np.fft.rfft(u)) / u.size
    cut = _cutoff(u.size)
    scale = max(np.max(U[1:cut]), 1e-300)
    return float(np.max(U[cut - max(2, cut // 8) : cut]) / scale)


def _to_param(u: np.ndarray, kappa: float, omega: float, lam: float, it: int) -> CircleParam:
    M = u.size
    c = np.fft.rfft(u) / M
    J = _cutoff(M) - 1
    return CircleParam(omega, c[: J + 1].copy(), kappa, lam, iterations=it)


def _resample(u: np.ndarray, M: int) -> np.ndarray:
    U = np.fft.rfft(u) / u.size
    spec = np.zeros(M // 2 + 1, dtype=complex)
    n = min(U.size - 1, spec.size - 1)
    spec[:n] = U[:n]
    return np.fft.irfft(spec * M, n=M)


def solve_circle(
    kappa: float,
    omega: float = GOLDEN_OMEGA,
    J: int = 256,
    tol: float = 1e-11,
    seed: CircleParam | None = None,
    step: float = 0.02,
    min_step: float = 1e-4,
    J_max: int = 8192,
    tail_tol: float = 1e-12,
    maxit: int = 30,
) -> CircleParam:
    """Invariant circle of rotation ``omega`` for ``y' = y - kappa sin x``.

    Continues in ``kappa`` from the seed (or from the integrable circle at
    ``kappa = 0``), halving the step on failure down to ``min_step``.  The
    Fourier lattice is doubled while the relative coefficient tail exceeds
    ``tail_tol``.  The result is certified on a 2048-point lattice and on one
    four times denser than the solve lattice, and checked to be a graph.
    """
    if J < 4:
        raise ValueError("J must be >= 4")
    M = 1 << (3 * J + 2).bit_length()
    if seed is None:
        k_cur, u, lam = 0.0, np.zeros(M), 0.0
    else:
        M = max(M, 2 * (seed.J + 1))
        M = 1 << (M - 1).bit_length()
        k_cur, u, lam = seed.kappa, seed.u_lattice(M), seed.lam
    h = step
    last_err = 0.0
    its = 0
    while True:
        k_next = kappa if abs(kappa - k_cur) <= h else k_cur + math.copysign(h, kappa - k_cur)
        ok = False
        Mt = M
        ut = u if u.size == Mt else _resample(u, Mt)
        grown = False
        while True:
            un, ln, err, its = _solve_fixed(k_next, omega, ut, lam, tol * 0.1, maxit)
            last_err = err
            if err < tol * 0.1 and _tail(un) <= tail_tol:
                ok = True
                break
            if _cutoff(Mt) > J_max:
                break
            if err < tol * 0.1:
                ut = _resample(un, 2 * Mt)
            elif not grown and _tail(u) > tail_tol * 1e3:
                # divergence with an under-resolved seed: retry once on a finer lattice
                grown = True
                ut = _resample(u, 2 * Mt)
            else:
                break
            Mt *= 2
        if ok:
            k_cur, u, lam, M = k_next, un, ln, Mt
            if k_cur == kappa:
                break
            h = min(2 * h, step)
        else:
            h /= 2
            if h < min_step:
                raise BreakdownSuspected(
                    f"continuation stalled at kappa={k_cur:.6g} towards {kappa} (defect {last_err:.3g})",
                    last_err,
                    k_cur,
                )
    c = _to_param(u, kappa, omega, lam, its)
    c.defect = max(c.invariance_defect(2048), c.invariance_defect(4 * M))
    if c.defect > tol:
        raise BreakdownSuspected(f"certified defect {c.defect:.3g} exceeds tol {tol}", c.defect, kappa)
    if c.min_twist_derivative(4 * M) <= 0.0:
        raise InvalidCircle("x(t) = t + u(t) is not monotone: not a graph over x")
    return c


def estimate_breakdown(omega: float = GOLDEN_OMEGA, kappa_hi: float = 1.0, J: int = 256, J_max: int = 2048, tol: float = 1e-11) -> float:
    """Largest ``kappa`` reached by continuation before the solver fails."""
    try:
        solve_circle(kappa_hi, omega, J, tol, J_max=J_max)
    except BreakdownSuspected as exc:
        return exc.kappa
    return kappa_hi


# --------------------------------------------------------------------------
# turnstile band


@dataclass
class Band:
    x: np.ndarray
    y_lower: np.ndarray
    y_upper: np.ndarray
    area: float  # integral of (upper - lower)
    signed_area: float  # integral of (f2 - f1)
    f1: np.ndarray
    f2: np.ndarray

    @property
    def nonempty(self) -> bool:
        return bool(np.max(self.y_upper - self.y_lower) > 0.0)


def _periodic_trapz(f: np.ndarray) -> float:
    # uniform periodic lattice: trapezoid rule reduces to a plain mean
    return float(TWO_PI * np.mean(f))


def turnstile_band(
    kappa1: float,
    kappa2: float,
    omega: float = GOLDEN_OMEGA,
    nx: int = 1024,
    circles: tuple[CircleParam, CircleParam] | None = None,
    **solve_kw,
) -> Band:
    """Region between the ``kappa1`` and ``kappa2`` circles as graphs over ``x``."""
    if circles is None:
        c1 = solve_circle(kappa1, omega, **solve_kw)
        c2 = c1 if kappa2 == kappa1 else solve_circle(kappa2, omega, seed=c1, **solve_kw)
    else:
        c1, c2 = circles
    x = TWO_PI * np.arange(nx) / nx
    f1 = c1.graph(x)
    f2 = c2.graph(x)
    lo = np.minimum(f1, f2)
    hi = np.maximum(f1, f2)
    return Band(x, lo, hi, _periodic_trapz(hi - lo), _periodic_trapz(f2 - f1), f1, f2)


@dataclass
class Witness:
    x0: float
    y0: float
    steps: int
    x: np.ndarray
    y: np.ndarray
    side: str  # "above" or "below"


def crossing_witness(
    kappa1: float,
    kappa2: float,
    omega: float = GOLDEN_OMEGA,
    iters: int = 10_000,
    n_seeds: int = 64,
    band: Band | None = None,
) -> Witness | None:
    """A band seed whose alternating-map orbit rises above ``max(y_upper)`` or
    falls below ``min(y_lower)``; ``None`` if no seed does so within ``iters``."""
    from .transport import AltParams, _escape_kernel

    if kappa1 == kappa2:
        return None
    if band is None:
        band = turnstile_band(kappa1, kappa2, omega)
    width = band.y_upper - band.y_lower
    if not band.nonempty:
        return None
    order = np.argsort(-width, kind="stable")
    idx = np.sort(order[:n_seeds])
    idx = idx[width[idx] > 0]
    xs = band.x[idx].copy()
    ys = 0.5 * (band.y_lower[idx] + band.y_upper[idx])
    y_hi = float(np.max(band.y_upper))
    y_lo = float(np.min(band.y_lower))
    ap = AltParams(kappa1, kappa2)
    hit = _escape_kernel(xs, ys, ap.kappa2, ap.kappa1, 0, int(iters), y_hi, y_lo, True, True, 256)
    got = np.nonzero(hit >= 0)[0]
    if got.size == 0:
        return None
    s = int(got[0])
    n = int(hit[s])
    from .core import StdPoint
    from .transport import alt_orbit

    ox, oy = alt_orbit(StdPoint(float(xs[s]), float(ys[s])), ap, n)
    side = "above" if oy[-1] >= y_hi else "below"
    return Witness(float(xs[s]), float(ys[s]), n, ox, oy, side)
