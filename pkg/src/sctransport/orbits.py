"""Symmetric periodic orbits of the standard map and sequential periodic
orbits (SPOs) of the self-consistent map.

An SPO of rotation ``p/q`` has ``q`` oscillators placed on the ``q`` points of
a standard-map orbit; each iteration moves oscillator ``i`` onto the position
held by oscillator ``i + 1``.  With coupling switched on, the orbit survives
only for a particular drift ``Omega(kappa0, gamma)``, so Newton's method
treats ``Omega`` as an unknown.

Closure is measured on the lift: after ``q`` steps every ``x_k`` has advanced
by ``2 pi p``, every ``y_k``, ``kappa`` and ``theta`` has returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import TWO_PI, SCParams, SCState, StdPoint, _advance, kappa_update, std_jacobian, wrap_angle

log = logging.getLogger(__name__)

SymmetryLine = Literal["x0", "xpi", "h0", "hpi"]


class OrbitNotFound(RuntimeError):
    pass


class NewtonDivergence(RuntimeError):
    def __init__(self, msg: str, residual: float = math.inf):
        super().__init__(msg)
        self.residual = residual


class RankDeficiency(NewtonDivergence):
    pass


class UnsupportedOperation(ValueError):
    pass


# --------------------------------------------------------------------------
# standard-map orbits


@dataclass
class StdOrbit:
    x: np.ndarray  # lifted positions, x[i+1] = x[i] + y[i+1]
    y: np.ndarray
    p: int
    q: int
    kappa: float
    phi: float
    residue: float
    line: str = "x0"

    @property
    def points(self) -> list[StdPoint]:
        return [StdPoint(float(wrap_angle(a)), float(b)) for a, b in zip(self.x, self.y)]

    @property
    def kind(self) -> str:
        if 0.0 < self.residue < 1.0:
            return "elliptic"
        if self.residue < 0.0:
            return "hyperbolic"
        if self.residue > 1.0:
            return "inverse-hyperbolic"
        return "parabolic"

    def closure(self) -> float:
        """Sup-norm defect of ``q`` lifted steps against the ``2 pi p`` shift."""
        x, y = float(self.x[0]), float(self.y[0])
        for _ in range(self.q):
            y = y - self.kappa * math.sin(x - self.phi)
            x = x + y
        return max(abs(x - self.x[0] - TWO_PI * self.p), abs(y - self.y[0]))


def _iterate_lift(x: float, y: float, kappa: float, phi: float, n: int):
    for _ in range(n):
        y = y - kappa * math.sin(x - phi)
        x = x + y
    return x, y


def _line_point(s: float, line: SymmetryLine, phi: float) -> tuple[float, float]:
    # Reversor fixed sets, written in u = x - phi:
    #   I0 (u, y) -> (-u, y - k sin u):  u in {0, pi}
    #   I1 (u, y) -> (-u + y, y):        u = y/2 or y/2 + pi
    if line == "x0":
        return phi, s
    if line == "xpi":
        return phi + math.pi, s
    if line == "h0":
        return phi + 0.5 * s, s
    if line == "hpi":
        return phi + 0.5 * s + math.pi, s
    raise ValueError(f"unknown symmetry line {line!r}")


def _half_period_condition(line: SymmetryLine, q: int):
    """Return (steps n, target line family) so that hitting the target at step n closes period q."""
    on_I0 = line in ("x0", "xpi")
    if on_I0:
        # odd q = 2n-1 needs F^n z in Fix(I1); even q = 2n needs F^n z in Fix(I0)
        return ((q + 1) // 2, "I1") if q % 2 else (q // 2, "I0")
    # start on Fix(I1): odd q = 2n+1 needs F^n z in Fix(I0); even q = 2n needs Fix(I1)
    return ((q - 1) // 2, "I0") if q % 2 else (q // 2, "I1")


def greene_residue(x: Sequence[float], kappa: float, phi: float) -> float:
    M = np.eye(2)
    for xi in x:
        M = std_jacobian(float(xi), kappa, phi) @ M
    return (2.0 - np.trace(M)) / 4.0


def find_symmetric_orbit(
    kappa: float,
    phi: float,
    p: int,
    q: int,
    line: SymmetryLine = "x0",
    width: float | None = None,
    n_scan: int = 801,
    tol: float = 1e-12,
) -> StdOrbit:
    """Symmetric ``p/q`` orbit of ``y' = y - kappa sin(x - phi), x' = x + y'``
    with its first point on the requested symmetry line.

    The momentum on the line is found by bracketing the half-period symmetry
    condition around ``2 pi p / q`` and refining with Brent's method.
    """
    if q < 1 or math.gcd(p, q) != 1:
        raise ValueError(f"need q >= 1 and gcd(p, q) = 1, got {p}/{q}")
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    centre = TWO_PI * p / q
    if width is None:
        width = min(math.pi / q, 0.25 + 2.0 * kappa)
    n_half, target = _half_period_condition(line, q)

    def cond(s: float) -> float:
        x, y = _line_point(s, line, phi)
        x, y = _iterate_lift(x, y, kappa, phi, n_half)
        u = x - phi
        return math.sin(u) if target == "I0" else math.sin(u - 0.5 * y)

    ss = np.linspace(centre - width, centre + width, n_scan)
    gs = np.array([cond(s) for s in ss])
    roots = [float(s) for s, g in zip(ss, gs) if g == 0.0]
    for i in np.nonzero(np.sign(gs[:-1]) * np.sign(gs[1:]) < 0)[0]:
        roots.append(brentq(cond, ss[i], ss[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))

    best = None
    for s in sorted(roots, key=lambda r: abs(r - centre)):
        x0, y0 = _line_point(s, line, phi)
        xs = np.empty(q)
        ys = np.empty(q)
        x, y = x0, y0
        for i in range(q):
            xs[i], ys[i] = x, y
            x, y = _iterate_lift(x, y, kappa, phi, 1)
        if abs(x - x0 - TWO_PI * p) < 1e-6 and abs(y - y0) < 1e-6:
            best = (xs, ys)
            break
    if best is None:
        raise OrbitNotFound(f"no symmetric {p}/{q} orbit on line {line} for kappa={kappa}")
    xs, ys = _polish(best[0][0], best[1][0], kappa, phi, p, q, tol)
    orb = StdOrbit(xs, ys, p, q, float(kappa), float(phi), greene_residue(xs, kappa, phi), line)
    return orb


def orbit_of_kind(
    kappa: float,
    phi: float,
    p: int,
    q: int,
    kind: Literal["elliptic", "hyperbolic"],
    lines: Sequence[SymmetryLine] = ("x0", "xpi", "h0", "hpi"),
) -> StdOrbit:
    """First symmetric orbit (in ``lines`` order) whose residue sign matches ``kind``."""
    if kind not in ("elliptic", "hyperbolic"):
        raise ValueError(f"kind must be 'elliptic' or 'hyperbolic', got {kind!r}")
    for line in lines:
        try:
            o = find_symmetric_orbit(kappa, phi, p, q, line)
        except OrbitNotFound:
            continue
        if (o.residue > 0.0) == (kind == "elliptic") and o.residue != 0.0:
            return o
    raise OrbitNotFound(f"no {kind} symmetric {p}/{q} orbit for kappa={kappa}")


def _polish(x0, y0, kappa, phi, p, q, tol, maxit=8):
    """Newton on the 2-D closure F^q(z) - z - (2 pi p, 0) = 0."""
    z = np.array([x0, y0], dtype=float)
    for _ in range(maxit):
        x, y = z
        M = np.eye(2)
        for _i in range(q):
            M = std_jacobian(x, kappa, phi) @ M
            x, y = _iterate_lift(x, y, kappa, phi, 1)
        r = np.array([x - z[0] - TWO_PI * p, y - z[1]])
        if np.max(np.abs(r)) <= 0.1 * tol:
            break
        A = M - np.eye(2)
        if abs(np.linalg.det(A)) < 1e-14:
            break  # parabolic / integrable: keep the bracketed root
        z = z - np.linalg.solve(A, r)
    xs = np.empty(q)
    ys = np.empty(q)
    x, y = z
    for i in range(q):
        xs[i], ys[i] = x, y
        x, y = _iterate_lift(x, y, kappa, phi, 1)
    return xs, ys


# --------------------------------------------------------------------------
# self-consistent map: lifted step with analytic Jacobian


def sc_step_lift(z: np.ndarray, gamma: np.ndarray, omega: float) -> np.ndarray:
    """Unwrapped step of the self-consistent map on ``(x1, y1, ..., kappa, theta)``."""
    x = z[0:-2:2]
    y = z[1:-2:2]
    kap, th = z[-2], z[-1]
    s = np.sin(x - th)
    c = np.cos(x - th)
    e = math.fsum(gamma * s)
    D = -math.fsum(gamma * c)
    k1 = kappa_update(kap, e)
    y1 = y - k1 * s
    out = np.empty_like(z)
    out[0:-2:2] = x + y1
    out[1:-2:2] = y1
    out[-2] = k1
    out[-1] = th - omega + D / k1
    return out


def sc_step_jacobian(z: np.ndarray, gamma: np.ndarray, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(z', J)`` where ``J`` is the Jacobian of the step with respect to
    ``(z, Omega)``; shape ``(2N+2, 2N+3)``."""
    N = (z.size - 2) // 2
    x = z[0:-2:2]
    kap, th = z[-2], z[-1]
    s = np.sin(x - th)
    c = np.cos(x - th)
    e = math.fsum(gamma * s)
    D = -math.fsum(gamma * c)
    r = math.sqrt(kap * kap + e * e)
    k1 = r + e
    a = e / r + 1.0
    dk_dkap = kap / r

    ix = np.arange(0, 2 * N, 2)
    iy = ix + 1
    ik, it, iw = 2 * N, 2 * N + 1, 2 * N + 2

    # gradient of kappa' and of D over (z, Omega)
    gk = np.zeros(2 * N + 3)
    gk[ix] = a * gamma * c
    gk[ik] = dk_dkap
    gk[it] = a * D
    gD = np.zeros(2 * N + 3)
    gD[ix] = gamma * s
    gD[it] = -e

    J = np.zeros((2 * N + 2, 2 * N + 3))
    # y'_k = y_k - kappa' s_k
    Jy = -np.outer(s, gk)
    Jy[np.arange(N), ix] -= k1 * c
    Jy[np.arange(N), iy] += 1.0
    Jy[:, it] += k1 * c
    J[iy, :] = Jy
    J[ix, :] = Jy
    J[ix, ix] += 1.0
    J[ik, :] = gk
    J[it, :] = gD / k1 - (D / (k1 * k1)) * gk
    J[it, it] += 1.0
    J[it, iw] -= 1.0

    z1 = np.empty_like(z)
    z1[0:-2:2] = x + (z[1:-2:2] - k1 * s)
    z1[1:-2:2] = z[1:-2:2] - k1 * s
    z1[-2] = k1
    z1[-1] = th - omega + D / k1
    return z1, J


def flow_jacobian(z: np.ndarray, gamma: np.ndarray, omega: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n``-fold lifted iterate and its Jacobian over ``(z, Omega)`` by forward accumulation."""
    m = z.size
    M = np.zeros((m + 1, m + 1))
    M[np.arange(m + 1), np.arange(m + 1)] = 1.0
    w = z.copy()
    for _ in range(n):
        w, J = sc_step_jacobian(w, gamma, omega)
        step = np.zeros((m + 1, m + 1))
        step[:m] = J
        step[m, m] = 1.0
        M = step @ M
    return w, M[:m]


# --------------------------------------------------------------------------
# sequential periodic orbits


@dataclass
class SPOState:
    state: SCState
    gamma: float
    omega_solved: float
    p: int
    q: int
    residual: float = 0.0
    iterations: int = 0
    line: str = "x0"

    @property
    def kappa0(self) -> float:
        return self.state.kappa

    @property
    def params(self) -> SCParams:
        return SCParams.uniform(self.gamma, self.state.N, self.omega_solved)

    def vector(self) -> np.ndarray:
        return self.state.as_vector()

    def closure_residual(self) -> float:
        """Sup-norm defect after ``q`` iterations of the wrapped ``step_sc``.

        Angles are compared modulo ``2 pi``.
        """
        s0 = self.state
        s = s0
        par = self.params
        for _ in range(self.q):
            s, _d = _advance(s, par)
        dx = np.abs(np.angle(np.exp(1j * (s.x - s0.x))))
        dth = abs(math.remainder(s.theta - s0.theta, TWO_PI))
        return float(max(dx.max(), np.abs(s.y - s0.y).max(), abs(s.kappa - s0.kappa), dth))

    def kappa_trace(self, n: int | None = None) -> np.ndarray:
        n = self.q if n is None else n
        s = self.state
        par = self.params
        out = [s.kappa]
        for _ in range(n):
            s, _d = _advance(s, par)
            out.append(s.kappa)
        return np.array(out)

    def delta_kappa(self) -> float:
        """``max_i |kappa^i - kappa^0|`` over one period."""
        tr = self.kappa_trace()
        return float(np.max(np.abs(tr[1:] - tr[0])))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "gamma": self.gamma,
            "omega_solved": self.omega_solved,
            "kappa": self.state.kappa,
            "theta": self.state.theta,
            "x": [float(v) for v in self.state.x],
            "y": [float(v) for v in self.state.y],
            "residual": self.residual,
            "line": self.line,
        }


def build_spo_seed(orbit: StdOrbit, kappa0: float, theta0: float) -> SPOState:
    """Place the orbit's points on ``q`` oscillators (γ = 0, Ω = 0)."""
    st = SCState(orbit.x.copy(), orbit.y.copy(), kappa0, theta0)
    return SPOState(st, 0.0, 0.0, orbit.p, orbit.q, line=orbit.line)


def seed_from_arrays(x, y, kappa0: float, theta0: float, p: int, q: int, omega: float = 0.0, line: str = "guess") -> SPOState:
    """SPO seed from explicit oscillator positions (lifted) and momenta."""
    st = SCState(np.asarray(x, dtype=float), np.asarray(y, dtype=float), kappa0, theta0)
    return SPOState(st, 0.0, float(omega), p, q, line=line)


def _closure(zv: np.ndarray, gamma_arr, omega, p, q):
    w, M = flow_jacobian(zv, gamma_arr, omega, q)
    shift = np.zeros_like(zv)
    shift[0:-2:2] = TWO_PI * p
    F = w - zv - shift
    A = M.copy()
    A[:, : zv.size] -= np.eye(zv.size)
    return F, A


def newton_spo(
    seed: SPOState,
    gamma: float,
    tol: float = 1e-12,
    maxit: int = 30,
    omega_guess: float | None = None,
) -> SPOState:
    """Solve for an SPO at coupling ``gamma`` with ``kappa0`` and ``theta0`` held
    at the seed values and ``Omega`` free.

    The bordered system has one more equation than unknowns because the map
    conserves ``sum gamma y + kappa^2/2``; it is consistent and solved by
    Gauss-Newton (least squares), which keeps quadratic convergence.
    """
    q, p = seed.q, seed.p
    z = seed.vector()
    N = seed.state.N
    garr = np.full(N, float(gamma))
    om = seed.omega_solved if omega_guess is None else float(omega_guess)
    if gamma == 0.0:
        res = SPOState(seed.state.copy(), 0.0, 0.0, p, q, line=seed.line)
        res.residual = res.closure_residual()
        return res
    ik, it = 2 * N, 2 * N + 1
    k_fix, th_fix = z[ik], z[it]
    res_norm = math.inf
    for it_n in range(1, maxit + 1):
        F, A = _closure(z, garr, om, p, q)
        res_norm = float(np.max(np.abs(F)))
        if not np.isfinite(res_norm):
            raise NewtonDivergence("non-finite residual", res_norm)
        if res_norm <= tol:
            break
        # rows: closure, kappa0 pin, theta0 pin; columns: z then Omega
        B = np.zeros((F.size + 2, z.size + 1))
        B[: F.size] = A
        B[F.size, ik] = 1.0
        B[F.size + 1, it] = 1.0
        rhs = np.concatenate([-F, [k_fix - z[ik], th_fix - z[it]]])
        sol, _r, rank, sv = np.linalg.lstsq(B, rhs, rcond=None)
        if rank < z.size + 1:
            raise RankDeficiency(f"bordered Jacobian rank {rank} < {z.size + 1}", res_norm)
        z = z + sol[:-1]
        om = om + sol[-1]
        if res_norm > 1e3:
            raise NewtonDivergence("Newton iterate left the basin", res_norm)
    else:
        raise NewtonDivergence(f"no convergence in {maxit} iterations (residual {res_norm:.3e})", res_norm)
    st = SCState.from_vector(z)
    return SPOState(st, float(gamma), float(om), p, q, res_norm, it_n, seed.line)


@dataclass
class BranchPoint:
    gamma: float
    spo: SPOState

    @property
    def omega_solved(self) -> float:
        return self.spo.omega_solved


@dataclass
class OrbitBranch:
    points: list[BranchPoint]
    p: int
    q: int
    kind: str
    terminated: str | None = None
    meta: dict = field(default_factory=dict)

    def gammas(self) -> np.ndarray:
        return np.array([b.gamma for b in self.points])

    def omegas(self) -> np.ndarray:
        return np.array([b.omega_solved for b in self.points])

    def kappas(self) -> np.ndarray:
        return np.array([b.spo.kappa0 for b in self.points])

    def rows(self):
        for b in self.points:
            yield (b.gamma, b.spo.kappa0, b.omega_solved, b.spo.residual, self.kind, self.p, self.q)


def continue_branch(
    seed: SPOState,
    gamma_max: float,
    step: float = 1e-4,
    tol: float = 1e-12,
    min_step: float = 1e-8,
    max_step: float | None = None,
    kind: str = "",
) -> OrbitBranch:
    """Predictor-corrector continuation in ``gamma`` from the γ=0 seed.

    The predictor extrapolates linearly (secant through the last two
    accepted points); failures halve the step, successes in fast Newton grow
    it back up to ``max_step``.
    """
    max_step = step if max_step is None else max_step
    pts = [BranchPoint(0.0, newton_spo(seed, 0.0, tol))]
    g, h = 0.0, step
    terminated = None
    while g < gamma_max * (1 - 1e-14):
        h = min(h, gamma_max - g)
        gn = g + h
        cur = pts[-1].spo
        if len(pts) >= 2:
            prev = pts[-2]
            t = h / (pts[-1].gamma - prev.gamma)
            zp = cur.vector() + t * (cur.vector() - prev.spo.vector())
            op = cur.omega_solved + t * (cur.omega_solved - prev.omega_solved)
        else:
            zp = cur.vector()
            op = cur.omega_solved
        guess = SPOState(SCState.from_vector(zp), gn, op, cur.p, cur.q, line=cur.line)
        try:
            sol = newton_spo(guess, gn, tol, maxit=12)
        except NewtonDivergence as exc:
            h *= 0.5
            log.debug("continuation step rejected at gamma=%g: %s", gn, exc)
            if h < min_step:
                terminated = f"step underflow at gamma={g:.6g}: {exc}"
                break
            continue
        pts.append(BranchPoint(gn, sol))
        g = gn
        if sol.iterations <= 4:
            h = min(2 * h, max_step)
    return OrbitBranch(pts, seed.p, seed.q, kind or seed.line, terminated)


def spo_at(
    kappa0: float,
    gamma: float,
    p: int = 1,
    q: int = 3,
    kind: Literal["elliptic", "hyperbolic"] = "elliptic",
    theta0: float = 0.0,
    tol: float = 1e-12,
) -> SPOState:
    """SPO of rotation ``p/q`` at ``(kappa0, gamma)`` seeded from the symmetric
    standard-map orbit of the requested type (see :func:`orbit_of_kind`).

    A direct Newton solve from the seed is tried first; if it fails the seed is
    continued in ``gamma``.
    """
    orb = orbit_of_kind(kappa0, theta0, p, q, kind)
    seed = build_spo_seed(orb, kappa0, theta0)
    try:
        return newton_spo(seed, gamma, tol)
    except NewtonDivergence:
        br = continue_branch(seed, gamma, step=gamma / 16, tol=tol, max_step=gamma / 4)
        if br.terminated:
            raise NewtonDivergence(br.terminated)
        return br.points[-1].spo


def alpha_branch(
    alpha: float,
    kappa_values: Sequence[float],
    p: int = 1,
    q: int = 3,
    kind: Literal["elliptic", "hyperbolic"] = "elliptic",
    theta0: float = 0.0,
    tol: float = 1e-12,
) -> OrbitBranch:
    """SPOs along the line ``gamma = alpha * kappa0`` (branch labelled by kappa0)."""
    pts = []
    terminated = None
    for k in kappa_values:
        try:
            s = spo_at(float(k), alpha * float(k), p, q, kind, theta0, tol)
        except (NewtonDivergence, OrbitNotFound) as exc:
            terminated = f"failed at kappa0={k}: {exc}"
            break
        pts.append(BranchPoint(alpha * float(k), s))
    return OrbitBranch(pts, p, q, kind, terminated, {"alpha": alpha})


# --------------------------------------------------------------------------
# symmetry operations


def _uniform_gamma(s: SPOState) -> None:
    if not np.isscalar(s.gamma):
        raise UnsupportedOperation("permutation requires equal couplings gamma_k")


def permute_orbit(s: SPOState, sigma: Sequence[int]) -> SPOState:
    """Reorder the oscillator pairs; periodicity is preserved for equal gammas."""
    _uniform_gamma(s)
    sigma = np.asarray(sigma, dtype=int)
    if sorted(sigma.tolist()) != list(range(s.state.N)):
        raise ValueError("sigma must be a permutation of range(N)")
    st = SCState(s.state.x[sigma], s.state.y[sigma], s.state.kappa, s.state.theta, s.state.n)
    return SPOState(st, s.gamma, s.omega_solved, s.p, s.q, s.residual, s.iterations, s.line)


def replicate_orbit(s: SPOState, times: int) -> SPOState:
    """Duplicate the oscillator block ``2**times``-fold and divide gamma by the same factor."""
    if times < 0:
        raise ValueError("times must be >= 0")
    f = 2**times
    st = SCState(np.tile(s.state.x, f), np.tile(s.state.y, f), s.state.kappa, s.state.theta, s.state.n)
    return SPOState(st, s.gamma / f, s.omega_solved, s.p, s.q, s.residual, s.iterations, s.line)
