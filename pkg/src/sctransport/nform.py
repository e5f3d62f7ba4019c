"""Order-by-order normal forms for sequential periodic orbits.

Each oscillator is written as ``x = zeta + g(zeta - theta0, eps)`` with
``eps = kappa0`` and ``gamma = alpha * eps``.  Substituting into the
Lagrangian form of the map gives, order by order in ``eps``, the homological
equation::

    sum_m c_m g_{j,m} e^{i m phi} = [ kappa' sin(phi + g) ]_j

with ``c_m = 2 (1 - cos(2 pi m p / q))``.  Harmonics with ``c_m != 0`` fix
``g_{j,m}``; harmonics with ``q | m`` cannot be removed and form the
resonant normal form ``zeta^{n+1} - 2 zeta^n + zeta^{n-1} = -[resonant]``.
The mean field enters through ``kappa' = sqrt(eps^2 + eta^2) + eta`` with
``eta = gamma * sum_k sin(x_k - theta)``; summing over the ``q`` evenly spaced
oscillators keeps only harmonics that are multiples of ``q``.

Everything is exact: numbers are Gaussian rationals, ``alpha`` is a formal
polynomial variable, and harmonic ``m`` of ``zeta`` implicitly carries the
phase factor ``exp(-i m theta0)`` (so series are stored in ``phi = zeta -
theta0``).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Literal

MAX_ORDER = 8

# cos(2 pi k / q) is rational only for these q
_RATIONAL_COS = {
    1: {0: Fraction(1)},
    2: {0: Fraction(1), 1: Fraction(-1)},
    3: {0: Fraction(1), 1: Fraction(-1, 2), 2: Fraction(-1, 2)},
    4: {0: Fraction(1), 1: Fraction(0), 2: Fraction(-1), 3: Fraction(0)},
    6: {0: Fraction(1), 1: Fraction(1, 2), 2: Fraction(-1, 2), 3: Fraction(-1), 4: Fraction(-1, 2), 5: Fraction(1, 2)},
}


class UnsupportedRotation(ValueError):
    pass


class NotDerived(ValueError):
    pass


# --------------------------------------------------------------------------
# exact scalars


@dataclass(frozen=True)
class QI:
    """Gaussian rational ``re + i im``."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @staticmethod
    def of(v) -> "QI":
        if isinstance(v, QI):
            return v
        if isinstance(v, complex):
            raise TypeError("complex floats are not exact")
        return QI(Fraction(v), Fraction(0))

    def __add__(self, o):
        o = QI.of(o)
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-QI.of(o))

    def __mul__(self, o):
        o = QI.of(o)
        return QI(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = QI.of(o)
        d = o.re * o.re + o.im * o.im
        return self * QI(o.re / d, -o.im / d)

    def conj(self):
        return QI(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*i)"


I = QI(Fraction(0), Fraction(1))


class APoly(dict):
    """Polynomial in ``alpha`` with Gaussian-rational coefficients: ``{degree: QI}``."""

    @classmethod
    def const(cls, v) -> "APoly":
        v = QI.of(v)
        return cls({0: v}) if v else cls()

    @classmethod
    def alpha(cls) -> "APoly":
        return cls({1: QI(Fraction(1))})

    def _clean(self):
        for k in [k for k, v in self.items() if not v]:
            del self[k]
        return self

    def __add__(self, o):
        out = APoly(self)
        for k, v in o.items():
            out[k] = out.get(k, QI()) + v
        return out._clean()

    def __neg__(self):
        return APoly({k: -v for k, v in self.items()})

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if isinstance(o, APoly):
            out = APoly()
            for a, u in self.items():
                for b, v in o.items():
                    out[a + b] = out.get(a + b, QI()) + u * v
            return out._clean()
        s = QI.of(o)
        return APoly({k: v * s for k, v in self.items()})._clean()

    __rmul__ = __mul__

    def __truediv__(self, s):
        s = QI.of(s)
        return APoly({k: v / s for k, v in self.items()})

    def conj(self):
        return APoly({k: v.conj() for k, v in self.items()})

    def __bool__(self):
        return any(bool(v) for v in self.values())

    def __call__(self, alpha: float) -> complex:
        return sum(complex(v) * alpha**k for k, v in self.items())

    def is_real(self) -> bool:
        return all(not v.im for v in self.values())

    def real_coeffs(self) -> dict[int, Fraction]:
        if not self.is_real():
            raise ValueError(f"polynomial {self!r} is not real")
        return {k: v.re for k, v in sorted(self.items())}

    def __repr__(self):
        if not self:
            return "0"
        terms = []
        for k, v in sorted(self.items()):
            a = "" if k == 0 else ("a" if k == 1 else f"a^{k}")
            terms.append(f"{v!r}{'*' + a if a else ''}")
        return " + ".join(terms)

    def to_json(self) -> dict:
        return {str(k): [str(v.re), str(v.im)] for k, v in sorted(self.items())}


# --------------------------------------------------------------------------
# trigonometric polynomials and formal series


class TrigPoly(dict):
    """``sum_m C_m e^{i m phi}`` with ``C_m`` an :class:`APoly`; absent ``m`` are exact zeros.

    In terms of ``zeta`` the coefficient of ``e^{i m zeta}`` is
    ``C_m e^{-i m theta0}``, i.e. harmonic ``m`` carries phase power ``-m``.
    """

    @classmethod
    def mono(cls, m: int, c) -> "TrigPoly":
        c = c if isinstance(c, APoly) else APoly.const(c)
        return cls({m: c}) if c else cls()

    @classmethod
    def one(cls) -> "TrigPoly":
        return cls.mono(0, 1)

    def _clean(self):
        for k in [k for k, v in self.items() if not v]:
            del self[k]
        return self

    def __add__(self, o):
        out = TrigPoly(self)
        for m, c in o.items():
            out[m] = out[m] + c if m in out else c
        return out._clean()

    def __neg__(self):
        return TrigPoly({m: -c for m, c in self.items()})

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if isinstance(o, TrigPoly):
            out = TrigPoly()
            for a, u in self.items():
                for b, v in o.items():
                    prod = u * v
                    out[a + b] = out[a + b] + prod if (a + b) in out else prod
            return out._clean()
        return TrigPoly({m: c * o for m, c in self.items()})._clean()

    __rmul__ = __mul__

    def __truediv__(self, s):
        return TrigPoly({m: c / s for m, c in self.items()})

    def project(self, q: int) -> "TrigPoly":
        """Keep only harmonics that are multiples of ``q``."""
        return TrigPoly({m: c for m, c in self.items() if m % q == 0})

    def phase_power(self, m: int) -> int:
        return -m

    def at(self, phi: float, alpha: float) -> complex:
        return sum(c(alpha) * cmath.exp(1j * m * phi) for m, c in self.items())

    def at_exact(self, phi_over_pi: Fraction) -> APoly:
        """Evaluate at ``phi = pi * phi_over_pi`` when every ``e^{i m phi}`` is ``+-1``."""
        out = APoly()
        for m, c in self.items():
            t = Fraction(m) * phi_over_pi
            if t.denominator != 1:
                raise ValueError("exact evaluation needs m*phi to be a multiple of pi")
            out = out + (c if t.numerator % 2 == 0 else -c)
        return out

    def real_form(self) -> dict[str, dict[int, APoly]]:
        """``{'const': {0: C_0}, 'cos': {m: A_m}, 'sin': {m: B_m}}`` with
        ``f = C_0 + sum A_m cos(m phi) + B_m sin(m phi)``."""
        cos_: dict[int, APoly] = {}
        sin_: dict[int, APoly] = {}
        const = self.get(0, APoly())
        for m in sorted({abs(k) for k in self if k}):
            cp, cm = self.get(m, APoly()), self.get(-m, APoly())
            a = cp + cm
            b = (cp - cm) * I
            if a:
                cos_[m] = a
            if b:
                sin_[m] = b
        return {"const": {0: const} if const else {}, "cos": cos_, "sin": sin_}

    def is_real(self) -> bool:
        return all(self.get(-m, APoly()) == c.conj() or not (self.get(-m, APoly()) - c.conj()) for m, c in self.items())


def sin_phi() -> TrigPoly:
    return TrigPoly({1: APoly.const(QI(0, Fraction(-1, 2))), -1: APoly.const(QI(0, Fraction(1, 2)))})


class FormalSeries(list):
    """``[T_0, T_1, ..., T_J]`` meaning ``sum_j eps^j T_j``; orders above ``J`` are undefined."""

    @classmethod
    def zero(cls, J: int) -> "FormalSeries":
        return cls(TrigPoly() for _ in range(J + 1))

    @classmethod
    def const(cls, t: TrigPoly, J: int) -> "FormalSeries":
        s = cls.zero(J)
        s[0] = t
        return s

    @property
    def order(self) -> int:
        return len(self) - 1

    def __add__(self, o):
        J = min(self.order, o.order)
        return FormalSeries(self[j] + o[j] for j in range(J + 1))

    def __neg__(self):
        return FormalSeries(-t for t in self)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if isinstance(o, FormalSeries):
            J = min(self.order, o.order)
            out = FormalSeries.zero(J)
            for a in range(J + 1):
                if not self[a]:
                    continue
                for b in range(J + 1 - a):
                    if o[b]:
                        out[a + b] = out[a + b] + self[a] * o[b]
            return out
        return FormalSeries(t * o for t in self)

    __rmul__ = __mul__

    def project(self, q: int) -> "FormalSeries":
        return FormalSeries(t.project(q) for t in self)

    def truncate(self, J: int) -> "FormalSeries":
        return FormalSeries(self[: J + 1])

    def valuation(self) -> int:
        for j, t in enumerate(self):
            if t:
                return j
        return self.order + 1

    def at(self, phi: float, eps: float, alpha: float) -> complex:
        return sum(t.at(phi, alpha) * eps**j for j, t in enumerate(self))


def series_exp(w: FormalSeries) -> FormalSeries:
    """``exp(w)`` for a series with ``w_0 = 0``."""
    if w[0]:
        raise ValueError("series_exp needs a vanishing constant order")
    J = w.order
    out = FormalSeries.const(TrigPoly.one(), J)
    term = FormalSeries.const(TrigPoly.one(), J)
    for n in range(1, J + 1):
        term = term * w * Fraction(1, n)
        out = out + term
    return out


def series_binomial(w: FormalSeries, power: Fraction) -> FormalSeries:
    """``(1 + w)^power`` for ``w`` of positive valuation."""
    if w[0]:
        raise ValueError("series_binomial needs a vanishing constant order")
    J = w.order
    out = FormalSeries.const(TrigPoly.one(), J)
    term = FormalSeries.const(TrigPoly.one(), J)
    coef = Fraction(1)
    for n in range(1, J + 1):
        coef = coef * (power - (n - 1)) / n
        term = term * w
        if term.valuation() > J:
            break
        out = out + term * coef
    return out


def sin_cos_shift(g: FormalSeries) -> tuple[FormalSeries, FormalSeries]:
    """``sin(phi + g)`` and ``cos(phi + g)`` as formal series."""
    J = g.order
    ep = series_exp(g * I)
    em = series_exp(g * (-I))
    e1 = TrigPoly.mono(1, 1)
    e_1 = TrigPoly.mono(-1, 1)
    a = ep * e1
    b = em * e_1
    s = (a - b) * (QI(0, Fraction(-1, 2)))  # 1/(2i) = -i/2
    c = (a + b) * Fraction(1, 2)
    return FormalSeries(s[: J + 1]), FormalSeries(c[: J + 1])


# --------------------------------------------------------------------------
# homological equation


def c_coefficient(m: int, p: int, q: int):
    """``2 (1 - cos(2 pi m p / q))``: exact ``Fraction`` for q in {1,2,3,4,6}, float otherwise."""
    if q < 1 or math.gcd(p, q) != 1:
        raise ValueError(f"need gcd(p, q) = 1, got {p}/{q}")
    table = _RATIONAL_COS.get(q)
    if table is not None:
        return 2 * (1 - table[(m * p) % q])
    if (m * p) % q == 0:
        return Fraction(0)
    return 2.0 * (1.0 - math.cos(2.0 * math.pi * m * p / q))


@dataclass
class NormalFormResult:
    p: int
    q: int
    order: int
    g: FormalSeries
    resonant_rhs: FormalSeries
    kappa_ratio: FormalSeries  # kappa' / eps as a function of phi
    eta_ratio: FormalSeries  # eta / eps
    omega_series: FormalSeries  # Omega as a function of phi (before fixed-point evaluation)

    @property
    def p_over_q(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def omega_elliptic(self) -> list[APoly]:
        return omega_relation(self, "elliptic")

    @property
    def omega_hyperbolic(self) -> list[APoly]:
        return omega_relation(self, "hyperbolic")

    @property
    def normal_form(self) -> FormalSeries:
        """Right-hand side of ``zeta^{n+1} - 2 zeta^n + zeta^{n-1}``."""
        return -self.resonant_rhs

    def evaluate_g(self, phi: float, eps: float, alpha: float) -> float:
        return self.g.at(phi, eps, alpha).real


KernelChoice = Callable[[int, int], APoly]


def solve_homological(p: int, q: int, order: int, kernel: KernelChoice | None = None) -> NormalFormResult:
    """Solve the homological equation through ``eps**order``.

    ``kernel(j, m)`` may supply the free coefficients ``g_{j,m}`` for
    ``q | m``, ``m != 0``; by default they are zero.  The mean of every order
    of ``g`` is zero.
    """
    if q not in _RATIONAL_COS or q < 2:
        raise UnsupportedRotation(f"exact normal forms are implemented for q in (2, 3, 4, 6); got q={q}")
    if math.gcd(p, q) != 1:
        raise ValueError(f"need gcd(p, q) = 1, got {p}/{q}")
    if order < q:
        raise ValueError(f"order {order} < q={q}: the first resonance is not captured")
    if order > MAX_ORDER:
        raise ValueError(f"order must be <= {MAX_ORDER}")

    alpha_q = APoly({1: QI(Fraction(q))})
    g = FormalSeries.zero(order)
    res = FormalSeries.zero(order)

    def mean_field(gs: FormalSeries, J: int):
        gs = gs.truncate(J)
        S, C = sin_cos_shift(gs)
        u = S.project(q) * alpha_q  # eta / eps
        K = u + series_binomial(u * u, Fraction(1, 2))  # kappa' / eps
        return S, C, u, K

    for j in range(1, order + 1):
        S, _C, _u, K = mean_field(g, j - 1)
        rhs = (K * S)[j - 1]
        gj = TrigPoly()
        rj = TrigPoly()
        for m, c in rhs.items():
            cm = c_coefficient(m, p, q)
            if cm == 0:
                rj[m] = c
            else:
                gj[m] = c / cm
        if kernel is not None:
            for m in range(-(j + 1), j + 2):
                if m and m % q == 0:
                    k = kernel(j, m)
                    if k:
                        gj[m] = k
        g[j] = gj._clean()
        res[j] = rj._clean()

    S, C, u, K = mean_field(g, order)
    # Omega = (d eta / d theta) / kappa' = -alpha q Pi_q[cos(phi + g)] / (kappa'/eps)
    Kinv = series_binomial(K - FormalSeries.const(TrigPoly.one(), order), Fraction(-1))
    omega = C.project(q) * Kinv * (-alpha_q)
    return NormalFormResult(p, q, order, g, res, K, u, omega)


def fixed_point_phase(q: int, kind: Literal["elliptic", "hyperbolic"]) -> Fraction:
    """Fixed points of the q-fold map at ``phi = 2 n pi / q`` (elliptic) or ``(2n+1) pi / q`` (hyperbolic); returned as multiples of pi for n = 0."""
    if kind == "elliptic":
        return Fraction(0)
    if kind == "hyperbolic":
        return Fraction(1, q)
    raise ValueError(f"kind must be 'elliptic' or 'hyperbolic', got {kind!r}")


def omega_relation(nf: NormalFormResult, kind: Literal["elliptic", "hyperbolic"]) -> list[APoly]:
    """Coefficients ``[W_0, ..., W_J]`` with ``Omega = sum_j W_j(alpha) kappa0^j``."""
    ph = fixed_point_phase(nf.q, kind)
    return [t.at_exact(ph) for t in nf.omega_series]


def omega_value(nf: NormalFormResult, kind, kappa0: float, alpha: float) -> float:
    return sum(c(alpha).real * kappa0**j for j, c in enumerate(omega_relation(nf, kind)))


def delta_kappa_series(nf: NormalFormResult, kind: Literal["elliptic", "hyperbolic"]) -> list[APoly]:
    """``kappa^1 - kappa^0`` at the fixed point, as coefficients of ``kappa0^j``."""
    ph = fixed_point_phase(nf.q, kind)
    K = [t.at_exact(ph) for t in nf.kappa_ratio]
    out = [APoly()] + K  # kappa' = eps * K
    out[1] = out[1] - APoly.const(1)
    return out[: nf.order + 1]


def delta_kappa_leading(nf: NormalFormResult, kind: Literal["elliptic", "hyperbolic"] = "hyperbolic"):
    """Leading ``(coefficient, exponent)`` of ``kappa^1 - kappa^0`` at the fixed point.

    Returns ``(APoly(), None)`` when the amplitude vanishes through the solved order.
    """
    if nf.q != 3:
        raise NotDerived("the oscillation amplitude is only derived for q = 3")
    for j, c in enumerate(delta_kappa_series(nf, kind)):
        if c:
            return c, j
    return APoly(), None


def delta_kappa_generic(nf: NormalFormResult) -> FormalSeries:
    """``kappa' - eps`` as a function of ``phi`` (off the fixed points)."""
    out = FormalSeries([TrigPoly()] + list(nf.kappa_ratio))[: nf.order + 1]
    out[1] = out[1] - TrigPoly.one()
    return FormalSeries(out)


def evaluate_change_of_variables(nf: NormalFormResult, zeta: float, kappa0: float, alpha: float, theta0: float = 0.0) -> float:
    """``x = zeta + g(zeta - theta0, kappa0)`` for the solved truncation."""
    return zeta + nf.g.at(zeta - theta0, kappa0, alpha).real


def spo_guess(nf: NormalFormResult, kind, kappa0: float, alpha: float, theta0: float = 0.0):
    """Oscillator positions/momenta and Omega predicted at a fixed point.

    Returns ``(x, y, omega)``; ``x`` is on the lift with ``x[k] ~ x[0] + 2 pi p k / q``.
    """
    import numpy as np

    w = 2.0 * math.pi * nf.p / nf.q
    phi0 = float(fixed_point_phase(nf.q, kind)) * math.pi
    zk = theta0 + phi0 + w * np.arange(nf.q)
    x = np.array([evaluate_change_of_variables(nf, z, kappa0, alpha, theta0) for z in zk])
    xm1 = evaluate_change_of_variables(nf, zk[0] - w, kappa0, alpha, theta0)
    y = np.diff(np.concatenate([[xm1], x]))
    return x, y, omega_value(nf, kind, kappa0, alpha)


# --------------------------------------------------------------------------
# reporting


def _poly_str(c: APoly, power: int, var: str = "k") -> str:
    return f"({c!r})*{var}^{power}"


def real_form_series(s: FormalSeries) -> list[dict]:
    return [t.real_form() for t in s]


def nf_report(nf: NormalFormResult) -> str:
    """Human-readable report: g per order, resonant terms, Omega polynomials."""
    lines = [f"normal form p/q = {nf.p}/{nf.q}, order {nf.order}  (k = kappa0, a = alpha, phi = zeta - theta0)"]
    lines.append("change of variables g(phi):")
    for j, t in enumerate(nf.g):
        rf = t.real_form()
        for kind in ("const", "cos", "sin"):
            for m, c in rf[kind].items():
                lines.append(f"  k^{j}  {kind}({m} phi): {c!r}")
        for m, c in sorted(t.items()):
            lines.append(f"    g[{j},{m}] = ({c!r}) e^{{{-m}i theta0}}")
    lines.append("resonant normal form  zeta^1 - 2 zeta^0 + zeta^-1 = ")
    for j, t in enumerate(nf.normal_form):
        rf = t.real_form()
        for kind in ("const", "cos", "sin"):
            for m, c in rf[kind].items():
                lines.append(f"  k^{j}  {kind}({m} phi): {c!r}")
    for kind in ("elliptic", "hyperbolic"):
        terms = [_poly_str(c, j) for j, c in enumerate(omega_relation(nf, kind)) if c]
        lines.append(f"Omega ({kind}) = " + (" + ".join(terms) if terms else "0") + f" + O(k^{nf.order + 1})")
        dk = [_poly_str(c, j) for j, c in enumerate(delta_kappa_series(nf, kind)) if c]
        lines.append(f"kappa^1 - kappa^0 ({kind}) = " + (" + ".join(dk) if dk else "0") + f" + O(k^{nf.order + 1})")
    return "\n".join(lines)


def nf_to_dict(nf: NormalFormResult) -> dict:
    """Machine-readable dump; rationals as strings."""

    def rf(t: TrigPoly):
        f = t.real_form()
        return {kind: {str(m): c.to_json() for m, c in f[kind].items()} for kind in f}

    return {
        "p": nf.p,
        "q": nf.q,
        "order": nf.order,
        "g": {str(j): rf(t) for j, t in enumerate(nf.g)},
        "g_complex": {str(j): {str(m): c.to_json() for m, c in sorted(t.items())} for j, t in enumerate(nf.g)},
        "normal_form": {str(j): rf(t) for j, t in enumerate(nf.normal_form)},
        "omega_elliptic": {str(j): c.to_json() for j, c in enumerate(nf.omega_elliptic)},
        "omega_hyperbolic": {str(j): c.to_json() for j, c in enumerate(nf.omega_hyperbolic)},
        "delta_kappa_elliptic": {str(j): c.to_json() for j, c in enumerate(delta_kappa_series(nf, "elliptic"))},
        "delta_kappa_hyperbolic": {str(j): c.to_json() for j, c in enumerate(delta_kappa_series(nf, "hyperbolic"))},
    }


def nf_json(nf: NormalFormResult) -> str:
    return json.dumps(nf_to_dict(nf), indent=1, sort_keys=True)


def real_coeff(t: TrigPoly, kind: str, m: int) -> dict[int, Fraction]:
    """Real coefficient polynomial of ``kind(m phi)`` in ``t`` as ``{alpha_degree: Fraction}``."""
    f = t.real_form()[kind]
    c = f.get(m, APoly())
    return c.real_coeffs()


def iter_terms(s: FormalSeries) -> Iterable[tuple[int, str, int, dict[int, Fraction]]]:
    for j, t in enumerate(s):
        f = t.real_form()
        for kind in ("const", "cos", "sin"):
            for m, c in f[kind].items():
                yield j, kind, m, c.real_coeffs()
