import math

import numpy as np
import pytest

from sctransport.core import TWO_PI, Grid2D, StdPoint, step_std, step_std_unwrapped, wrap_angle
from sctransport.transport import (
    KAPPA_C,
    AltParams,
    EscapeCriterion,
    SweepGrid,
    _bisect_transport,
    alt_orbit,
    double_step_reduced,
    escape_fraction,
    escape_steps,
    fig5_grid,
    fig7_grid,
    has_global_transport,
    horn_boundary,
    step_alt,
)


def test_parity_convention():
    ap = AltParams(0.3, 0.7)
    assert ap.kappa_at(0) == 0.7 and ap.kappa_at(1) == 0.3 and ap.kappa_at(2) == 0.7
    assert ap.delta == pytest.approx(0.4) and ap.mean == pytest.approx(0.5)


def test_negative_kappa_needs_flag():
    with pytest.raises(ValueError):
        AltParams(-0.1, 0.5)
    assert AltParams(-0.1, 0.5, allow_negative=True).kappa1 == -0.1


def test_degenerate_alternation_is_standard_map():
    ap = AltParams(0.6, 0.6)
    p = q = StdPoint(1.3, 0.4)
    for n in range(200):
        p = step_alt(p, n, ap)
        q = step_std(q, 0.6, 0.0)
        assert (p.x, p.y) == (q.x, q.y)


def test_zero_kicks_shear_and_fixed_point():
    p = step_alt(StdPoint(1.0, 0.25), 0, AltParams(0.0, 0.0))
    assert (p.x, p.y) == (1.25, 0.25)
    for n in range(4):
        p = step_alt(StdPoint(0.0, 0.0), n, AltParams(0.2, 0.9))
        assert (p.x, p.y) == (0.0, 0.0)


def _two_step(p, ap):
    # explicit composition: kappa2 kick then kappa1 kick
    y1 = p.y - ap.kappa2 * math.sin(p.x)
    x1 = wrap_angle(p.x + y1)
    y2 = y1 - ap.kappa1 * math.sin(x1)
    return StdPoint(wrap_angle(x1 + y2), y2)


def test_parity_exactness():
    ap = AltParams(0.35, 0.8)
    p = q = StdPoint(2.1, -0.3)
    for m in range(500):
        p = step_alt(step_alt(p, 2 * m, ap), 2 * m + 1, ap)
        q = _two_step(q, ap)
        assert (p.x, p.y) == (q.x, q.y)


def test_double_step_vs_alt_composition():
    p = StdPoint(0.9, 0.2)
    ap = AltParams(0.4, 0.0)
    # first kick kappa1, second kick 0: start at an odd index
    q = step_alt(step_alt(p, 1, ap), 2, ap)
    r = double_step_reduced(p, 0.4)
    assert abs(q.x - r.x) < 1e-14 and q.y == r.y


def test_conjugacy_to_rescaled_standard_map():
    k1 = KAPPA_C / 2
    p = StdPoint(1.0, 0.3)
    X, Y = 1.0, 0.6
    worst = 0.0
    for _ in range(1000):
        p = double_step_reduced(p, k1)
        X, Y = step_std_unwrapped(X, Y, 2 * k1)
        X = float(wrap_angle(X))
        worst = max(worst, abs(math.remainder(p.x - X, TWO_PI)), abs(2 * p.y - Y))
    assert worst <= 1e-12


def test_exchange_symmetry_orbits():
    ap = AltParams(0.25, 0.9)
    p = StdPoint(0.7, 0.1)
    x1, y1 = alt_orbit(p, ap, 300, n0=1)
    x2, y2 = alt_orbit(p, ap.swapped(), 300, n0=0)
    assert np.array_equal(x1, x2) and np.array_equal(y1, y2)


def test_exchange_symmetry_fractions():
    grid, crit = fig5_grid(20, 20)
    crit = EscapeCriterion(crit.y_m, 1, 3000)
    ap = AltParams(0.5, 1.1)
    a = escape_fraction(ap, grid, crit, n0=1)
    b = escape_fraction(ap.swapped(), grid, crit, n0=0)
    assert a == b
    assert np.array_equal(escape_steps(ap, grid, crit, n0=1), escape_steps(ap.swapped(), grid, crit, n0=0))


def test_kernel_matches_python_orbit():
    grid = Grid2D((0.0, TWO_PI), (0.0, 0.6), 4, 3)
    crit = EscapeCriterion(0.6, 1, 2000)
    ap = AltParams(0.9, 1.3)
    hits = escape_steps(ap, grid, crit, two_sided=True)
    xs, ys = grid.arrays()
    for x0, y0, h in zip(xs, ys, hits):
        _, oy = alt_orbit(StdPoint(x0, y0), ap, crit.max_iters)
        esc = np.nonzero((oy >= crit.y_upper) | (oy <= crit.y_lower))[0]
        assert h == (esc[0] if esc.size else -1)


def test_escape_fraction_zero_kicks():
    grid, crit = fig5_grid(10, 10)
    assert escape_fraction(AltParams(0.0, 0.0), grid, crit) == 0.0


def test_seed_band_checked():
    grid = Grid2D((0.0, TWO_PI), (0.0, 2.0), 3, 3)
    with pytest.raises(ValueError):
        escape_fraction(AltParams(0.1, 0.2), grid, EscapeCriterion(1.0))


def test_criterion_thresholds():
    c = EscapeCriterion(math.pi / 5, 2, 10)
    assert c.y_upper == pytest.approx(math.pi / 5 + 4 * math.pi)
    assert c.y_lower == pytest.approx(-4 * math.pi)
    with pytest.raises(ValueError):
        EscapeCriterion(1.0, 0, 10)
    with pytest.raises(ValueError):
        EscapeCriterion(1.0, 1, -5)


def test_criterion_monotonicity():
    grid = Grid2D((0.0, TWO_PI), (0.0, 3 * math.pi / 5), 12, 12)
    ym = 3 * math.pi / 5
    for k1, k2 in [(0.0, 0.45), (0.0, 0.55), (0.3, 0.8), (0.6, 0.95), (0.9, 1.0), (1.0, 1.1)]:
        ap = AltParams(k1, k2)
        flags = [has_global_transport(ap, grid, EscapeCriterion(ym, 1, m)) for m in (500, 2000, 8000)]
        assert flags == sorted(flags)
        by_ell = [has_global_transport(ap, grid, EscapeCriterion(ym, ell, 8000)) for ell in (1, 2, 3)]
        assert by_ell == sorted(by_ell, reverse=True)


def test_transport_above_critical():
    grid, crit = fig7_grid()
    assert has_global_transport(AltParams(1.2, 1.2), grid, crit)


@pytest.mark.slow
def test_no_transport_inside_horn():
    grid, crit = fig7_grid()
    assert not has_global_transport(AltParams(0.5, 0.5), grid, crit)


def test_bisection_and_censoring():
    assert _bisect_transport(lambda k: k >= 0.3, 0.0, 1.0, 1e-3, 5)[4] is None
    lo, hi, n, mono, why = _bisect_transport(lambda k: k >= 0.3, 0.0, 1.0, 1e-3, 5)
    assert lo < 0.3 <= hi and hi - lo <= 1e-3 and mono
    assert _bisect_transport(lambda k: False, 0.0, 1.0, 1e-3, 5)[4] is not None
    assert _bisect_transport(lambda k: True, 0.0, 1.0, 1e-3, 5)[4] is not None
    assert not _bisect_transport(lambda k: 0.2 <= k < 0.5 or k > 0.9, 0.0, 1.0, 1e-3, 11)[3]


def test_horn_boundary_censored_cell():
    grid = Grid2D((0.0, TWO_PI), (0.0, 1.0), 2, 2)
    cells = horn_boundary([0.0], EscapeCriterion(1.0, 1, 10), grid, kappa2_max=0.2)
    assert cells[0].censored and math.isnan(cells[0].kappa2_min)
    with pytest.raises(ValueError):
        horn_boundary([1.5], EscapeCriterion(1.0, 1, 10), grid)


def test_horn_boundary_short_run():
    # a short criterion gives a boundary above the asymptotic one, inside the bracket
    grid, _ = fig7_grid(20, 20)
    crit = EscapeCriterion(3 * math.pi / 5, 1, 20_000)
    cell = horn_boundary([0.0], crit, grid, tol=1e-2)[0]
    assert cell.censored is None
    assert KAPPA_C / 2 - 0.02 < cell.kappa2_min < 0.7
    assert cell.hi - cell.lo <= 1e-2


def test_sweep_grid_payload():
    g = SweepGrid({"a": [0.1, 0.2], "b": [1, 2, 3]})
    assert g.shape == (2, 3) and g.size == 6
    assert g.cells()[1] == {"a": 0.1, "b": 2.0}
    with pytest.raises(ValueError):
        g.validate()
    g.payload = list(range(6))
    g.validate()
