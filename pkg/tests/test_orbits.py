import math

import numpy as np
import pytest

from sctransport.core import TWO_PI, SCState, step_sc
from sctransport.orbits import (
    OrbitNotFound,
    SPOState,
    build_spo_seed,
    continue_branch,
    find_symmetric_orbit,
    flow_jacobian,
    greene_residue,
    newton_spo,
    orbit_of_kind,
    permute_orbit,
    replicate_orbit,
    sc_step_jacobian,
    sc_step_lift,
    spo_at,
)

ALPHA = 0.01


@pytest.fixture(scope="module")
def spo3():
    return spo_at(0.1, ALPHA * 0.1, 1, 3, "elliptic")


def test_integrable_lattice():
    o = find_symmetric_orbit(0.0, 0.0, 1, 3)
    assert np.allclose(np.diff(o.x), TWO_PI / 3, atol=1e-13)
    assert np.allclose(o.y, TWO_PI / 3, atol=1e-13)
    assert o.residue == pytest.approx(0.0, abs=1e-14)


def test_fixed_point_residues():
    e = find_symmetric_orbit(0.5, 0.0, 0, 1, "x0")
    h = find_symmetric_orbit(0.5, 0.0, 0, 1, "xpi")
    assert e.residue == pytest.approx(0.125, abs=1e-14)
    assert h.residue == pytest.approx(-0.125, abs=1e-14)
    assert e.kind == "elliptic" and h.kind == "hyperbolic"


def test_period_three_both_lines():
    for kind in ("elliptic", "hyperbolic"):
        o = orbit_of_kind(0.1, 0.0, 1, 3, kind)
        assert o.closure() < 1e-12
        assert o.kind == kind


def test_residue_matches_jacobian_product():
    o = find_symmetric_orbit(0.3, 0.2, 1, 3)
    assert greene_residue(o.x, 0.3, 0.2) == o.residue


def test_bad_rotation():
    with pytest.raises(ValueError):
        find_symmetric_orbit(0.1, 0.0, 2, 4)
    with pytest.raises(OrbitNotFound):
        find_symmetric_orbit(0.1, 0.0, 1, 3, "h0", width=1e-3)


def test_seed_is_periodic_at_zero_coupling():
    o = find_symmetric_orbit(0.2, 0.0, 1, 3)
    s = build_spo_seed(o, 0.2, 0.0)
    assert s.closure_residual() < 1e-13
    r = newton_spo(s, 0.0)
    assert np.array_equal(r.vector(), s.vector()) and r.omega_solved == 0.0


def test_sequential_shift_at_zero_coupling():
    o = find_symmetric_orbit(0.2, 0.0, 1, 3)
    s = build_spo_seed(o, 0.2, 0.0)
    s1 = step_sc(s.state, s.params)
    assert np.allclose(s1.x[:2], np.mod(o.x[1:], TWO_PI), atol=1e-14)


def test_seed_eta_small():
    o = find_symmetric_orbit(0.2, 0.0, 1, 3)
    s = build_spo_seed(o, 0.2, 0.0)
    assert abs(np.sum(np.sin(s.state.x - s.state.theta))) < 1e-12


def test_step_lift_matches_step_sc():
    rng = np.random.default_rng(5)
    z = np.concatenate([np.column_stack([rng.uniform(0, 6, 4), rng.uniform(-1, 1, 4)]).ravel(), [0.3, 0.8]])
    g = np.full(4, 0.02)
    w = sc_step_lift(z, g, 0.01)
    s = step_sc(SCState.from_vector(z), SPOState(SCState.from_vector(z), 0.02, 0.01, 1, 3).params)
    assert np.allclose(np.mod(w[0:-2:2], TWO_PI), s.x, atol=1e-14)
    assert np.allclose(w[1:-2:2], s.y, atol=1e-15)
    assert w[-2] == s.kappa


def test_jacobian_against_differences():
    rng = np.random.default_rng(2)
    z = np.concatenate([np.column_stack([rng.uniform(0, 6, 3), rng.uniform(-1, 1, 3)]).ravel(), [0.3, 0.8]])
    g = np.full(3, 0.05)
    w, M = flow_jacobian(z, g, 0.02, 3)
    h = 1e-6
    num = np.empty_like(M)
    for i in range(z.size):
        dz = np.zeros(z.size)
        dz[i] = h
        num[:, i] = (flow_jacobian(z + dz, g, 0.02, 3)[0] - flow_jacobian(z - dz, g, 0.02, 3)[0]) / (2 * h)
    dO = (flow_jacobian(z, g, 0.02 + h, 3)[0] - flow_jacobian(z, g, 0.02 - h, 3)[0]) / (2 * h)
    num[:, -1] = dO
    assert np.max(np.abs(M - num)) < 1e-7
    w1, J1 = sc_step_jacobian(z, g, 0.02)
    assert np.array_equal(w1, sc_step_lift(z, g, 0.02))


def test_newton_closure(spo3):
    assert spo3.closure_residual() <= 1e-12
    assert spo3.kappa0 == pytest.approx(0.1, abs=1e-15) and abs(spo3.state.theta) < 1e-15


def test_branch_smooth_and_converged():
    o = orbit_of_kind(0.1, 0.0, 1, 3, "hyperbolic")
    br = continue_branch(build_spo_seed(o, 0.1, 0.0), 2e-3, step=2.5e-4)
    assert br.terminated is None
    assert br.gammas()[-1] == pytest.approx(2e-3)
    for p in br.points:
        assert p.spo.closure_residual() <= 1e-12
    z = np.array([p.spo.vector() for p in br.points])
    steps = np.linalg.norm(np.diff(z, axis=0), axis=1) / np.diff(br.gammas())
    assert steps.max() < 5 * np.median(steps) + 1e-9
    # the gamma -> 0 end reproduces the seed
    assert np.array_equal(br.points[0].spo.vector(), build_spo_seed(o, 0.1, 0.0).vector())


def test_residue_sign_matches_type():
    for kind, sign in (("elliptic", 1), ("hyperbolic", -1)):
        o = orbit_of_kind(0.05, 0.0, 1, 3, kind)
        assert np.sign(o.residue) == sign
        # elliptic sits on phi = 0, hyperbolic on phi = pi / 3 (mod 2 pi / 3)
        ph = np.mod(o.x[0], TWO_PI / 3)
        target = 0.0 if kind == "elliptic" else math.pi / 3
        assert min(abs(ph - target), abs(ph - target - TWO_PI / 3)) < 0.05


def test_other_rotations_solve():
    for q in (2, 6):
        for kind in ("elliptic", "hyperbolic"):
            s = spo_at(0.1, 1e-3, 1, q, kind)
            assert s.closure_residual() <= 1e-12


def test_permutation_identity_and_cyclic(spo3):
    same = permute_orbit(spo3, [0, 1, 2])
    assert np.array_equal(same.vector(), spo3.vector())
    cyc = permute_orbit(spo3, [1, 2, 0])
    assert cyc.closure_residual() <= 1e-12
    assert np.allclose(cyc.kappa_trace(), spo3.kappa_trace(), atol=1e-15)
    with pytest.raises(ValueError):
        permute_orbit(spo3, [0, 0, 1])


def test_replication(spo3):
    assert np.array_equal(replicate_orbit(spo3, 0).vector(), spo3.vector())
    r1 = replicate_orbit(spo3, 1)
    assert r1.state.N == 6 and r1.gamma == spo3.gamma / 2
    assert np.max(np.abs(r1.kappa_trace() - spo3.kappa_trace())) <= 1e-14
    r3 = replicate_orbit(spo3, 3)
    assert r3.state.N == 24
    assert r3.closure_residual() <= 1e-12


def test_random_permutation_of_replicated(spo3):
    r = replicate_orbit(spo3, 1)
    sigma = np.random.default_rng(4).permutation(6)
    assert permute_orbit(r, sigma).closure_residual() <= 1e-12


def test_to_dict_full_precision(spo3):
    d = spo3.to_dict()
    assert d["q"] == 3 and len(d["x"]) == 3
    assert d["omega_solved"] == spo3.omega_solved
