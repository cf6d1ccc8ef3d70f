from math import pi

import numpy as np
import pytest
from scipy.linalg import expm

from nilflow import h0, numlin, psym
from nilflow.errors import InvalidChartPoint, ZeroVector
from nilflow.h0 import ChartModel, ChartPoint

from _families import E, jordan, rational_array


@pytest.fixture(scope="module")
def m2():
    return ChartModel.from_generators([[[1, 1], [0, 1]]])


@pytest.fixture(scope="module")
def m3():
    return ChartModel.from_nilpotents([jordan(3)], [rational_array(np.diag([2, 0, -2]))])


@pytest.fixture(scope="module")
def block():
    g1 = numlin.eye(4) + E(4, 1, 2)
    g2 = numlin.eye(4) + E(4, 3, 4)
    return ChartModel.from_generators([g1, g2])


def zero_model(r=2):
    z = numlin.zeros((r, r))
    return ChartModel.from_nilpotents([z], [z])


def tangent_norms(model, theta, L):
    # closed form: d_theta H = X H + H X^T with X = N / 2pi; L d_L H = U Y D U^T
    N = numlin.to_float(model.N[0])
    Y = numlin.to_float(model.Y[0])
    U = expm(theta * N / (2 * pi))
    D = expm(np.log(L) * Y)
    H = U @ D @ U.T
    X = N / (2 * pi)
    dt = X @ H + H @ X.T
    dl = U @ Y @ D @ U.T

    def n2(A):
        B = np.linalg.solve(H, A)
        return np.trace(B @ B)

    return L**2 * n2(dt), n2(dl)


# --- evaluation ------------------------------------------------------------


def test_eval_examples(m2):
    assert np.allclose(h0.eval_h0(m2, ChartPoint(0.0, 10.0)), np.diag([10, 0.1]), atol=1e-13)
    twisted = psym.act(numlin.to_float(m2.gammas[0]), np.diag([10.0, 0.1]))
    assert np.allclose(h0.eval_h0(m2, ChartPoint(2 * pi, 10.0)), twisted, atol=1e-12)
    assert np.allclose(h0.eval_h0(m2, ChartPoint(pi, 10.0)), [[10.025, 0.05], [0.05, 0.1]], atol=1e-12)


def test_eval_det_one(m3):
    rng = np.random.default_rng(0)
    for _ in range(10):
        H = h0.eval_h0(m3, ChartPoint(rng.uniform(0, 2 * pi), rng.uniform(2, 1e3)))
        assert np.linalg.det(H) == pytest.approx(1.0, rel=1e-10)


def test_eval_ignores_extra_coordinates(m2):
    a = h0.eval_h0(m2, ChartPoint((1.0, 5.0, -3.0), (20.0, 3.0, 7.0)))
    b = h0.eval_h0(m2, ChartPoint(1.0, 20.0))
    assert np.array_equal(a, b)


def test_chart_point_validation(block):
    with pytest.raises(InvalidChartPoint):
        ChartPoint(0.0, 0.5)
    with pytest.raises(InvalidChartPoint):
        h0.eval_h0(block, ChartPoint(0.0, 10.0))


def test_conformal_representative_distance(m2):
    p = ChartPoint(1.3, 50.0)
    d = psym.dist(h0.eval_h0(m2, p), h0.eval_h0_conformal(m2, p))
    assert d == pytest.approx(np.log(2 * pi) * np.sqrt(2), rel=1e-9)


# --- equivariance ----------------------------------------------------------


def test_equivariance(m2, m3, block):
    for model in (m2, m3):
        assert h0.equivariance_residual(model, h0.sample_points(model, 6, 6)) <= 1e-10
    pts = h0.sample_points(block, 4, 4) + h0.sample_points(block, 4, 4, i=1)
    assert h0.equivariance_residual(block, pts) <= 1e-10


def test_equivariance_wrong_twist(m2):
    g = numlin.to_float(m2.gammas[0])
    assert h0.equivariance_residual(m2, h0.sample_points(m2, 4, 4), twists=[g @ g]) > 1e-3


def test_equivariance_exact_spot_check(m2):
    U = numlin.expm(m2.N[0])
    assert np.array_equal(U, m2.gammas[0])


# --- energy density --------------------------------------------------------


def test_density_closed_form(m2):
    target = 2 + 1 / (2 * pi**2)
    assert target == pytest.approx(2.050660, abs=1e-6)
    et, el = tangent_norms(m2, 0.7, 30.0)
    assert et + el == pytest.approx(target, rel=1e-12)
    assert h0.transversal_energy_density(m2, 0, ChartPoint(0.7, 30.0)) == pytest.approx(target, rel=1e-8)


def test_density_matches_closed_form_r3(m3):
    for theta, L in [(0.0, 10.0), (2.0, 300.0), (5.5, 4000.0)]:
        ref = sum(tangent_norms(m3, theta, L))
        assert h0.transversal_energy_density(m3, 0, ChartPoint(theta, L)) == pytest.approx(ref, rel=1e-7)


def test_density_constant(m2, m3):
    for model in (m2, m3):
        e = np.array([h0.transversal_energy_density(model, 0, p) for p in h0.sample_points(model)])
        assert e.std() / e.mean() < 1e-6


def test_density_zero_model():
    assert h0.transversal_energy_density(zero_model(), 0, ChartPoint(1.0, 10.0)) == 0.0


# --- exponents and decay ---------------------------------------------------


def test_exponents_r2(m2):
    assert h0.asymptotic_exponents(m2, [1, 0])[0] == pytest.approx(1.0, abs=0.01)
    assert h0.asymptotic_exponents(m2, [0, 1])[0] == pytest.approx(-1.0, abs=0.01)
    assert h0.asymptotic_exponents(m2, [1, 1])[0] == pytest.approx(1.0, abs=0.01)
    with pytest.raises(ZeroVector):
        h0.asymptotic_exponents(m2, [0, 0])


def test_exponents_match_weights(m3, block):
    for model in (m3, block):
        for j in range(model.r):
            v = np.eye(model.r)[j]
            got = h0.asymptotic_exponents(model, v)
            assert np.allclose(got, model.weights[:, j], atol=0.01)


def test_nilpotent_decay_r2(m2):
    pts = [ChartPoint(0.0, L) for L in np.geomspace(10, 1e4, 15)]
    for p in pts:
        assert h0.nilpotent_decay(m2, 0, [p]) == pytest.approx(1.0, rel=1e-12)


def test_nilpotent_decay_bounded(m3):
    C = h0.nilpotent_decay(m3, 0, h0.sample_points(m3))
    assert np.isfinite(C) and C < 10
    assert h0.nilpotent_decay(zero_model(), 0, h0.sample_points(zero_model(), 3, 3)) == 0.0


# --- derivative decomposition -----------------------------------------------


def test_dh0_parts_r2(m2):
    for L in np.geomspace(10, 1e4, 7):
        parts = h0.dh0_parts(m2, ChartPoint(0.4, L))
        assert parts.y_part <= 2.1 and parts.n_part <= 2.1
        assert parts.residual < 1e-6


def test_dh0_zero_model():
    assert h0.dh0_parts(zero_model(), ChartPoint(0.0, 10.0)).n_part == 0.0


# --- norm law --------------------------------------------------------------


def test_norm_law_r2(m2):
    v = h0.section_norm_law(m2, 0, [1, 0])
    assert v.passed and not v.vacuous
    assert v.lowered_slope == pytest.approx(-1.0, abs=0.01)
    assert h0.section_norm_law(m2, 0, [0, 1]).vacuous


def test_norm_law_r3_drop(m3):
    v = h0.section_norm_law(m3, 0, [1, 0, 0])
    assert v.passed
    assert v.drop == pytest.approx(2.0, abs=0.01)


def test_section_nilpotent_convention(m2):
    assert np.array_equal(m2.section_nilpotent(0), -numlin.to_float(m2.N[0]).T)


def test_cross_terms_block(block):
    assert np.all(h0.cross_term_exponents(block) <= 0)
