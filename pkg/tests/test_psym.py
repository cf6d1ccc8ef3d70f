import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm, fractional_matrix_power, sqrtm

from nilflow import psym
from nilflow.errors import DetNotOne, NotPositiveDefinite

E = np.e


def random_point(rng, r=3, complex_=False):
    A = rng.normal(size=(r, r))
    if complex_:
        A = A + 1j * rng.normal(size=(r, r))
    H = A @ A.conj().T + 0.5 * np.eye(r)
    return psym.normalize_det(H)


def random_sl(rng, r=3):
    g = rng.normal(size=(r, r))
    d = np.linalg.det(g)
    if d < 0:
        g[0] *= -1
        d = -d
    return g / d ** (1 / r)


def random_tangent(rng, H):
    B = rng.normal(size=H.shape)
    B = B + B.T
    # project onto tr(H^{-1} A) = 0
    return B - np.trace(np.linalg.solve(H, B)) / H.shape[0] * H


def curve_length(path, a=0.0, b=1.0, h=1e-5):
    def speed(t):
        H = path(t)
        dH = (path(t + h) - path(t - h)) / (2 * h)
        X = np.linalg.solve(H, dH)
        return np.sqrt(np.real(np.trace(X @ X)))

    return quad(speed, a, b, epsabs=1e-11, epsrel=1e-11, limit=200)[0]


def test_act_unipotent_on_identity():
    out = psym.act(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2))
    assert np.allclose(out, [[2, 1], [1, 1]], atol=1e-14)


def test_act_is_a_group_action():
    rng = np.random.default_rng(0)
    H = random_point(rng)
    g1, g2 = random_sl(rng), random_sl(rng)
    lhs = psym.act(g1 @ g2, H)
    rhs = psym.act(g1, psym.act(g2, H))
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)
    assert np.linalg.det(lhs) == pytest.approx(1.0, abs=1e-12)


def test_act_rejects_det():
    with pytest.raises(DetNotOne):
        psym.act(2 * np.eye(2), np.eye(2))


def test_as_point_validation():
    with pytest.raises(DetNotOne):
        psym.as_point(np.diag([2.0, 1.0]))
    with pytest.raises(NotPositiveDefinite):
        psym.as_point(np.diag([-1.0, -1.0]))


def test_riem_inner_examples():
    A = np.diag([1.0, -1.0])
    assert psym.riem_inner(np.eye(2), A, A) == pytest.approx(2.0)
    rng = np.random.default_rng(1)
    H = random_point(rng)
    A, B = random_tangent(rng, H), random_tangent(rng, H)
    assert psym.riem_inner(H, A, B) == pytest.approx(psym.riem_inner(H, B, A))
    assert psym.riem_inner(H, A, A) > 0
    g = random_sl(rng)
    moved = psym.riem_inner(psym.act(g, H), g @ A @ g.T, g @ B @ g.T)
    assert moved == pytest.approx(psym.riem_inner(H, A, B), rel=1e-9)


def test_exp_examples():
    out = psym.exp_map(np.eye(2), np.diag([1.0, -1.0]))
    assert np.allclose(out, np.diag([E, 1 / E]), atol=1e-14)
    H = random_point(np.random.default_rng(2))
    assert np.allclose(psym.log_map(H, H), 0, atol=1e-12)


def test_exp_matches_scipy_formula():
    rng = np.random.default_rng(3)
    H = random_point(rng)
    A = random_tangent(rng, H)
    S = sqrtm(H).real
    Si = np.linalg.inv(S)
    ref = S @ expm(Si @ A @ Si) @ S
    assert np.allclose(psym.exp_map(H, A), ref, rtol=1e-10)


def test_exp_log_inverse():
    rng = np.random.default_rng(4)
    for _ in range(10):
        H, K = random_point(rng), random_point(rng)
        assert np.allclose(psym.exp_map(H, psym.log_map(H, K)), K, atol=1e-9)


def test_exp_naturality():
    rng = np.random.default_rng(5)
    H = random_point(rng)
    A = random_tangent(rng, H)
    g = random_sl(rng)
    lhs = psym.exp_map(psym.act(g, H), g @ A @ g.T)
    rhs = psym.act(g, psym.exp_map(H, A))
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_dist_zero_and_isometry():
    rng = np.random.default_rng(6)
    H1, H2 = random_point(rng), random_point(rng)
    assert psym.dist(H1, H1) == pytest.approx(0.0, abs=1e-12)
    g = random_sl(rng)
    assert psym.dist(psym.act(g, H1), psym.act(g, H2)) == pytest.approx(psym.dist(H1, H2), rel=1e-9)


def test_dist_diag_against_geodesic_speed():
    target = np.diag([E, 1 / E])
    assert psym.dist(np.eye(2), target) == pytest.approx(np.sqrt(2), abs=1e-14)
    length = curve_length(lambda t: expm(np.diag([t, -t])))
    assert length == pytest.approx(np.sqrt(2), abs=1e-8)


def test_dist_random_against_geodesic_speed():
    rng = np.random.default_rng(7)
    H1, H2 = random_point(rng), random_point(rng)
    S = sqrtm(H1).real
    Si = np.linalg.inv(S)
    M = Si @ H2 @ Si

    def path(t):
        return S @ fractional_matrix_power(M, t).real @ S

    assert curve_length(path) == pytest.approx(psym.dist(H1, H2), rel=1e-7)


def test_dist_exceeds_length_of_other_paths():
    # a straight segment is not a geodesic, so it is strictly longer
    H1, H2 = np.eye(2), np.diag([E, 1 / E])
    seg = curve_length(lambda t: (1 - t) * H1 + t * H2)
    assert seg > psym.dist(H1, H2) + 1e-3


def test_endo_norm_examples():
    assert psym.endo_norm(np.eye(2), [[0, 1], [0, 0]]) == pytest.approx(1.0)
    L = 10.0
    H = np.diag([L, 1 / L])
    assert psym.endo_norm(H, [[0, 0], [1, 0]]) == pytest.approx(0.1)
    assert psym.endo_norm(H, [[0, 1], [0, 0]]) == pytest.approx(L)
    M = np.random.default_rng(8).normal(size=(3, 3))
    assert psym.endo_norm(np.eye(3), M) == pytest.approx(np.linalg.norm(M))


def test_section_norm_examples():
    assert psym.section_norm(np.eye(2), [1, 0]) == pytest.approx(1.0)
    assert psym.section_norm(np.diag([10, 0.1]), [1, 0]) == pytest.approx(np.sqrt(10))
    rng = np.random.default_rng(9)
    H = random_point(rng)
    g = random_sl(rng)
    v = rng.normal(size=3)
    moved = psym.section_norm(psym.act(g, H), np.linalg.solve(g.T, v))
    assert moved == pytest.approx(psym.section_norm(H, v), rel=1e-10)


def test_complex_points():
    rng = np.random.default_rng(10)
    H1, H2 = random_point(rng, complex_=True), random_point(rng, complex_=True)
    assert psym.dist(H1, H2) == pytest.approx(psym.dist(H2, H1), rel=1e-10)
    K = psym.exp_map(H1, psym.log_map(H1, H2))
    assert np.allclose(K, H2, atol=1e-9)
