import itertools
import math

import numpy as np
import pytest

from dioph import lattice_dyn as ld
from dioph.dioph_matrix import RealMatrix
from dioph.errors import ValidationError

from conftest import PHI_STR

PHI = float(np.float64(1.6180339887498949))


def brute_shortest(basis, radius=None):
    """Independent oracle: complete coefficient box straight off the raw basis
    (|c_i| <= ||row_i(B^-1)||_1 * R), no reduction step anywhere."""
    d = basis.shape[0]
    if radius is None:
        radius = float(np.abs(basis).max(axis=0).min())  # a column's sup norm
    inv = np.linalg.inv(basis)
    bounds = np.floor(np.abs(inv).sum(axis=1) * radius + 1e-9).astype(int)
    best = None
    for c in itertools.product(*[range(-b, b + 1) for b in bounds]):
        if all(v == 0 for v in c):
            continue
        v = basis @ np.array(c, dtype=float)
        n = np.abs(v).max()
        if best is None or n < best:
            best = n
    return best


def random_unimodular(rng, d):
    """Integer shear products (det = 1) times a det-1 diagonal."""
    U = np.eye(d)
    for _ in range(4):
        i, j = rng.integers(0, d, size=2)
        if i != j:
            S = np.eye(d)
            S[i, j] = float(rng.integers(-2, 3))
            U = U @ S
    scales = np.exp(rng.uniform(-0.6, 0.6, size=d))
    scales /= scales.prod() ** (1.0 / d)
    return (U * scales[None, :])


def test_from_matrix_structure():
    A = RealMatrix.scalar(PHI_STR, 64)
    L = ld.from_matrix(A)
    assert np.allclose(L.basis, np.array([[1.0, float(A.entry(0, 0))], [0.0, 1.0]]))
    assert abs(L.det_abs - 1.0) < 1e-12
    Z = ld.from_matrix(np.zeros((2, 1)))
    assert np.allclose(Z.basis, np.eye(3))


def test_apply_flow():
    Z = ld.from_matrix(np.zeros((1, 1)))
    assert np.allclose(ld.apply_flow(Z, 0.0, 1, 1).basis, Z.basis)
    back = ld.apply_flow(ld.apply_flow(Z, 1.7, 1, 1), -1.7, 1, 1)
    assert np.allclose(back.basis, Z.basis, atol=1e-13)
    g = ld.apply_flow(Z, math.log(2), 1, 1)
    assert np.allclose(g.basis, np.diag([2.0, 0.5]))


def test_shortest_vector_examples():
    for d in (2, 3, 4):
        L = ld.LatticeBasis.from_columns(np.eye(d))
        v, c, n = ld.shortest_vector(L)
        assert n == pytest.approx(1.0)
    Lphi = ld.from_matrix(RealMatrix.scalar(PHI_STR, 64))
    assert ld.shortest_vector(Lphi)[2] == pytest.approx(1.0)
    D = ld.LatticeBasis.from_columns(np.diag([2.0, 0.5]))
    assert ld.shortest_vector(D)[2] == pytest.approx(0.5)


def test_shortest_vector_against_oracle():
    rng = np.random.default_rng(8)
    checked = 0
    for trial in range(60):
        d = int(rng.integers(2, 5))
        B = random_unimodular(rng, d)
        inv = np.linalg.inv(B)
        radius = float(np.abs(B).max(axis=0).min())
        box = np.prod(2 * np.floor(np.abs(inv).sum(axis=1) * radius) + 1)
        if box > 2e5:
            continue  # keep the pure-python oracle honest but affordable
        L = ld.LatticeBasis.from_columns(B)
        n = ld.shortest_vector(L)[2]
        oracle = brute_shortest(B)
        assert n == pytest.approx(oracle, rel=1e-9), trial
        checked += 1
    assert checked >= 30


def test_successive_minima_examples():
    for d in (2, 3):
        L = ld.LatticeBasis.from_columns(np.eye(d))
        lengths, _, _ = ld.successive_minima(L, d)
        assert np.allclose(lengths, 1.0)
    D = ld.LatticeBasis.from_columns(np.diag([2.0, 0.5]))
    lengths, _, _ = ld.successive_minima(D, 2)
    assert lengths == pytest.approx([0.5, 2.0])


def test_successive_minima_independence():
    # lambda_2 must be linearly independent from lambda_1's vector
    rng = np.random.default_rng(21)
    for _ in range(20):
        B = random_unimodular(rng, 3)
        L = ld.LatticeBasis.from_columns(B)
        lengths, vecs, coeffs = ld.successive_minima(L, 3)
        assert lengths[0] <= lengths[1] <= lengths[2]
        assert ld._exact_rank([c for c in coeffs]) == 3


def test_polar_lattice():
    for d in (2, 3):
        L = ld.LatticeBasis.from_columns(np.eye(d))
        assert np.allclose(ld.polar_lattice(L).basis, np.eye(d))
    D = ld.LatticeBasis.from_columns(np.diag([2.0, 0.5]))
    assert np.allclose(ld.polar_lattice(D).basis, np.diag([0.5, 2.0]))
    rng = np.random.default_rng(4)
    B = random_unimodular(rng, 3)
    L = ld.LatticeBasis.from_columns(B)
    assert np.allclose(ld.polar_lattice(ld.polar_lattice(L)).basis, L.basis, atol=1e-10)


def test_mahler_band():
    assert ld.mahler_duality_check(ld.LatticeBasis.from_columns(np.eye(3))) == pytest.approx(1.0)
    D = ld.LatticeBasis.from_columns(np.diag([2.0, 0.5]))
    assert ld.mahler_duality_check(D) == pytest.approx(1.0)
    rng = np.random.default_rng(31)
    for _ in range(100):
        d = int(rng.integers(2, 5))
        L = ld.LatticeBasis.from_columns(random_unimodular(rng, d))
        prod = ld.mahler_duality_check(L)
        assert 1.0 - 1e-9 <= prod <= math.factorial(d) + 1e-9


def test_flow_profile_zero_matrix():
    # A = 0: the contracting block vector e_{m+1} rules, Delta(t) = t/n
    prof = ld.flow_profile(np.zeros((1, 1)), 3.0, 0.05)
    expect = prof.times / 1.0
    assert np.allclose(prof.delta_values, expect, atol=1e-9)
    assert prof.minima_times == []


def test_flow_profile_phi_balance_points():
    A = RealMatrix.scalar(PHI_STR, 64)
    prof = ld.flow_profile(A, 10.0, 0.05)
    # oracle: balance times (1/2) log(q / |q phi - p|) of the convergents
    fib = [(1, 2), (2, 3), (3, 5), (5, 8), (8, 13), (13, 21), (21, 34), (34, 55),
           (55, 89), (89, 144), (144, 233), (233, 377), (377, 610), (610, 987),
           (987, 1597), (1597, 2584), (2584, 4181), (4181, 6765), (6765, 10946),
           (10946, 17711)]
    oracle = [0.5 * math.log(q / abs(q * PHI - p)) for q, p in fib]
    oracle = [t for t in oracle if 0.2 < t < 9.95]
    assert len(prof.minima_times) == len(oracle)
    for t_flag, t_oracle in zip(prof.minima_times, oracle):
        assert abs(t_flag - t_oracle) <= 0.05


def test_flow_profile_slopes():
    A = RealMatrix.scalar(PHI_STR, 64)
    prof = ld.flow_profile(A, 10.0, 0.02)
    slopes = ld.segment_slopes(prof)
    assert len(slopes) >= 10
    for s in slopes:
        assert min(abs(s - 1.0), abs(s + 1.0)) < 0.02
    # m=2, n=1 flow: slopes in {-1/2, +1}
    A2 = RealMatrix.from_rows([["0.7548776662466927"], ["0.5698402909980532"]], 64)
    prof2 = ld.flow_profile(A2, 8.0, 0.02)
    for s in ld.segment_slopes(prof2):
        assert min(abs(s - 1.0), abs(s + 0.5)) < 0.02


def test_flow_weighted_minima_coincide():
    A = RealMatrix.scalar(PHI_STR, 64)
    m = n = 1
    for sigma in (m / n + 0.5, m / n + 1.0):
        prof = ld.flow_profile(A, 10.0, 0.05, sigma=sigma)
        assert prof.r_slope == pytest.approx(ld.theta_sigma(sigma, m, n))
        assert len(prof.weighted_minima_times) == len(prof.minima_times)
        for a, b in zip(prof.weighted_minima_times, prof.minima_times):
            assert abs(a - b) <= 0.05


def test_badly_approximable_vs_liouville_growth():
    # Dani correspondence sanity: Delta bounded for phi, growing for Liouville
    from dioph.dioph_matrix import liouville_number
    A = RealMatrix.scalar(PHI_STR, 64)
    prof = ld.flow_profile(A, 12.0, 0.05, minima_count=1)
    assert prof.delta_values.max() < 1.0
    L = RealMatrix.scalar(liouville_number(precision_bits=128), 128)
    prof2 = ld.flow_profile(L, 12.0, 0.1, minima_count=1, max_enum=8_000_000)
    assert prof2.delta_values.max() > 2.0


def test_theta_sigma_formula():
    assert ld.theta_sigma(3.0, 1, 1) == pytest.approx((3 - 1) / (4 * 1 * 1))
    assert ld.theta_sigma(2.0, 2, 3) == pytest.approx((3 * 2 - 2) / (3 * 2 * 3))


def test_validation():
    with pytest.raises(ValidationError):
        ld.LatticeBasis.from_columns(np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        ld.flow_profile(np.zeros((1, 1)), -1.0, 0.1)
    Z = ld.from_matrix(np.zeros((1, 1)))
    with pytest.raises(ValidationError):
        ld.apply_flow(Z, 1.0, 2, 2)
