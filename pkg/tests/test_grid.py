import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlicz_heat import grid as G, young as Y
from orlicz_heat.errors import DomainError, NumericError


def gaussian_1d(L=8.0, N=256):
    return G.from_function(lambda x: np.exp(-x ** 2), 1, L, N)


def random_field(rng, dim=1, L=4.0, N=64):
    return G.GridFunction(dim, L, N, rng.normal(size=(N,) * dim))


def test_grid_validation():
    with pytest.raises(DomainError):
        G.GridFunction(4, 1.0, 8, np.zeros((8,) * 4))
    with pytest.raises(DomainError):
        G.GridFunction(1, 1.0, 12, np.zeros(12))
    with pytest.raises(DomainError):
        G.GridFunction(1, 1.0, 8, np.array([0, 1, 2, np.nan, 0, 0, 0, 0.0]))
    with pytest.raises(DomainError):
        G.GridFunction(2, 1.0, 8, np.zeros(8))


def test_lattice_layout():
    u = G.GridFunction(1, 2.0, 8, np.zeros(8))
    assert u.spacing == 0.5
    np.testing.assert_allclose(u.axis(), [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])


def test_indicator_norm():
    u = G.indicator_ball(1.0, 1, 4.0, 256)
    # the closed ball holds 65 lattice points of width 1/32
    measure = u.integral()
    assert measure == pytest.approx(65 / 32, rel=1e-14)
    k = G.luxemburg_norm(u, Y.power(2))
    assert k == pytest.approx(math.sqrt(measure / 2), rel=1e-10)
    assert abs(k - 1.0) < u.spacing


def test_zero_function_has_zero_norm():
    u = G.GridFunction(2, 3.0, 16, np.zeros((16, 16)))
    assert G.luxemburg_norm(u, Y.power(2)) == 0.0
    assert G.sup_norm(u) == 0.0


@pytest.mark.parametrize("spec", ["power:q=2", "explp:p=1", "loglebesgue:q=1,r=2", "sumspace", "linf"])
def test_homogeneity(spec):
    phi = Y.from_spec(spec)
    u = gaussian_1d()
    base = G.luxemburg_norm(u, phi)
    assert G.luxemburg_norm(3.7 * u, phi) == pytest.approx(3.7 * base, rel=1e-8)
    assert G.luxemburg_norm(-3.7 * u, phi) == pytest.approx(3.7 * base, rel=1e-8)


@pytest.mark.parametrize("spec", ["power:q=2", "explp:p=2", "max-power:q=1.5,r=3"])
def test_dilation_divides_norm(spec):
    # Phi_lam(x) = Phi(x / lam): the modular at k equals the modular of Phi at lam * k
    phi = Y.from_spec(spec)
    u = gaussian_1d()
    for lam in (0.5, 2.0):
        assert G.luxemburg_norm(u, Y.dilate(phi, lam)) == pytest.approx(G.luxemburg_norm(u, phi) / lam, rel=1e-8)


def test_sup_norm_examples():
    assert G.sup_norm(G.GridFunction(1, 1.0, 8, np.ones(8))) == 1.0
    for dim in (1, 2, 3):
        kern = G.heat_kernel_samples(1 / (4 * math.pi), dim, 2.0, 16)
        assert G.sup_norm(kern) == pytest.approx(1.0, rel=1e-14)
    u = G.indicator_ball(1.0, 2, 2.0, 32) - 2 * G.indicator_ball(0.5, 2, 2.0, 32)
    # value 1 on the annulus and 1 - 2 = -1 on the inner ball
    assert G.sup_norm(u) == 1.0
    assert G.sup_norm(2 * G.indicator_ball(0.5, 2, 2.0, 32)) == 2.0


def test_modular_examples():
    u = G.indicator_ball(1.0, 1, 4.0, 256)
    assert G.modular(u, Y.power(1), 1.0) == pytest.approx(u.integral(), rel=1e-14)
    assert G.modular(u, Y.linf(), 1.0) == 0.0
    assert G.modular(2.5 * u, Y.linf(), 2.0) == math.inf
    assert G.modular(2.5 * u, Y.linf(), 3.0) == 0.0
    with pytest.raises(DomainError):
        G.modular(u, Y.power(1), 0.0)


def test_modular_against_independent_quadrature():
    # mpmath quad of int (exp(exp(-x^2)/10) - 1) dx over R at 25 digits
    u = gaussian_1d()
    assert G.modular(u, Y.explp(1), 10 * G.sup_norm(u)) == pytest.approx(0.1836862699145488268625335, rel=1e-8)


def test_sup_norm_marker():
    u = gaussian_1d()
    assert G.norm(u, "inf") == G.sup_norm(u)
    assert G.norm(u, Y.power(2)) == G.luxemburg_norm(u, Y.power(2))
    with pytest.raises(ValueError):
        G.norm(u, "two")


def test_norm_attains_modular_one():
    u = gaussian_1d()
    for spec in ["power:q=2", "explp:p=1", "explp:p=2", "loglebesgue:q=1,r=2", "power:q=1.5"]:
        phi = Y.from_spec(spec)
        k = G.luxemburg_norm(u, phi)
        assert G.modular(u, phi, k) == pytest.approx(1.0, abs=1e-6)


def test_linf_norm_is_sup_norm():
    u = gaussian_1d()
    assert G.luxemburg_norm(u, Y.linf()) == pytest.approx(G.sup_norm(u), rel=1e-10)


def test_oversized_data_raises():
    # infinite at every positive argument, so no k brings the modular below 1
    never = Y.from_log_evaluator(lambda x: np.where(x > 0, np.inf, -np.inf), x_infinity=0.0)
    u = gaussian_1d()
    with pytest.raises(NumericError):
        G.luxemburg_norm(u, never)


def test_triangle_inequality_on_random_pairs():
    rng = np.random.default_rng(11)
    phis = [Y.power(2), Y.explp(1), Y.loglebesgue(1, 2)]
    for i in range(200):
        phi = phis[i % 3]
        u, v = random_field(rng), random_field(rng)
        lhs = G.luxemburg_norm(u + v, phi)
        assert lhs <= (G.luxemburg_norm(u, phi) + G.luxemburg_norm(v, phi)) * (1 + 1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), spec=st.sampled_from(["power:q=2", "explp:p=1", "sumspace"]))
def test_monotone_in_pointwise_order(seed, spec):
    rng = np.random.default_rng(seed)
    phi = Y.from_spec(spec)
    v = random_field(rng)
    u = v.with_samples(v.samples * rng.uniform(-1, 1, size=v.samples.shape))
    assert G.luxemburg_norm(u, phi) <= G.luxemburg_norm(v, phi) * (1 + 1e-10)


def test_lebesgue_norms():
    u = G.indicator_ball(1.0, 1, 4.0, 256)
    m = u.integral()
    assert G.lebesgue_norm(u, 1) == pytest.approx(m)
    assert G.lebesgue_norm(u, 2) == pytest.approx(math.sqrt(m))
    assert G.lebesgue_norm(u, math.inf) == 1.0


def test_binary_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    u = random_field(rng, dim=2, L=1.5, N=16)
    path = tmp_path / "u.bin"
    G.save_binary(u, path)
    raw = path.read_bytes()
    assert len(raw) == 32 + 8 * 256
    v = G.load_binary(path)
    assert (v.dim, v.points_per_axis, v.half_width) == (2, 16, 1.5)
    np.testing.assert_array_equal(v.samples, u.samples)


def test_binary_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"\0" * 64)
    with pytest.raises(ValueError):
        G.load_binary(path)


def test_csv_round_trip(tmp_path):
    u = gaussian_1d(L=3.0, N=32)
    path = tmp_path / "u.csv"
    G.save_csv(u, path)
    v = G.load_csv(path)
    assert v.half_width == pytest.approx(3.0, rel=1e-14)
    np.testing.assert_array_equal(v.samples, u.samples)
    with pytest.raises(DomainError):
        G.save_csv(G.GridFunction(2, 1.0, 4, np.zeros((4, 4))), path)
