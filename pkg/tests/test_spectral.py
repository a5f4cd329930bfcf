import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_field, real_field
from modnls.spectral import (Grid, SpectralField, cubic_nonlinearity, h_sigma_norm,
                             initial_datum, make_grid, read_snapshot, transform_forward,
                             transform_inverse, write_snapshot)


def brute_coefficients(values):
    """Direct O(M^2) DFT: c_k = (1/M) sum_j u_j exp(-i k x_j)."""
    M = values.shape[0]
    x = 2 * np.pi * np.arange(M) / M
    k = np.fft.fftfreq(M, 1.0 / M)
    return np.array([np.sum(values * np.exp(-1j * kk * x)) / M for kk in k])


def test_make_grid_default_resolution():
    grid = make_grid(1, 2 ** 7)
    assert grid.points == 256
    assert grid.spacing == pytest.approx(2 * np.pi / 256)
    assert grid.spacing == pytest.approx(0.0245, abs=5e-5)
    assert grid.spacing_per_mode == pytest.approx(0.049, abs=5e-4)
    meta = grid.metadata()
    assert meta["dx"] == grid.spacing and meta["dx_per_mode"] == grid.spacing_per_mode


def test_make_grid_smallest():
    grid = make_grid(1, 1)
    assert grid.points == 2
    assert sorted(grid.wavenumbers.tolist()) == [-1, 0]


def test_node_positions(grid8):
    assert grid8.nodes[3] == pytest.approx(3 * np.pi / 4)
    assert sorted(grid8.wavenumbers.tolist()) == [-4, -3, -2, -1, 0, 1, 2, 3]


@pytest.mark.parametrize("d,K", [(0, 4), (1, 0), (-1, 2)])
def test_make_grid_rejects(d, K):
    with pytest.raises(ValueError):
        make_grid(d, K)


def test_grid_rejects_odd_points():
    with pytest.raises(ValueError):
        Grid(dim=1, points=7)


def test_forward_constant(grid8):
    f = transform_forward(np.ones(8), grid8)
    expected = np.zeros(8)
    expected[0] = 1.0
    np.testing.assert_array_equal(f.coefficients, expected)


def test_forward_single_mode(grid8):
    f = transform_forward(np.exp(1j * grid8.nodes), grid8)
    expected = np.zeros(8, complex)
    expected[1] = 1.0
    np.testing.assert_allclose(f.coefficients, expected, atol=1e-15)


def test_forward_size_mismatch(grid8):
    with pytest.raises(ValueError):
        transform_forward(np.ones(6), grid8)


def test_inverse_examples(grid8):
    c = np.zeros(8, complex)
    c[0] = 1
    np.testing.assert_allclose(transform_inverse(SpectralField(grid8, c)), np.ones(8))
    c = np.zeros(8, complex)
    c[1] = 1
    np.testing.assert_allclose(transform_inverse(SpectralField(grid8, c)),
                               np.exp(1j * grid8.nodes), atol=1e-15)


def test_forward_matches_direct_dft(grid128, rng):
    u = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    np.testing.assert_allclose(transform_forward(u, grid128).coefficients, brute_coefficients(u),
                               atol=1e-13)


def test_round_trip(grid128, rng):
    for _ in range(10):
        u = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        back = transform_inverse(transform_forward(u, grid128))
        assert np.linalg.norm(back - u) <= 1e-12 * np.linalg.norm(u)


def test_round_trip_2d(rng):
    grid = make_grid(2, 8)
    u = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    back = transform_inverse(transform_forward(u, grid))
    assert np.linalg.norm(back - u) <= 1e-12 * np.linalg.norm(u)


def test_field_is_immutable(grid8):
    f = transform_forward(np.ones(8), grid8)
    with pytest.raises(ValueError):
        f.coefficients[0] = 2.0


def test_norm_examples(grid128):
    one = transform_forward(np.ones(256), grid128)
    for sigma in (0, 0.5, 1, 3):
        assert h_sigma_norm(one, sigma) == pytest.approx(1.0, abs=1e-15)
    e1 = transform_forward(np.exp(1j * grid128.nodes), grid128)
    assert h_sigma_norm(e1, 1) == pytest.approx(np.sqrt(2), rel=1e-14)


def test_norm_matches_brute_sum(grid128, rng):
    u = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    c = brute_coefficients(u)
    k = np.fft.fftfreq(256, 1 / 256)
    for sigma in (0.0, 1.0, 2.5):
        direct = 0.0
        for kk, ck in zip(k, c):
            direct += (1 + kk * kk) ** sigma * abs(ck) ** 2
        got = h_sigma_norm(transform_forward(u, grid128), sigma)
        assert got == pytest.approx(np.sqrt(direct), rel=1e-13)


def test_norm_rejects_negative_sigma(grid8):
    with pytest.raises(ValueError):
        h_sigma_norm(transform_forward(np.ones(8), grid8), -1)


def test_parseval(grid128, rng):
    for _ in range(10):
        u = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        got = h_sigma_norm(transform_forward(u, grid128), 0)
        assert got == pytest.approx(np.linalg.norm(u) / np.sqrt(256), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), s1=st.floats(0, 3), s2=st.floats(0, 3))
def test_norm_monotone_in_sigma(seed, s1, s2):
    grid = make_grid(1, 16)
    f = random_field(grid, np.random.default_rng(seed))
    lo, hi = sorted((s1, s2))
    assert h_sigma_norm(f, lo) <= h_sigma_norm(f, hi) * (1 + 1e-15)


def test_cubic_examples(grid128):
    zero = SpectralField(grid128, np.zeros(256))
    assert np.all(cubic_nonlinearity(zero).coefficients == 0)
    c = 0.7 - 0.4j
    const = transform_forward(np.full(256, c), grid128)
    out = cubic_nonlinearity(const)
    np.testing.assert_allclose(transform_inverse(out), abs(c) ** 2 * c, atol=1e-15)
    e1 = transform_forward(np.exp(1j * grid128.nodes), grid128)
    np.testing.assert_allclose(cubic_nonlinearity(e1).coefficients, e1.coefficients, atol=1e-15)


def test_cubic_pointwise_without_dealias(grid128, rng):
    f = random_field(grid128, rng, decay=0.2)
    u = transform_inverse(f)
    np.testing.assert_allclose(transform_inverse(cubic_nonlinearity(f)), np.abs(u) ** 2 * u,
                               atol=1e-14)


def test_cubic_dealias_zeroes_top_third(grid128, rng):
    f = random_field(grid128, rng)
    out = cubic_nonlinearity(f, dealias=True)
    high = np.abs(grid128.wavenumbers) > 256 // 3
    assert np.all(out.coefficients[high] == 0)
    assert np.any(out.coefficients[~high] != 0)


def test_cubic_preserves_hermitian_symmetry(grid128, rng):
    for dealias in (False, True):
        f = real_field(grid128, rng)
        assert f.is_real_valued()
        out = cubic_nonlinearity(f, dealias)
        assert out.is_real_valued()
        assert np.max(np.abs(transform_inverse(out).imag)) < 1e-13


def test_initial_datum(grid128):
    u0 = initial_datum(grid128)
    x = grid128.nodes
    np.testing.assert_allclose(transform_inverse(u0), np.cos(x) / (2 - np.sin(x)), atol=1e-14)
    assert u0.is_real_valued()


def test_snapshot_round_trip(tmp_path, grid128, rng):
    f = random_field(grid128, rng, decay=0.1)
    csv_path, side = write_snapshot(f, tmp_path / "snap.csv", {"time": 0.5, "scheme": "strang"})
    header = csv_path.read_text().splitlines()[0]
    assert header == "index,x,re_u,im_u"
    g, meta = read_snapshot(csv_path)
    assert meta["time"] == 0.5 and meta["scheme"] == "strang" and meta["grid"]["points"] == 256
    assert np.max(np.abs(transform_inverse(g) - transform_inverse(f))) < 1e-13
