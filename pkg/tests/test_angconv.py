import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polardeblur.angconv import (KERNEL_TAPS, angular_convolve, angular_convolve_adjoint,
                                 angular_convolve_adjoint_array, angular_convolve_array,
                                 angular_convolve_fft, custom_kernel, load_kernel, make_kernel,
                                 save_kernel)
from polardeblur.grid import PolarImage, make_grid


def brute_force_convolve(p, w):
    n_phi = p.shape[0]
    K = w.size
    out = np.zeros_like(p)
    for j in range(n_phi):
        for k in range(K):
            out[j] += w[k] * p[(j - k + K // 2) % n_phi]
    return out


def test_indicator_10_at_paper_grid():
    w = make_kernel("Indicator-10", 804)
    assert w.K == KERNEL_TAPS
    nz = w.weights[w.weights > 0]
    assert nz.size == 23
    np.testing.assert_allclose(nz, 1 / 23)
    assert np.flatnonzero(w.weights).tolist() == list(range(31 - 11, 31 + 12))


def test_indicator_20_half_width():
    assert np.count_nonzero(make_kernel("Indicator-20", 804).weights) == 2 * 22 + 1
    assert np.count_nonzero(make_kernel("Indicator-20", 201).weights) == 2 * 5 + 1


def test_gaussian_1_center_tap():
    lag = np.arange(-31, 32)
    total = np.exp(-lag ** 2 / 2).sum()
    assert total == pytest.approx(2.5066, abs=1e-4)
    w = make_kernel("Gaussian-1", 804)
    assert w.weights[31] == pytest.approx(1 / total, rel=1e-14)
    assert w.weights[31] == pytest.approx(0.3989, abs=1e-4)


def test_delta_kernel():
    assert make_kernel("Delta", 17).weights.tolist() == [1.0]


@pytest.mark.parametrize("name", ["Indicator-10", "Indicator-20", "Gaussian-1", "Gaussian-2"])
def test_named_kernel_invariants(name):
    w = make_kernel(name, 201)
    assert w.K % 2 == 1 and w.K <= 201
    assert np.all(w.weights >= 0)
    assert w.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert w.symmetric
    np.testing.assert_array_equal(w.weights, w.weights[::-1])


def test_kernel_errors():
    with pytest.raises(ValueError):
        make_kernel("Box-3", 804)
    with pytest.raises(ValueError):
        make_kernel("Indicator-10", 50)


def test_wide_indicator_truncates_and_renormalizes():
    w = make_kernel("Indicator-60", 804)   # 2 * 67 + 1 taps > 63
    np.testing.assert_allclose(w.weights, 1 / 63)


def test_delta_is_bit_exact_identity(rng):
    g = make_grid(64)
    p = PolarImage(rng.normal(size=g.polar_shape), g)
    d = make_kernel("Delta", g.N_phi)
    assert np.array_equal(angular_convolve(p, d).values, p.values)
    assert np.array_equal(angular_convolve_adjoint(p, d).values, p.values)


def test_constant_preserved():
    g = make_grid(64)
    p = PolarImage(np.full(g.polar_shape, 2.5), g)
    for name in ["Indicator-10", "Indicator-20", "Gaussian-1", "Gaussian-2"]:
        np.testing.assert_allclose(angular_convolve(p, make_kernel(name, g.N_phi)).values, 2.5, rtol=1e-14)


def test_one_hot_matches_brute_force():
    g = make_grid(64)
    w = make_kernel("Indicator-20", g.N_phi)
    vals = np.zeros(g.polar_shape)
    vals[0, 5] = 1.0
    out = angular_convolve(PolarImage(vals, g), w).values
    np.testing.assert_allclose(out, brute_force_convolve(vals, w.weights), atol=1e-15)
    assert np.all(out[:, np.arange(g.N_r) != 5] == 0)
    expected = np.zeros(g.N_phi)
    expected[np.arange(-31, 32) % g.N_phi] = w.weights
    np.testing.assert_allclose(out[:, 5], expected, atol=1e-15)


def test_adjoint_dot_product(rng):
    w = custom_kernel(rng.random(9), 40)
    for _ in range(20):
        p = rng.normal(size=(40, 6))
        q = rng.normal(size=(40, 6))
        lhs = np.vdot(angular_convolve_array(p, w.weights), q)
        rhs = np.vdot(p, angular_convolve_adjoint_array(q, w.weights))
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_symmetric_adjoint_equals_forward(rng):
    w = make_kernel("Gaussian-2", 201)
    p = rng.normal(size=(201, 8))
    np.testing.assert_array_equal(angular_convolve_adjoint_array(p, w.weights),
                                  angular_convolve_array(p, np.ascontiguousarray(w.weights[::-1])))
    np.testing.assert_allclose(angular_convolve_adjoint_array(p, w.weights),
                               angular_convolve_array(p, w.weights), rtol=0, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12), st.integers(-50, 50))
def test_properties(seed, half, shift):
    rng = np.random.default_rng(seed)
    w = rng.random(2 * half + 1)
    w /= w.sum()
    p = rng.normal(size=(48, 5))
    out = angular_convolve_array(p, w)
    # mass per ring
    np.testing.assert_allclose(out.sum(0), p.sum(0), rtol=1e-12, atol=1e-12)
    # shift equivariance (exact)
    np.testing.assert_array_equal(angular_convolve_array(np.roll(p, shift, 0), w), np.roll(out, shift, 0))
    # FFT route
    np.testing.assert_allclose(angular_convolve_fft(p, w), out, rtol=1e-10, atol=1e-10 * np.abs(p).max())
    # non-expansive in max norm
    assert np.abs(out).max() <= np.abs(p).max() * (1 + 1e-15)


def test_kernel_file_roundtrip(tmp_path):
    w = make_kernel("Gaussian-2", 201)
    path = save_kernel(tmp_path / "g2.txt", w)
    lines = path.read_text().split()
    assert lines[0] == "63" and len(lines) == 64
    back = load_kernel(path, 201)
    np.testing.assert_array_equal(back.weights, w.weights)
