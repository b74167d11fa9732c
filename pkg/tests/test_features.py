import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ccae.channel import ArrayGeometry, steering_vector
from ccae.features import FeatureError, angular_transform, extract_features


def _dft_oracle(h):
    m = len(h)
    return np.array([sum(h[n] * np.exp(2j * np.pi * k * n / m) for n in range(m)) for k in range(m)]) / np.sqrt(m)


def test_constant_input_is_impulse():
    assert np.allclose(angular_transform(np.ones(4)), [2, 0, 0, 0], atol=1e-15)


def test_transform_matches_direct_dft():
    rng = np.random.default_rng(0)
    h = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    assert np.allclose(angular_transform(h), _dft_oracle(h), atol=1e-12)


def test_transform_preserves_energy():
    rng = np.random.default_rng(1)
    h = rng.standard_normal((10, 32)) + 1j * rng.standard_normal((10, 32))
    assert np.allclose(np.linalg.norm(angular_transform(h), axis=1), np.linalg.norm(h, axis=1), rtol=1e-12)


@pytest.mark.parametrize("k", [0, 1, 5, 15])
def test_grid_steering_vector_lands_in_one_bin(k):
    m = 32
    a = steering_vector(2 * k / m, ArrayGeometry(num_antennas=m, element_spacing=0.5))
    spectrum = _dft_oracle(a)
    expected = np.zeros(m)
    expected[k] = np.sqrt(m)
    assert np.allclose(np.abs(spectrum), expected, atol=1e-9)
    assert np.allclose(angular_transform(a), spectrum, atol=1e-9)


def test_all_ones_row_features():
    f = extract_features(np.ones((1, 4)))
    assert np.allclose(f.entries, [[1, 0, 0, 0]], atol=1e-15)
    assert f.scaling_mode == "unit_norm"


complex_rows = arrays(np.float64, (3, 2, 8), elements=st.floats(-10, 10, allow_nan=False)).map(
    lambda a: a[:, 0] + 1j * a[:, 1]
)


@settings(max_examples=50, deadline=None)
@given(h=complex_rows, re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_unit_norm_features_are_scale_invariant(h, re, im):
    if np.any(np.linalg.norm(h, axis=1) < 1e-6) or abs(complex(re, im)) < 1e-3:
        return
    f = extract_features(h).entries
    g = extract_features(complex(re, im) * h).entries
    assert np.allclose(f, g, atol=1e-9)
    assert np.allclose(np.linalg.norm(f, axis=1), 1.0, atol=1e-9)
    assert np.all(f >= 0)


def test_five_times_row_matches():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((1, 16)) + 1j * rng.standard_normal((1, 16))
    assert np.allclose(extract_features(h).entries, extract_features(5 * h).entries, atol=1e-15)


def test_zero_row_is_rejected():
    h = np.ones((3, 4), dtype=complex)
    h[1] = 0
    with pytest.raises(FeatureError):
        extract_features(h)


def test_standardize_mode_records_statistics():
    rng = np.random.default_rng(4)
    h = rng.standard_normal((200, 8)) + 1j * rng.standard_normal((200, 8))
    f = extract_features(h, "standardize")
    assert np.allclose(f.entries.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(f.entries.std(axis=0), 1.0, atol=1e-12)
    base = extract_features(h).entries
    assert np.allclose(f.entries * f.std + f.mean, base, atol=1e-12)


def test_unknown_scaling_mode():
    with pytest.raises(FeatureError):
        extract_features(np.ones((1, 4)), "minmax")
