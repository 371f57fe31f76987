import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from fedcontrast.privacy import PerturbedEmbedding, PrivacyConfig, l1_clip, laplace_perturb

finite_vectors = hnp.arrays(
    np.float64,
    st.integers(1, 16),
    elements=st.floats(-1e6, 1e6, allow_nan=False),
)


def test_noise_scale_is_two_delta_over_epsilon():
    assert PrivacyConfig(delta=1.0, epsilon=4.0).noise_scale == 0.5
    assert PrivacyConfig(delta=2.0, epsilon=1.0).noise_scale == 4.0


def test_config_validation():
    with pytest.raises(ValueError):
        PrivacyConfig(delta=0.0, epsilon=1.0)
    with pytest.raises(ValueError):
        PrivacyConfig(delta=1.0, epsilon=0.0)
    with pytest.raises(ValueError):
        PrivacyConfig(delta=-1.0, epsilon=1.0)


def test_infinite_epsilon_means_no_noise():
    cfg = PrivacyConfig(delta=1.0, epsilon=float("inf"))
    assert cfg.noise_scale == 0.0
    v = np.array([0.3, -0.2, 0.1])
    out = laplace_perturb(v, cfg, np.random.default_rng(0), client_id=5)
    assert np.array_equal(out.vector, v)
    assert out.client_id == 5


@given(finite_vectors, st.floats(0.01, 10.0, allow_nan=False))
def test_clip_bounds_l1_norm(v, delta):
    clipped = l1_clip(v, delta)
    assert np.abs(clipped).sum() <= delta * (1 + 1e-12)


@given(finite_vectors)
def test_clip_identity_inside_budget(v):
    norm = np.abs(v).sum()
    delta = norm + 1.0
    assert np.array_equal(l1_clip(v, delta), v)


def test_clip_preserves_direction():
    v = np.array([3.0, -1.0])
    clipped = l1_clip(v, 1.0)
    assert np.allclose(clipped, [0.75, -0.25])


def test_clip_zero_vector():
    z = np.zeros(4)
    assert np.array_equal(l1_clip(z, 1.0), z)


def test_clip_rejects_bad_delta():
    with pytest.raises(ValueError):
        l1_clip(np.ones(2), 0.0)


def test_perturb_deterministic_given_stream():
    cfg = PrivacyConfig()
    v = np.linspace(-0.1, 0.1, 8)
    a = laplace_perturb(v, cfg, np.random.default_rng(42))
    b = laplace_perturb(v, cfg, np.random.default_rng(42))
    assert np.array_equal(a.vector, b.vector)
    c = laplace_perturb(v, cfg, np.random.default_rng(43))
    assert not np.array_equal(a.vector, c.vector)


def test_perturb_noise_statistics():
    # b = 2*1/4 = 0.5, so per-coordinate variance is 2b^2 = 0.5
    cfg = PrivacyConfig(delta=1.0, epsilon=4.0)
    rng = np.random.default_rng(7)
    noise = laplace_perturb(np.zeros(200_000), cfg, rng).vector
    assert abs(noise.var() - 0.5) < 0.01
    assert abs(noise.mean()) < 0.01


def test_perturb_output_finite_and_typed():
    cfg = PrivacyConfig(delta=1.0, epsilon=0.001)  # huge noise scale
    out = laplace_perturb(np.zeros(1000), cfg, np.random.default_rng(0), client_id=3)
    assert isinstance(out, PerturbedEmbedding)
    assert np.all(np.isfinite(out.vector))
    assert out.client_id == 3


def test_perturb_matches_inverse_cdf_reconstruction():
    # same stream replayed by hand through the inverse-CDF formula
    cfg = PrivacyConfig(delta=1.0, epsilon=2.0)
    v = np.array([0.5, -0.5, 0.0])
    got = laplace_perturb(v, cfg, np.random.default_rng(9)).vector
    u = np.random.default_rng(9).random(3) - 0.5
    b = 2.0 * 1.0 / 2.0
    want = v - b * np.sign(u) * np.log(1.0 - 2.0 * np.abs(u))
    assert np.allclose(got, want, rtol=0, atol=0)
