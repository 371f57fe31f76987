import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedcontrast.model import (
    EncoderKind,
    ModelParams,
    encode_user,
    init_params,
    load_checkpoint,
    save_checkpoint,
    score,
)


def test_init_params_same_seed_identical():
    a = init_params(7, num_items=20, d=8)
    b = init_params(7, num_items=20, d=8)
    assert np.array_equal(a.item_table, b.item_table)
    assert np.array_equal(a.projection, b.projection)


def test_init_params_bound_d64():
    p = init_params(0, num_items=50, d=64)
    assert np.all(np.abs(p.item_table) <= 1 / 8 + 1e-15)
    assert np.all(np.abs(p.projection) <= 1 / 8 + 1e-15)


def test_init_params_different_seeds_differ():
    a = init_params(1, num_items=10, d=4)
    b = init_params(2, num_items=10, d=4)
    assert not np.array_equal(a.item_table, b.item_table)


def test_init_params_private_vectors():
    p = init_params(3, num_items=5, d=4, num_users=6)
    assert p.user_vectors.shape == (6, 4)
    assert np.all(np.abs(p.user_vectors) <= 0.5 + 1e-15)
    assert init_params(3, num_items=5, d=4).user_vectors is None


def test_init_params_validates():
    with pytest.raises(ValueError):
        init_params(0, num_items=0, d=4)
    with pytest.raises(ValueError):
        init_params(0, num_items=4, d=0)


def _params(item_table, projection=None, user_vectors=None):
    item_table = np.asarray(item_table, dtype=float)
    d = item_table.shape[1]
    if projection is None:
        projection = np.eye(d)
    return ModelParams(
        item_table=item_table,
        projection=np.asarray(projection, dtype=float),
        user_vectors=user_vectors,
    )


def test_mean_seq_identity_projection_is_prefix_mean():
    p = _params([[1.0, 0.0], [0.0, 1.0], [3.0, 3.0]])
    u = encode_user(EncoderKind.MEAN_SEQ, p, 0, np.array([0, 1]))
    assert np.allclose(u, [0.5, 0.5])


def test_mean_seq_empty_prefix_zero():
    p = _params(np.ones((4, 3)))
    u = encode_user(EncoderKind.MEAN_SEQ, p, 0, np.array([], dtype=int))
    assert np.array_equal(u, np.zeros(3))


def test_mean_seq_applies_projection():
    proj = np.array([[2.0, 0.0], [0.0, 3.0]])
    p = _params([[1.0, 1.0]], projection=proj)
    u = encode_user(EncoderKind.MEAN_SEQ, p, 0, np.array([0]))
    assert np.allclose(u, [2.0, 3.0])


def test_id_encoder_ignores_prefix():
    vecs = np.array([[1.0, 2.0], [3.0, 4.0]])
    p = _params(np.zeros((5, 2)), user_vectors=vecs)
    a = encode_user(EncoderKind.ID, p, 1, np.array([0, 1, 2]))
    b = encode_user(EncoderKind.ID, p, 1, np.array([4]))
    c = encode_user(EncoderKind.ID, p, 1, np.array([], dtype=int))
    assert np.array_equal(a, [3.0, 4.0])
    assert np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_id_encoder_requires_private_vector():
    p = _params(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        encode_user(EncoderKind.ID, p, 0, np.array([0]))


def test_encode_rejects_bad_item_index():
    p = _params(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        encode_user(EncoderKind.MEAN_SEQ, p, 0, np.array([3]))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.integers(1, 6))
def test_mean_seq_permutation_invariant(seed, n_items, d):
    rng = np.random.default_rng(seed)
    p = _params(rng.normal(size=(n_items, d)), projection=rng.normal(size=(d, d)))
    prefix = rng.integers(0, n_items, size=rng.integers(1, 8))
    u = encode_user(EncoderKind.MEAN_SEQ, p, 0, prefix)
    v = encode_user(EncoderKind.MEAN_SEQ, p, 0, prefix[::-1])
    assert np.allclose(u, v, atol=1e-12)


def test_score_examples():
    assert score(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert score(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0


def test_score_dimension_mismatch():
    with pytest.raises(ValueError):
        score(np.array([1.0]), np.array([1.0, 2.0]))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_score_matches_loop_oracle(seed, d):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=d)
    v = rng.normal(size=d)
    naive = 0.0
    for i in range(d):
        naive += u[i] * v[i]
    assert np.isclose(score(u, v), naive, rtol=1e-12, atol=1e-12)


def test_score_bilinear_power_of_two_exact():
    rng = np.random.default_rng(0)
    u = rng.normal(size=5)
    v = rng.normal(size=5)
    assert score(2.0 * u, v) == 2.0 * score(u, v)
    assert score(0.5 * u, v) == 0.5 * score(u, v)


def test_checkpoint_roundtrip(tmp_path):
    p = init_params(11, num_items=7, d=3, num_users=4)
    path = tmp_path / "model.bin"
    save_checkpoint(path, p, EncoderKind.ID)
    q, kind = load_checkpoint(path)
    assert kind is EncoderKind.ID
    assert np.array_equal(p.item_table, q.item_table)
    assert np.array_equal(p.projection, q.projection)
    assert np.array_equal(p.user_vectors, q.user_vectors)


def test_checkpoint_roundtrip_without_private(tmp_path):
    p = init_params(5, num_items=4, d=2)
    path = tmp_path / "model.bin"
    save_checkpoint(path, p, EncoderKind.MEAN_SEQ)
    q, kind = load_checkpoint(path)
    assert kind is EncoderKind.MEAN_SEQ
    assert q.user_vectors is None
    assert np.array_equal(p.item_table, q.item_table)


def test_checkpoint_layout_header(tmp_path):
    p = init_params(2, num_items=3, d=2)
    path = tmp_path / "model.bin"
    save_checkpoint(path, p, EncoderKind.MEAN_SEQ)
    raw = path.read_bytes()
    assert raw[:8] == b"FEDEMB01"
    # version, num_items, d, encoder code, then float64 matrices
    assert len(raw) == 8 + 4 + 8 + 4 + 1 + (3 * 2 + 2 * 2) * 8 + 8


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTMAGIC" + b"\0" * 40)
    with pytest.raises(ValueError):
        load_checkpoint(path)
