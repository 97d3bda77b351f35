import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ttrseg.errors import ConfigError, StreamConsistencyError
from ttrseg.patching import (
    Frame,
    assemble_patches,
    cosine_similarity,
    extract_patches,
    generate_mask,
)

from conftest import random_frame


def cos_oracle(a, b):
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) ** 2 for x in a))
    nb = math.sqrt(sum(float(y) ** 2 for y in b))
    return dot / (na * nb)


def test_extract_single_patch(rng):
    f = random_frame(rng, 2, 2)
    p = extract_patches(f, 2)
    assert p.shape == (1, 12)
    # channel-major, then row, then column
    assert p[0].tolist() == f.rgb.transpose(2, 0, 1).ravel().astype(float).tolist()


def test_extract_grid_order():
    rgb = np.zeros((4, 4, 3), np.uint8)
    rgb[:2, :2] = 1
    rgb[:2, 2:] = 2
    rgb[2:, :2] = 3
    rgb[2:, 2:] = 4
    p = extract_patches(Frame(rgb), 2)
    assert p.shape == (4, 12)
    assert [int(v[0]) for v in p] == [1, 2, 3, 4]
    assert all(len(set(v.tolist())) == 1 for v in p)


def test_extract_round_trip(rng):
    f = random_frame(rng, 64, 96)
    p = extract_patches(f, 32)
    assert p.dtype == np.float32
    back = assemble_patches(p, (2, 3), 32).astype(np.uint8)
    assert back.tobytes() == f.rgb.tobytes()


def test_extract_non_divisible(rng):
    with pytest.raises(ConfigError):
        extract_patches(random_frame(rng, 30, 32), 32)


def test_cosine_basic(rng):
    a = rng.uniform(1, 255, 48).astype(np.float32)
    assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-6)
    e1 = np.zeros(12, np.float32)
    e2 = np.zeros(12, np.float32)
    e1[0], e2[1] = 1, 1
    assert cosine_similarity(e1, e2) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_cosine_matches_scalar_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-255, 255, 3 * 8 * 8).astype(np.float32)
    b = rng.uniform(-255, 255, 3 * 8 * 8).astype(np.float32)
    assert cosine_similarity(a, b) == pytest.approx(cos_oracle(a, b), abs=1e-6)


def test_cosine_zero_norms():
    z = np.zeros(12, np.float32)
    assert cosine_similarity(z, z) == 1.0
    assert cosine_similarity(z, np.ones(12, np.float32)) == 0.0
    with pytest.raises(ConfigError):
        cosine_similarity(np.ones(3), np.ones(4))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_positive_scale_invariance(seed, c):
    p = np.random.default_rng(seed).uniform(0, 255, 48).astype(np.float32)
    assert cosine_similarity(p, np.float32(c) * p) == pytest.approx(1.0, abs=1e-6)


def test_first_frame_all_active(rng):
    mask, cache = generate_mask(random_frame(rng, 64, 64), None, 0.99, 32)
    assert mask.active.all() and mask.shape == (2, 2)
    assert cache.patches.shape == (4, 3 * 32 * 32)


def test_identical_frames_redundant(rng):
    f = random_frame(rng, 64, 96)
    _, cache = generate_mask(f, None, 0.99, 32)
    mask, _ = generate_mask(f, cache, 0.99, 32)
    assert not mask.active.any()


def test_tau_one_all_active(rng):
    f = random_frame(rng, 64, 64)
    _, cache = generate_mask(f, None, 1.0, 32)
    mask, _ = generate_mask(f, cache, 1.0, 32)
    assert mask.active.all()


def test_tau_minus_one_all_redundant(rng):
    _, cache = generate_mask(random_frame(rng, 64, 64), None, -1.0, 32)
    mask, _ = generate_mask(random_frame(rng, 64, 64), cache, -1.0, 32)
    assert not mask.active.any()


def test_returned_cache_is_current_frame(rng):
    a, b = random_frame(rng, 64, 64), random_frame(rng, 64, 64)
    _, ca = generate_mask(a, None, 0.99, 32)
    _, cb = generate_mask(b, ca, 0.99, 32)
    assert np.array_equal(cb.patches, extract_patches(b, 32))


@pytest.mark.parametrize("cell", [(0, 0), (1, 2), (2, 1)])
def test_single_block_change_matches_exhaustive_scan(rng, cell):
    b = 16
    f0 = random_frame(rng, 48, 48)
    rgb = f0.rgb.copy()
    r, c = cell
    rgb[r * b : (r + 1) * b, c * b : (c + 1) * b] = rng.integers(0, 256, (b, b, 3))
    f1 = Frame(rgb)
    _, cache = generate_mask(f0, None, 0.99, b)
    mask, _ = generate_mask(f1, cache, 0.99, b)
    expected = np.zeros((3, 3), bool)
    for rr in range(3):
        for cc in range(3):
            pa = f1.rgb[rr * b : (rr + 1) * b, cc * b : (cc + 1) * b].transpose(2, 0, 1).ravel()
            pb = f0.rgb[rr * b : (rr + 1) * b, cc * b : (cc + 1) * b].transpose(2, 0, 1).ravel()
            expected[rr, cc] = cos_oracle(pa, pb) <= 0.99
    assert np.array_equal(mask.active, expected)
    assert mask.num_active == 1 and mask.active[cell]


def test_uniform_gain_is_redundant(rng):
    base = rng.integers(20, 120, (64, 64, 3)).astype(np.float64)
    f0 = Frame(base.astype(np.uint8))
    f1 = Frame((base * 2).astype(np.uint8))
    _, cache = generate_mask(f0, None, 0.999, 32)
    mask, _ = generate_mask(f1, cache, 0.999, 32)
    assert not mask.active.any()


def test_additive_shift_is_not_invariant():
    # documented behavior: plain cosine is not offset-invariant
    a = np.array([0, 0, 255] * 4, np.float32)
    assert cosine_similarity(a, a + 100) < 0.99


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1, 1), st.floats(-1, 1))
def test_tau_monotone(seed, t1, t2):
    t1, t2 = min(t1, t2), max(t1, t2)
    rng = np.random.default_rng(seed)
    f0 = random_frame(rng, 32, 32)
    rgb = f0.rgb.copy()
    rgb[: rng.integers(0, 32)] //= 2
    rgb[:, rng.integers(0, 32) :] = rng.integers(0, 256, 3, dtype=np.uint8)
    _, cache = generate_mask(f0, None, 0.0, 8)
    m1, _ = generate_mask(Frame(rgb), cache, t1, 8)
    m2, _ = generate_mask(Frame(rgb), cache, t2, 8)
    assert not (m1.active & ~m2.active).any()


def test_mask_is_replayable(rng):
    frames = [random_frame(rng, 32, 64) for _ in range(4)]

    def run():
        cache, out = None, []
        for f in frames:
            m, cache = generate_mask(f, cache, 0.5, 16)
            out.append(m.active.copy())
        return out

    assert all(np.array_equal(a, b) for a, b in zip(run(), run()))


def test_errors(rng):
    _, cache = generate_mask(random_frame(rng, 64, 64), None, 0.9, 32)
    with pytest.raises(StreamConsistencyError):
        generate_mask(random_frame(rng, 64, 96), cache, 0.9, 32)
    with pytest.raises(ConfigError):
        generate_mask(random_frame(rng, 64, 64), None, 1.5, 32)
