import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from argda.domain import DomainSplit, build_subdomain_index
from argda.mmd import assemble_mstar, build_m0, build_mc, build_repulsive

from conftest import random_split


def _mean(X, idx):
    return X[:, list(idx)].mean(axis=1)


def test_m0_two_by_two():
    M = build_m0(DomainSplit(2, 2, 1, [1, 1]))
    np.testing.assert_allclose(M[:2, :2], 0.25)
    np.testing.assert_allclose(M[2:, 2:], 0.25)
    np.testing.assert_allclose(M[:2, 2:], -0.25)
    assert M.sum() == pytest.approx(0.0)


def test_m0_smallest():
    np.testing.assert_allclose(build_m0(DomainSplit(1, 1, 1, [1])), [[1, -1], [-1, 1]])


def test_mc_entries():
    split = DomainSplit(3, 2, 2, [1, 1, 2], [1, 2])
    M = build_mc(split, 1)
    e = np.array([0.5, 0.5, 0, -1, 0])
    np.testing.assert_allclose(M, np.outer(e, e))
    assert M[0, 1] == pytest.approx(0.25) and M[3, 3] == pytest.approx(1.0)
    assert M[0, 3] == pytest.approx(-0.5)
    assert not np.any(M[2]) and not np.any(M[4])


def test_mc_empty_target_class_is_zero():
    split = DomainSplit(2, 2, 2, [1, 2], [1, 1])
    assert not np.any(build_mc(split, 2))


def test_mc_bad_class():
    with pytest.raises(ValueError):
        build_mc(DomainSplit(2, 1, 2, [1, 2], [1]), 3)


def test_repulsive_ss_two_classes():
    split = DomainSplit(2, 2, 2, [1, 2], [1, 2])
    M = build_repulsive(split, "ss")
    expect = np.zeros((4, 4))
    expect[:2, :2] = 2 * np.array([[1, -1], [-1, 1]])
    np.testing.assert_allclose(M, expect)


def test_repulsive_single_class_is_zero():
    split = DomainSplit(2, 2, 1, [1, 1], [1, 1])
    for d in ("st", "ts", "ss"):
        assert not np.any(build_repulsive(split, d))


def test_repulsive_needs_pseudo_labels():
    with pytest.raises(ValueError):
        build_repulsive(DomainSplit(2, 1, 2, [1, 2]), "st")


def test_repulsive_bad_direction():
    with pytest.raises(ValueError):
        build_repulsive(DomainSplit(2, 1, 2, [1, 2], [1]), "tt")


def test_mstar_smallest_cases():
    split = DomainSplit(1, 1, 1, [1], [1])
    expect = 2 * np.array([[1, -1], [-1, 1]])
    np.testing.assert_allclose(assemble_mstar(split, use_repulsive=False), expect)
    np.testing.assert_allclose(assemble_mstar(split, use_repulsive=True), expect)


def test_repulsive_st_quadratic_form_brute_force(rng):
    # tr(X M X^T) against the summed squared mean gaps over ordered pairs
    for _ in range(20):
        split = random_split(rng)
        X = rng.normal(size=(3, split.n))
        idx = build_subdomain_index(split)
        C = split.n_classes
        brute = {"st": 0.0, "ts": 0.0, "ss": 0.0}
        for c in range(C):
            for r in range(C):
                if r == c:
                    continue
                sc, tr_ = idx.source[c], idx.target[r]
                if len(tr_):
                    brute["st"] += np.sum((_mean(X, sc) - _mean(X, tr_)) ** 2)
                    brute["ts"] += np.sum((_mean(X, tr_) - _mean(X, sc)) ** 2)
                brute["ss"] += np.sum((_mean(X, sc) - _mean(X, idx.source[r])) ** 2)
        for d, value in brute.items():
            got = np.trace(X @ build_repulsive(split, d) @ X.T)
            assert got == pytest.approx(value, rel=1e-10, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), C=st.integers(1, 4), repulsive=st.booleans())
def test_mstar_symmetric_zero_sum(seed, C, repulsive):
    rng = np.random.default_rng(seed)
    split = random_split(rng, n_classes=C)
    M = assemble_mstar(split, repulsive)
    np.testing.assert_allclose(M, M.T, atol=1e-14)
    assert abs(M.sum()) < 1e-10
    for c in range(1, C + 1):
        Mc = build_mc(split, c)
        assert abs(Mc.sum()) < 1e-10
        assert np.linalg.eigvalsh(Mc).min() > -1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_ts_equals_st(seed):
    split = random_split(np.random.default_rng(seed))
    np.testing.assert_allclose(build_repulsive(split, "ts"), build_repulsive(split, "st"))
