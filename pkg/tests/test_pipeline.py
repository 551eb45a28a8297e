from dataclasses import replace

import numpy as np
import pytest

from argda.data_io import generate_synthetic
from argda.domain import accuracy, nn_pseudo_label
from argda.pipeline import SolverConfig, Variant, build_kernel, run, variant_terms

from conftest import SHIFT_CONFIG


def test_variant_terms():
    assert variant_terms("arg-da") == ("arg", "arg")
    assert variant_terms(Variant.DGA_PLUS_F) == ("plain", "plain")
    assert variant_terms("dga+a") == ("none", "arg")
    assert variant_terms("dga-da") == ("none", "plain")


def test_linear_kernel_outer_product():
    np.testing.assert_array_equal(build_kernel(np.array([[1.0, 2.0]]), "linear"),
                                  [[1, 2], [2, 4]])


def test_rbf_kernel(rng):
    X = rng.normal(size=(2, 3))
    K = build_kernel(X, "rbf", sigma=0.7)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    for i in range(3):
        for j in range(3):
            d = np.sum((X[:, i] - X[:, j]) ** 2)
            assert K[i, j] == pytest.approx(np.exp(-d / (2 * 0.7**2)), rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(alpha=1.0)
    with pytest.raises(ValueError):
        SolverConfig(k=0)
    with pytest.raises(ValueError):
        SolverConfig(kernel="poly")
    with pytest.raises(ValueError):
        SolverConfig(variant="dga")
    assert SolverConfig(variant="dga+a").variant is Variant.DGA_PLUS_A


def test_defaults():
    c = SolverConfig()
    assert (c.k, c.lam, c.alpha, c.n_iter) == (200, 0.1, 0.9, 10)


def test_no_shift_separable():
    ds = generate_synthetic(n_classes=2, per_class=20, separation=10.0, seed=0)
    report = run(ds.features, ds.split, SolverConfig(n_iter=2), ds.truth)
    assert report.final_accuracy == 1.0
    assert len(report.iterations) <= 2


@pytest.mark.parametrize("variant", list(Variant))
def test_single_class(variant):
    ds = generate_synthetic(n_classes=1, per_class=8, seed=3)
    report = run(ds.features, ds.split, SolverConfig(variant=variant))
    assert set(report.final_labels.tolist()) == {1}


def test_arg_beats_baseline_and_dga(shift_task):
    X, split, truth = shift_task.features, shift_task.split, shift_task.truth
    base = accuracy(nn_pseudo_label(X, split), truth)
    arg = run(X, split, SolverConfig(**SHIFT_CONFIG), truth).final_accuracy
    dga = run(X, split, SolverConfig(variant="dga-da", **SHIFT_CONFIG), truth).final_accuracy
    assert arg >= dga
    assert arg >= base + 0.15


def test_deterministic(shift_task):
    cfg = SolverConfig(**SHIFT_CONFIG)
    a = run(shift_task.features, shift_task.split, cfg)
    b = run(shift_task.features, shift_task.split, cfg)
    np.testing.assert_array_equal(a.final_labels, b.final_labels)
    assert [r.eigenvalue_sum for r in a.iterations] == [r.eigenvalue_sum for r in b.iterations]


def test_early_stop_sound(shift_task):
    # one extra iteration after an early stop changes nothing
    cfg = SolverConfig(**SHIFT_CONFIG)
    stopped = run(shift_task.features, shift_task.split, cfg)
    t = len(stopped.iterations)
    assert t < cfg.n_iter and stopped.iterations[-1].n_changed == 0
    longer = run(shift_task.features, shift_task.split,
                 replace(cfg, n_iter=t + 1, early_stop=False))
    np.testing.assert_array_equal(longer.final_labels, stopped.final_labels)
    assert longer.iterations[-1].n_changed == 0


def test_linear_kernel_consistency_small():
    agree = []
    for seed in range(3):
        ds = generate_synthetic(n_classes=3, per_class=10, seed=seed, dim=4,
                                rotation=10.0, offset=0.3)
        a = run(ds.features, ds.split, SolverConfig())
        b = run(ds.features, ds.split, SolverConfig(kernel="linear"))
        agree.append(np.mean(a.final_labels == b.final_labels))
    assert min(agree) >= 0.95


def test_rbf_kernel_runs(shift_task):
    report = run(shift_task.features, shift_task.split,
                 SolverConfig(kernel="rbf", k=5), shift_task.truth)
    assert 0.0 <= report.final_accuracy <= 1.0


def test_errors_carry_iteration(shift_task):
    with pytest.raises(ValueError, match="columns"):
        run(shift_task.features[:, :-1], shift_task.split)
    with pytest.raises(ValueError, match="truth"):
        run(shift_task.features, shift_task.split, truth=[1, 2])
