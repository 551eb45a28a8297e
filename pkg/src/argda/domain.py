"""Core data types: feature matrices, source/target splits and sub-domains.

Samples are stored column-wise, so a dataset of ``n`` samples with ``l``
features is an ``(l, n)`` array with the ``n_s`` source samples first and
the ``n_t`` target samples after them.  Class ids are dense integers
``1..C``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist


def check_features(features) -> np.ndarray:
    """Validate and return a float ``(l, n)`` feature matrix."""
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {X.shape}")
    l, n = X.shape
    if l < 1 or n < 2:
        raise ValueError(f"feature matrix needs l >= 1 and n >= 2, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains NaN or Inf entries")
    return X


def _check_labels(labels, n_classes, what):
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ValueError(f"{what} must be a 1-D vector")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError(f"{what} must hold integer class ids")
    y = y.astype(int)
    if y.size and (y.min() < 1 or y.max() > n_classes):
        raise ValueError(f"{what} must lie in 1..{n_classes}")
    return y


@dataclass(frozen=True)
class DomainSplit:
    """Bookkeeping for which columns are source or target, and their labels.

    ``target_labels`` holds pseudo-labels (or is ``None`` before the first
    pseudo-labeling pass).
    """

    n_source: int
    n_target: int
    n_classes: int
    source_labels: np.ndarray
    target_labels: np.ndarray | None = None

    def __post_init__(self):
        if self.n_source < 1 or self.n_target < 1:
            raise ValueError("both domains need at least one sample")
        if self.n_classes < 1:
            raise ValueError("n_classes must be positive")
        ys = _check_labels(self.source_labels, self.n_classes, "source labels")
        if ys.size != self.n_source:
            raise ValueError(
                f"expected {self.n_source} source labels, got {ys.size}"
            )
        counts = np.bincount(ys, minlength=self.n_classes + 1)[1:]
        if np.any(counts == 0):
            missing = [int(c) + 1 for c in np.flatnonzero(counts == 0)]
            raise ValueError(f"classes without source samples: {missing}")
        ys.setflags(write=False)
        object.__setattr__(self, "source_labels", ys)
        if self.target_labels is not None:
            yt = _check_labels(self.target_labels, self.n_classes, "target labels")
            if yt.size != self.n_target:
                raise ValueError(
                    f"expected {self.n_target} target labels, got {yt.size}"
                )
            yt.setflags(write=False)
            object.__setattr__(self, "target_labels", yt)

    @property
    def n(self) -> int:
        return self.n_source + self.n_target

    @property
    def has_target_labels(self) -> bool:
        return self.target_labels is not None

    def with_target_labels(self, target_labels) -> "DomainSplit":
        return DomainSplit(
            self.n_source, self.n_target, self.n_classes,
            self.source_labels, np.asarray(target_labels),
        )

    def labels(self) -> np.ndarray:
        """Concatenated source + target label vector (length ``n``)."""
        if self.target_labels is None:
            raise ValueError("target pseudo-labels are required")
        return np.concatenate([self.source_labels, self.target_labels])


@dataclass(frozen=True)
class SubdomainIndex:
    """Column indices (0-based) of every source and target sub-domain.

    ``source[c - 1]`` and ``target[c - 1]`` hold the indices of class ``c``.
    When the split carried no target labels every target set is empty and
    ``has_target_labels`` is False.
    """

    source: tuple
    target: tuple
    has_target_labels: bool
    n_classes: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_classes", len(self.source))

    def n_source(self, c: int) -> int:
        return len(self.source[c - 1])

    def n_target(self, c: int) -> int:
        return len(self.target[c - 1])

    def require_target(self):
        if not self.has_target_labels:
            raise ValueError("operation requires target pseudo-labels")
        return self


def build_subdomain_index(split: DomainSplit) -> SubdomainIndex:
    classes = range(1, split.n_classes + 1)
    source = tuple(np.flatnonzero(split.source_labels == c) for c in classes)
    if split.target_labels is None:
        empty = np.zeros(0, dtype=int)
        target = tuple(empty for _ in classes)
    else:
        target = tuple(
            split.n_source + np.flatnonzero(split.target_labels == c)
            for c in classes
        )
    return SubdomainIndex(source, target, split.target_labels is not None)


def nn_pseudo_label(features, split: DomainSplit) -> np.ndarray:
    """1-NN labels for the target columns using the labeled source columns.

    Ties go to the lowest source column index.
    """
    X = check_features(features)
    if X.shape[1] != split.n:
        raise ValueError(f"feature matrix has {X.shape[1]} columns, split has {split.n}")
    Xs = X[:, : split.n_source].T
    Xt = X[:, split.n_source:].T
    d = cdist(Xt, Xs, "sqeuclidean")
    # argmin returns the first minimum, i.e. the lowest source index
    return split.source_labels[np.argmin(d, axis=1)].copy()


def accuracy(predicted, truth) -> float:
    p = np.asarray(predicted)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"label vectors differ in shape: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("accuracy of an empty label vector is undefined")
    return float(np.mean(p == t))
