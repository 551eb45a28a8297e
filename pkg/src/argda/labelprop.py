"""Closed-form label propagation over an attention-modulated graph."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .domain import DomainSplit

DEGREE_EPS = 1e-12


@dataclass(frozen=True)
class PropagationResult:
    soft_labels: np.ndarray
    target_labels: np.ndarray
    alpha: float


def build_y0(split: DomainSplit) -> np.ndarray:
    """One-hot initial label matrix: source ground truth, target pseudo-labels."""
    if split.target_labels is None:
        raise ValueError("initial label matrix requires target pseudo-labels")
    y = split.labels()
    Y0 = np.zeros((split.n, split.n_classes))
    Y0[np.arange(split.n), y - 1] = 1.0
    return Y0


def propagate(weights, y0, alpha: float, n_source: int) -> PropagationResult:
    """Solve ``(D + eps I - alpha W) Y = Y0`` and label the target rows.

    Rows ``n_source:`` are the target samples; each gets the argmax class
    (1-based, lowest id on ties).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    W = np.asarray(weights, dtype=float)
    Y0 = np.asarray(y0, dtype=float)
    n = W.shape[0]
    if W.shape != (n, n) or Y0.shape[0] != n:
        raise ValueError(f"shape mismatch: W {W.shape}, Y0 {Y0.shape}")
    if np.any(W < 0):
        raise ValueError("affinity weights must be nonnegative")
    if not 0 <= n_source < n:
        raise ValueError(f"n_source must be in 0..{n - 1}, got {n_source}")

    system = np.diag(W.sum(axis=1) + DEGREE_EPS) - alpha * W
    try:
        Y = scipy.linalg.solve(system, Y0, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise np.linalg.LinAlgError(f"label propagation solve failed: {exc}") from exc
    target = np.argmax(Y[n_source:], axis=1) + 1
    return PropagationResult(Y, target, float(alpha))
