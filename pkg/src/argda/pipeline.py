"""Iterative ARG-DA solver and its ablation variants.

Each outer iteration rebuilds the MMD matrices from the current target
pseudo-labels, solves the projection eigenproblem (stage 1), then builds a
graph in the projected space and propagates labels over it (stage 2).
"""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import graph
from .domain import DomainSplit, accuracy, check_features, nn_pseudo_label
from .eigsolve import assemble_pencil, project, solve_generalized
from .labelprop import build_y0, propagate
from .mmd import assemble_mstar, build_m0

log = logging.getLogger(__name__)


class Variant(str, enum.Enum):
    DGA_DA = "dga-da"
    DGA_PLUS_F = "dga+f"
    DGA_PLUS_A = "dga+a"
    ARG_DA = "arg-da"


# (stage-1 graph in the projection objective, stage-2 graph for propagation)
_VARIANT_TERMS = {
    Variant.DGA_DA: ("none", "plain"),
    Variant.DGA_PLUS_F: ("plain", "plain"),
    Variant.DGA_PLUS_A: ("none", "arg"),
    Variant.ARG_DA: ("arg", "arg"),
}

KERNELS = ("none", "linear", "rbf")


def variant_terms(variant) -> tuple[str, str]:
    return _VARIANT_TERMS[Variant(variant)]


def build_kernel(features, kind: str = "linear", sigma: float | None = None) -> np.ndarray:
    """Gram matrix over the columns of ``features``.

    ``rbf`` uses ``exp(-||x_i - x_j||^2 / (2 sigma^2))`` with the median
    pairwise distance as the default bandwidth.
    """
    X = check_features(features)
    if kind == "linear":
        K = X.T @ X
    elif kind == "rbf":
        if sigma is None:
            sigma = graph.median_bandwidth(X)
        elif sigma <= 0:
            raise ValueError(f"kernel bandwidth must be positive, got {sigma}")
        K = np.exp(-cdist(X.T, X.T, "sqeuclidean") / (2.0 * sigma**2))
    else:
        raise ValueError(f"unknown kernel {kind!r}; expected 'linear' or 'rbf'")
    return (K + K.T) / 2.0


@dataclass(frozen=True)
class SolverConfig:
    """Hyper-parameters.  Defaults follow the shallow-feature setting
    (k=200, lambda=0.1, alpha=0.9); use lam=1.0 for deep features."""

    k: int = 200
    lam: float = 0.1
    alpha: float = 0.9
    n_iter: int = 10
    n_neighbors: int = 5
    sigma: float | None = None
    kernel: str = "none"
    kernel_sigma: float | None = None
    variant: Variant = Variant.ARG_DA
    use_repulsive: bool = True
    attention_floor: float | None = None
    uniform_attention: bool = False
    early_stop: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be >= 1, got {self.n_iter}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.n_neighbors < 1:
            raise ValueError(f"n_neighbors must be >= 1, got {self.n_neighbors}")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.attention_floor is not None and not 0 <= self.attention_floor <= 1:
            raise ValueError("attention_floor must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d


@dataclass
class IterationRecord:
    iteration: int
    accuracy: float | None
    n_changed: int
    eigenvalue_sum: float


@dataclass
class RunReport:
    iterations: list[IterationRecord] = field(default_factory=list)
    final_labels: np.ndarray | None = None
    elapsed: float = 0.0
    config: dict | None = None

    @property
    def final_accuracy(self) -> float | None:
        return self.iterations[-1].accuracy if self.iterations else None


def _graph_term(kind, features, split, config, affinity=None, gram=False):
    """Laplacian for one stage: None, plain normalized, or attention-regularized.

    ``gram=True`` means ``features`` is a Gram matrix; distances are then
    taken in the kernel's feature space.
    """
    if kind == "none":
        return None
    if affinity is None:
        affinity = graph.build_affinity(features, _neighbors(config, split.n), config.sigma)
    if kind == "plain" or config.uniform_attention:
        am = None
    else:
        am = graph.attention_for(features, split, config.attention_floor, gram=gram)
    return graph.build_arg(affinity.values, am)


def _neighbors(config, n):
    return min(config.n_neighbors, n - 1)


def run(features, split: DomainSplit, config: SolverConfig | None = None,
        truth=None) -> RunReport:
    """Run the alternating projection / propagation loop.

    The first pass uses only the marginal MMD matrix; later passes use the
    full discriminative matrix built from the current pseudo-labels.  The
    loop stops after ``config.n_iter`` passes, or earlier once a pass leaves
    the pseudo-labels unchanged.
    """
    config = config or SolverConfig()
    X = check_features(features)
    if X.shape[1] != split.n:
        raise ValueError(f"feature matrix has {X.shape[1]} columns, split has {split.n}")
    if truth is not None:
        truth = np.asarray(truth, dtype=int)
        if truth.shape != (split.n_target,):
            raise ValueError(f"truth must have {split.n_target} labels")
    stage1, stage2 = variant_terms(config.variant)

    start = time.perf_counter()
    kernelized = config.kernel != "none"
    data = build_kernel(X, config.kernel, config.kernel_sigma) if kernelized else X
    k = min(config.k, data.shape[0])
    stage1_affinity = None
    if stage1 != "none":
        # the stage-1 graph lives in the original (or kernel feature) space
        p = _neighbors(config, split.n)
        if kernelized:
            stage1_affinity = graph.affinity_from_sqdist(graph.gram_sqdist(data), p, config.sigma)
        else:
            stage1_affinity = graph.build_affinity(data, p, config.sigma)

    pseudo = nn_pseudo_label(X, split)
    report = RunReport(config=config.to_dict())
    for it in range(1, config.n_iter + 1):
        current = split.with_target_labels(pseudo)
        try:
            mstar = build_m0(current) if it == 1 else assemble_mstar(current, config.use_repulsive)
            g1 = _graph_term(stage1, data, current, config, stage1_affinity, kernelized)
            S1, S2 = assemble_pencil(data, mstar, None if g1 is None else g1.values, config.lam)
            proj = solve_generalized(S1, S2, k)
            Z = project(data, proj)
            g2 = _graph_term(stage2, Z, current, config)
            result = propagate(g2.weights, build_y0(current), config.alpha, split.n_source)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise type(exc)(f"iteration {it}: {exc}") from exc

        n_changed = int(np.sum(result.target_labels != pseudo))
        pseudo = result.target_labels
        acc = accuracy(pseudo, truth) if truth is not None else None
        report.iterations.append(
            IterationRecord(it, acc, n_changed, float(np.sum(proj.eigenvalues)))
        )
        log.debug("iteration %d: changed=%d accuracy=%s", it, n_changed, acc)
        # pass 1 uses M0 only, so its output is not a fixed point of later passes
        if config.early_stop and it > 1 and n_changed == 0:
            break

    report.final_labels = pseudo
    report.elapsed = time.perf_counter() - start
    return report
