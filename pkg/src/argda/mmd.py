"""MMD coefficient matrices.

Every matrix here is a sum of outer products ``e e^T`` where ``e`` puts
``1/|P|`` on the samples of one group ``P`` and ``-1/|Q|`` on the samples
of another group ``Q``.  For such a matrix ``M``,
``tr(A^T X M X^T A) = ||mean(A^T X_P) - mean(A^T X_Q)||^2``.
"""
import numpy as np

from .domain import DomainSplit, build_subdomain_index

DIRECTIONS = ("st", "ts", "ss")


def _add_pair(M, pos, neg):
    """Accumulate the outer product for groups ``pos`` and ``neg`` into M."""
    if len(pos) == 0 or len(neg) == 0:
        return
    e = np.zeros(M.shape[0])
    e[pos] = 1.0 / len(pos)
    e[neg] = -1.0 / len(neg)
    M += np.outer(e, e)


def build_m0(split: DomainSplit) -> np.ndarray:
    """Marginal MMD matrix between the whole source and target domains."""
    M = np.zeros((split.n, split.n))
    _add_pair(M, np.arange(split.n_source), np.arange(split.n_source, split.n))
    return M


def build_mc(split: DomainSplit, c: int) -> np.ndarray:
    """Conditional MMD matrix between source and target sub-domains of class c.

    All zeros when the target sub-domain is empty.
    """
    if not 1 <= c <= split.n_classes:
        raise ValueError(f"class id {c} outside 1..{split.n_classes}")
    index = build_subdomain_index(split)
    if index.n_source(c) == 0:
        raise ValueError(f"class {c} has no source samples")
    M = np.zeros((split.n, split.n))
    _add_pair(M, index.source[c - 1], index.target[c - 1])
    return M


def build_repulsive(split: DomainSplit, direction: str) -> np.ndarray:
    """Repulsive-force matrix summed over all ordered class pairs (c, r), r != c.

    ``direction`` is ``"st"`` (source c vs target r), ``"ts"`` (target c vs
    source r) or ``"ss"`` (source c vs source r).
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    index = build_subdomain_index(split)
    if direction in ("st", "ts"):
        index.require_target()
    first, second = {
        "st": (index.source, index.target),
        "ts": (index.target, index.source),
        "ss": (index.source, index.source),
    }[direction]
    M = np.zeros((split.n, split.n))
    C = split.n_classes
    for c in range(C):
        for r in range(C):
            if r != c:
                _add_pair(M, first[c], second[r])
    return M


def assemble_mstar(split: DomainSplit, use_repulsive: bool = True) -> np.ndarray:
    """``M0 + sum_c Mc - (M_st + M_ts + M_ss)``; the repulsive block is
    dropped when ``use_repulsive`` is False."""
    index = build_subdomain_index(split).require_target()
    M = build_m0(split)
    for c in range(split.n_classes):
        _add_pair(M, index.source[c], index.target[c])
    if use_repulsive:
        for direction in DIRECTIONS:
            M -= build_repulsive(split, direction)
    return M
