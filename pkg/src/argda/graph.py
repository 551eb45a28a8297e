"""kNN heat-kernel affinity, sub-domain attention maps and the attention
regularized normalized Laplacian.

Distances between sub-domains are squared distances between sub-domain
means in whatever representation the caller passes (raw features or a
projection).  Absent entries, i.e. pairs involving an empty sub-domain or
the diagonal ``c == r``, are stored as NaN.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .domain import DomainSplit, build_subdomain_index, check_features

DEGREE_EPS = 1e-12


@dataclass(frozen=True)
class Affinity:
    values: np.ndarray
    n_neighbors: int
    sigma: float


@dataclass(frozen=True)
class ArgLaplacian:
    """Normalized Laplacian of ``weights = W * AM`` with its degree vector."""

    values: np.ndarray
    degrees: np.ndarray
    weights: np.ndarray


def gram_sqdist(gram) -> np.ndarray:
    """Squared feature-space distances ``K_ii + K_jj - 2 K_ij`` from a Gram matrix."""
    K = np.asarray(gram, dtype=float)
    diag = np.diag(K)
    sq = diag[:, None] + diag[None, :] - 2.0 * K
    np.fill_diagonal(sq, 0.0)
    return np.maximum(sq, 0.0)


def _median_from_sqdist(sq):
    d = np.sqrt(sq[np.triu_indices_from(sq, k=1)])
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def median_bandwidth(features) -> float:
    """Median of nonzero pairwise Euclidean distances, 1.0 if there are none."""
    d = pdist(check_features(features).T)
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def build_affinity(features, n_neighbors: int = 5, sigma: float | None = None) -> Affinity:
    """Symmetric kNN graph with heat-kernel weights.

    An edge ``(i, j)`` exists when ``i`` is among the ``n_neighbors`` nearest
    neighbors of ``j`` or vice versa; neighbor ties go to the lower index.
    ``sigma=None`` selects the median heuristic.
    """
    X = check_features(features)
    return affinity_from_sqdist(squareform(pdist(X.T, "sqeuclidean")), n_neighbors, sigma)


def affinity_from_sqdist(sq, n_neighbors: int = 5, sigma: float | None = None) -> Affinity:
    """:func:`build_affinity` on a precomputed squared-distance matrix."""
    sq = np.asarray(sq, dtype=float)
    n = sq.shape[0]
    if not 1 <= n_neighbors <= n - 1:
        raise ValueError(f"n_neighbors must be in 1..{n - 1}, got {n_neighbors}")
    if sigma is None:
        sigma = _median_from_sqdist(sq)
    elif sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")

    ranked = sq.copy()
    np.fill_diagonal(ranked, np.inf)
    nearest = np.argsort(ranked, axis=1, kind="stable")[:, :n_neighbors]
    mask = np.zeros((n, n), dtype=bool)
    mask[np.repeat(np.arange(n), n_neighbors), nearest.ravel()] = True
    mask |= mask.T
    np.fill_diagonal(mask, False)

    W = np.where(mask, np.exp(-sq / (2.0 * sigma**2)), 0.0)
    return Affinity(W, n_neighbors, float(sigma))


def subdomain_distances(features, split: DomainSplit):
    """Squared mean distances between sub-domains.

    Returns
    -------
    intra : (C,) array
        Source class c vs target class c.
    rep_ss : (C, C) array
        Source class c vs source class r, r != c.
    rep_st : (C, C) array
        Source class c vs target class r, r != c.
    """
    X = check_features(features)
    index = build_subdomain_index(split).require_target()
    C = split.n_classes
    src = [X[:, idx].mean(axis=1) for idx in index.source]
    tgt = [X[:, idx].mean(axis=1) if len(idx) else None for idx in index.target]

    intra = np.full(C, np.nan)
    rep_ss = np.full((C, C), np.nan)
    rep_st = np.full((C, C), np.nan)
    for c in range(C):
        if tgt[c] is not None:
            intra[c] = np.sum((src[c] - tgt[c]) ** 2)
        for r in range(C):
            if r == c:
                continue
            rep_ss[c, r] = np.sum((src[c] - src[r]) ** 2)
            if tgt[r] is not None:
                rep_st[c, r] = np.sum((src[c] - tgt[r]) ** 2)
    return intra, rep_ss, rep_st


def subdomain_distances_gram(gram, split: DomainSplit):
    """:func:`subdomain_distances` in the feature space of a Gram matrix.

    The squared distance between the means of groups P and Q is ``e^T K e``
    with ``e = 1_P / |P| - 1_Q / |Q|``.
    """
    K = np.asarray(gram, dtype=float)
    index = build_subdomain_index(split).require_target()
    C = split.n_classes

    def dist(p, q):
        if len(p) == 0 or len(q) == 0:
            return np.nan
        e = np.zeros(K.shape[0])
        e[p] = 1.0 / len(p)
        e[q] -= 1.0 / len(q)
        return max(float(e @ K @ e), 0.0)

    intra = np.array([dist(index.source[c], index.target[c]) for c in range(C)])
    rep_ss = np.full((C, C), np.nan)
    rep_st = np.full((C, C), np.nan)
    for c in range(C):
        for r in range(C):
            if r != c:
                rep_ss[c, r] = dist(index.source[c], index.source[r])
                rep_st[c, r] = dist(index.source[c], index.target[r])
    return intra, rep_ss, rep_st


def _minmax(values, present, floor):
    out = np.ones_like(values, dtype=float)
    if not np.any(present):
        return out
    v = values[present]
    lo, hi = v.min(), v.max()
    if hi > lo:
        scaled = (v - lo) / (hi - lo)
        if floor is not None:
            scaled = floor + (1.0 - floor) * scaled
        out[present] = scaled
    return out


def _check_floor(floor):
    if floor is not None and not 0.0 <= floor <= 1.0:
        raise ValueError(f"attention floor must lie in [0, 1], got {floor}")


def attraction_attention(intra, floor: float | None = None) -> np.ndarray:
    """Min-max normalized intra-class distances.

    Absent (NaN) entries and a degenerate range map to 1.  ``floor``
    optionally remaps the normalized range to ``[floor, 1]``.
    """
    _check_floor(floor)
    d = np.asarray(intra, dtype=float)
    return _minmax(d, ~np.isnan(d), floor)


def repulsion_attention(rep_ss, rep_st, floor: float | None = None):
    """Min-max normalize both repulsion tables with one shared min and max."""
    _check_floor(floor)
    ss = np.asarray(rep_ss, dtype=float)
    st = np.asarray(rep_st, dtype=float)
    pooled = np.concatenate([ss.ravel(), st.ravel()])
    out = _minmax(pooled, ~np.isnan(pooled), floor)
    return out[: ss.size].reshape(ss.shape), out[ss.size:].reshape(st.shape)


def build_attention_map(split: DomainSplit, a_att, r_ss, r_st) -> np.ndarray:
    """Broadcast per-sub-domain attention to an ``(n, n)`` sample-pair map.

    Source c / target c pairs get ``a_att[c]``, source c / source r pairs get
    ``r_ss[c, r]``, source c / target r pairs get ``r_st[c, r]``; every other
    position (same sub-domain, target/target, diagonal) is 1.
    """
    if split.target_labels is None:
        raise ValueError("attention map requires target pseudo-labels")
    C = split.n_classes
    a_att = np.asarray(a_att, dtype=float)
    r_ss = np.asarray(r_ss, dtype=float)
    r_st = np.asarray(r_st, dtype=float)

    # blocks 0..C-1 are source sub-domains, C..2C-1 target sub-domains
    blocks = np.ones((2 * C, 2 * C))
    for c in range(C):
        blocks[c, C + c] = blocks[C + c, c] = a_att[c]
        for r in range(C):
            if r == c:
                continue
            blocks[c, r] = r_ss[c, r]
            blocks[c, C + r] = blocks[C + r, c] = r_st[c, r]
    group = np.concatenate([split.source_labels - 1, C + split.target_labels - 1])
    am = blocks[np.ix_(group, group)]
    return (am + am.T) / 2.0


def build_arg(weights, am=None) -> ArgLaplacian:
    """``I - D^{-1/2} (W * AM) D^{-1/2}`` with zero degrees guarded."""
    W = np.asarray(weights, dtype=float)
    if am is not None:
        am = np.asarray(am, dtype=float)
        if am.shape != W.shape:
            raise ValueError(f"attention map {am.shape} does not match affinity {W.shape}")
        W = W * am
    d = W.sum(axis=1)
    d = np.where(d > 0, d, DEGREE_EPS)
    s = 1.0 / np.sqrt(d)
    L = np.eye(W.shape[0]) - s[:, None] * W * s[None, :]
    # the scaling is symmetric only up to rounding
    return ArgLaplacian((L + L.T) / 2.0, d, W)


def attention_for(features, split: DomainSplit, floor: float | None = None,
                  gram: bool = False) -> np.ndarray:
    """Full attention map from sub-domain distances in ``features``.

    With ``gram=True``, ``features`` is a Gram matrix and distances are
    taken in its feature space.
    """
    if gram:
        intra, rep_ss, rep_st = subdomain_distances_gram(features, split)
    else:
        intra, rep_ss, rep_st = subdomain_distances(features, split)
    a_att = attraction_attention(intra, floor)
    r_ss, r_st = repulsion_attention(rep_ss, rep_st, floor)
    return build_attention_map(split, a_att, r_ss, r_st)
