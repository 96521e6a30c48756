"""Unsupervised topological link-prediction scores.

Four predictors are provided: common neighbors, Adamic/Adar (natural log),
preferential attachment (degree product), and PropFlow (bounded
outward-moving flow propagation over edge weights). PropFlow is directional:
``propflow(s, u, v, l)`` and ``propflow(s, v, u, l)`` may differ, so pair
scoring resolves the two orderings through a direction policy.

All predictors are pure functions of an immutable Snapshot; batch scoring is
embarrassingly parallel over pairs with output order restored by pair index.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataCorruptionError, InvalidPairError, UnknownNodeError

DIRECTION_POLICIES = ("mean", "max", "min", "list-both")

_ALIASES = {
    "cn": "common-neighbors",
    "aa": "adamic-adar",
    "pa": "preferential-attachment",
    "pf": "propflow",
}
_KINDS = ("common-neighbors", "adamic-adar", "preferential-attachment", "propflow")


@dataclass(frozen=True)
class PredictorId:
    """A predictor tag; propflow carries its hop bound ``l_max``."""

    kind: str
    l_max: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown predictor {self.kind!r}", field="predictors")
        if self.kind == "propflow":
            if self.l_max is None or self.l_max < 1:
                raise ConfigError("propflow needs l_max >= 1", field="predictors")
        elif self.l_max is not None:
            raise ConfigError(f"{self.kind} takes no l_max", field="predictors")

    @property
    def directional(self):
        return self.kind == "propflow"

    @property
    def name(self):
        if self.kind == "propflow":
            return f"propflow{self.l_max}"
        return self.kind

    @classmethod
    def parse(cls, text):
        """Parse ``"cn"``, ``"adamic-adar"``, ``"propflow:4"``, ``"pf:4"`` ..."""
        text = text.strip().lower()
        kind, _, arg = text.partition(":")
        kind = _ALIASES.get(kind, kind)
        if kind == "propflow":
            if not arg:
                raise ConfigError("propflow needs ':l_max' (e.g. propflow:4)",
                                  field="predictors")
            return cls(kind, int(arg))
        if arg:
            raise ConfigError(f"{kind} takes no argument", field="predictors")
        return cls(kind)


def _check_pair(u, v):
    if u == v:
        raise InvalidPairError(f"u == v == {u}")


def _check_known(s, u, query_mode):
    # Nodes of the interned universe score naturally even with no edges in
    # this window (degree 0); ids outside the universe are pipeline bugs in
    # recommendation mode and only tolerated under the query-mode adaptation.
    if not query_mode and not 0 <= u < s.n_universe:
        raise UnknownNodeError(
            f"node id {u} is outside the snapshot universe "
            "(enable query mode to score unknown nodes)")


def common_neighbors(s, u, v, query_mode=False):
    """|Γ(u) ∩ Γ(v)| as a float."""
    _check_pair(u, v)
    _check_known(s, u, query_mode)
    _check_known(s, v, query_mode)
    return float(np.intersect1d(s.neighbors(u), s.neighbors(v),
                                assume_unique=True).size)


def adamic_adar(s, u, v, query_mode=False):
    """Sum of 1/ln(deg(n)) over common neighbors n of u and v.

    A true common neighbor has degree >= 2 (it touches both u and v), so
    ln(deg) is never zero; a degree-1 common neighbor means the snapshot is
    corrupt and raises rather than returning infinity.
    """
    _check_pair(u, v)
    _check_known(s, u, query_mode)
    _check_known(s, v, query_mode)
    common = np.intersect1d(s.neighbors(u), s.neighbors(v), assume_unique=True)
    if common.size == 0:
        return 0.0
    degs = s.indptr[common + 1] - s.indptr[common]
    if np.any(degs < 2):
        raise DataCorruptionError("common neighbor with degree < 2")
    return float(np.sum(1.0 / np.log(degs)))


def preferential_attachment(s, u, v, query_mode=False):
    """deg(u) * deg(v); in query mode unknown nodes count as degree 1."""
    _check_pair(u, v)
    _check_known(s, u, query_mode)
    _check_known(s, v, query_mode)
    du, dv = s.degree(u), s.degree(v)
    if query_mode:
        du, dv = max(du, 1), max(dv, 1)
    return float(du * dv)


def bfs_levels(s, source, depth_limit=None):
    """Hop distance from ``source`` to every node; -1 where unreached."""
    levels = np.full(s.n_universe, -1, dtype=np.int64)
    if not 0 <= source < s.n_universe:
        return levels
    levels[source] = 0
    frontier = np.array([source], dtype=np.int64)
    depth = 0
    while frontier.size and (depth_limit is None or depth < depth_limit):
        nxt = []
        for u in frontier:
            nbrs = s.neighbors(u)
            nxt.append(nbrs[levels[nbrs] < 0])
            levels[nxt[-1]] = depth + 1
        frontier = np.unique(np.concatenate(nxt)) if nxt else np.empty(0, np.int64)
        depth += 1
    return levels


@dataclass(frozen=True)
class FlowAccounting:
    """Exact disposition of one unit of source flow after l_max hops."""

    absorbed: float     # arrived at the target (the PropFlow score)
    remaining: float    # parked at depth-l_max nodes, could still move
    dead_ended: float   # stuck at nodes with no outward edge

    @property
    def total(self):
        return self.absorbed + self.remaining + self.dead_ended


def propflow_accounting(s, source, target, l_max):
    """PropFlow with full conservation bookkeeping.

    One unit of flow starts at the source. At each hop a node passes its
    inflow to neighbors at strictly greater BFS depth, split proportionally
    to edge weight among those outward edges only. The target absorbs
    whatever reaches it (flow past the target could never return to it, so
    absorption does not change the score). absorbed + remaining + dead_ended
    is exactly 1.
    """
    _check_pair(source, target)
    if l_max < 1:
        raise ConfigError("l_max must be >= 1", field="propflow.l_max")
    if not s.contains(source):
        return FlowAccounting(0.0, 0.0, 1.0)
    levels = bfs_levels(s, source, depth_limit=l_max)
    inflow = np.zeros(s.n_universe, dtype=np.float64)
    inflow[source] = 1.0
    absorbed = 0.0
    dead_ended = 0.0
    order = np.argsort(levels, kind="stable")
    reached = order[levels[order] >= 0]  # by (level, node id): deterministic
    for u in reached:
        u = int(u)
        if u == target:
            absorbed = inflow[u]
            continue
        flow = inflow[u]
        if flow == 0.0 or levels[u] >= l_max:
            continue
        nbrs = s.neighbors(u)
        wts = s.neighbor_weights(u)
        fwd = levels[nbrs] == levels[u] + 1
        total = wts[fwd].sum()
        if total > 0.0:
            inflow[nbrs[fwd]] += flow * (wts[fwd] / total)
        else:
            dead_ended += flow
    remaining = float(inflow[(levels == l_max) & (np.arange(s.n_universe) != target)].sum())
    # Flow parked strictly below l_max at nodes with no outward edge was
    # already counted; unreached-target case leaves absorbed at 0.
    return FlowAccounting(float(absorbed), remaining, float(dead_ended))


def propflow(s, source, target, l_max, query_mode=False):
    """Flow absorbed at ``target`` within ``l_max`` hops, in [0, 1].

    Path predictors have no basis for nodes without feature-window edges;
    such sources or targets score 0 (query mode) rather than erroring.
    """
    _check_pair(source, target)
    _check_known(s, source, query_mode)
    _check_known(s, target, query_mode)
    if not (0 <= source < s.n_universe and 0 <= target < s.n_universe):
        return 0.0
    return propflow_accounting(s, source, target, l_max).absorbed


def propflow_all(s, source, l_max):
    """Inflow at every node from one outward propagation sweep.

    Because flow moves only to strictly greater BFS depths, the inflow a node
    accumulates is identical whether or not any other node absorbs, so one
    sweep yields ``propflow(s, source, t, l_max)`` for every target t.
    """
    inflow = np.zeros(s.n_universe, dtype=np.float64)
    if not s.contains(source):
        return inflow
    levels = bfs_levels(s, source, depth_limit=l_max)
    inflow[source] = 1.0
    order = np.argsort(levels, kind="stable")
    reached = order[levels[order] >= 0]
    for u in reached:
        u = int(u)
        flow = inflow[u]
        if flow == 0.0 or levels[u] >= l_max:
            continue
        nbrs = s.neighbors(u)
        wts = s.neighbor_weights(u)
        fwd = levels[nbrs] == levels[u] + 1
        total = wts[fwd].sum()
        if total > 0.0:
            inflow[nbrs[fwd]] += flow * (wts[fwd] / total)
    out = inflow.copy()
    out[source] = 0.0
    return out


def aggregate_directional(forward, reverse, policy):
    """Resolve the two orderings of a directional score to one ranking entry.

    ``mean``/``max``/``min`` return a single score; ``list-both`` returns the
    (forward, reverse) pair so each ordering ranks separately.
    """
    if policy == "mean":
        return (forward + reverse) / 2.0
    if policy == "max":
        return max(forward, reverse)
    if policy == "min":
        return min(forward, reverse)
    if policy == "list-both":
        return (forward, reverse)
    raise ConfigError(f"unknown direction policy {policy!r}", field="policy")


def _score_symmetric(s, u_arr, v_arr, predictor, query_mode):
    n = u_arr.size
    out = np.empty(n, dtype=np.float64)
    if predictor.kind == "preferential-attachment":
        degs = np.zeros(s.n_universe + 1, dtype=np.int64)
        degs[:s.n_universe] = s.degrees()
        in_universe = lambda a: np.where((a >= 0) & (a < s.n_universe), a,
                                         s.n_universe)
        du = degs[in_universe(u_arr)]
        dv = degs[in_universe(v_arr)]
        if query_mode:
            du, dv = np.maximum(du, 1), np.maximum(dv, 1)
        else:
            _validate_known(s, u_arr, v_arr)
        return (du * dv).astype(np.float64)
    fn = common_neighbors if predictor.kind == "common-neighbors" else adamic_adar
    for i in range(n):
        out[i] = fn(s, int(u_arr[i]), int(v_arr[i]), query_mode=query_mode)
    return out


def _validate_known(s, u_arr, v_arr):
    for arr in (u_arr, v_arr):
        for x in arr:
            _check_known(s, int(x), False)


def _propflow_directional(s, u_arr, v_arr, l_max, query_mode):
    """(forward, reverse) PropFlow for each pair, one sweep per distinct source."""
    if not query_mode:
        _validate_known(s, u_arr, v_arr)
    fwd = np.zeros(u_arr.size, dtype=np.float64)
    rev = np.zeros(u_arr.size, dtype=np.float64)
    for src_arr, dst_arr, out in ((u_arr, v_arr, fwd), (v_arr, u_arr, rev)):
        order = np.argsort(src_arr, kind="stable")
        i = 0
        while i < order.size:
            j = i
            src = int(src_arr[order[i]])
            while j < order.size and src_arr[order[j]] == src:
                j += 1
            inflow = propflow_all(s, src, l_max)
            idx = order[i:j]
            dst = dst_arr[idx]
            valid = (dst >= 0) & (dst < s.n_universe)
            out[idx[valid]] = inflow[dst[valid]]
            i = j
    return fwd, rev


def score_pairs(s, u_arr, v_arr, predictor, policy="mean", query_mode=False,
                threads=1):
    """Score unordered candidate pairs with one predictor.

    Returns ``(index, scores)`` where ``index`` maps each output row to its
    input pair. For symmetric predictors (and any policy other than
    list-both) index is 0..n-1; for a directional predictor under list-both
    each pair yields two rows, forward then reverse. Output is deterministic
    for a given (snapshot, predictor, policy) regardless of ``threads``.
    """
    u_arr = np.asarray(u_arr, dtype=np.int64)
    v_arr = np.asarray(v_arr, dtype=np.int64)
    if np.any(u_arr == v_arr):
        raise InvalidPairError("candidate pair with u == v")
    if policy not in DIRECTION_POLICIES:
        raise ConfigError(f"unknown direction policy {policy!r}", field="policy")

    def kernel(lo, hi):
        uu, vv = u_arr[lo:hi], v_arr[lo:hi]
        if predictor.kind == "propflow":
            return _propflow_directional(s, uu, vv, predictor.l_max, query_mode)
        sc = _score_symmetric(s, uu, vv, predictor, query_mode)
        return sc, sc

    n = u_arr.size
    workers = max(1, int(threads))
    if workers == 1 or n < 2 * workers:
        fwd, rev = kernel(0, n)
    else:
        bounds = np.linspace(0, n, workers + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda k: kernel(bounds[k], bounds[k + 1]),
                                  range(workers)))
        fwd = np.concatenate([p[0] for p in parts]) if parts else np.empty(0)
        rev = np.concatenate([p[1] for p in parts]) if parts else np.empty(0)

    if policy == "list-both":
        index = np.repeat(np.arange(n, dtype=np.int64), 2)
        scores = np.empty(2 * n, dtype=np.float64)
        scores[0::2] = fwd
        scores[1::2] = rev
        return index, scores
    if policy == "mean":
        scores = (fwd + rev) / 2.0
    elif policy == "max":
        scores = np.maximum(fwd, rev)
    else:
        scores = np.minimum(fwd, rev)
    return np.arange(n, dtype=np.int64), scores


def score_instances(s, instances, predictor, policy="mean", query_mode=False,
                    threads=1):
    """Attach a score column (named after the predictor) to an instance set.

    Under list-both with a directional predictor the instance rows are
    duplicated, one per ordering.
    """
    index, scores = score_pairs(s, instances.u, instances.v, predictor,
                                policy=policy, query_mode=query_mode,
                                threads=threads)
    expanded = instances.take(index)
    expanded.scores[predictor.name] = scores
    return expanded
