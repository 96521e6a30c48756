"""Candidate-pair enumeration, geodesic stratification, and labeling.

Candidate pairs are non-adjacent unordered node pairs of a feature snapshot,
partitioned by shortest-path distance: finite buckets 2..L_max, plus two
sentinel buckets for pairs farther than L_max in the same component
(``BEYOND``) and pairs in different components or involving feature-unknown
nodes (``DISCONNECTED``). Sentinels are large integers so any finite
distance sorts and compares below them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IngestError
from .predictors import bfs_levels

BEYOND = 1_000_000_000
DISCONNECTED = 2_000_000_000

GENERATION_MODES = ("recommendation", "query")


def distance_str(d):
    if d == BEYOND:
        return "beyond"
    if d == DISCONNECTED:
        return "disconnected"
    return str(int(d))


def parse_distance(text):
    text = text.strip()
    if text == "beyond":
        return BEYOND
    if text == "disconnected":
        return DISCONNECTED
    return int(text)


@dataclass
class InstanceSet:
    """Column-oriented set of candidate pairs (u < v canonical).

    ``label`` is None for unlabeled candidates. ``scores`` maps predictor
    names to per-row score arrays. Rows keep a stable (distance, u, v) order
    as produced by enumeration; subsetting preserves row order.
    """

    u: np.ndarray
    v: np.ndarray
    distance: np.ndarray
    label: np.ndarray | None = None
    scores: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.int64)
        self.v = np.asarray(self.v, dtype=np.int64)
        self.distance = np.asarray(self.distance, dtype=np.int64)
        if self.label is not None:
            self.label = np.asarray(self.label, dtype=bool)

    def __len__(self):
        return int(self.u.size)

    @property
    def n_pos(self):
        return 0 if self.label is None else int(self.label.sum())

    @property
    def n_neg(self):
        return 0 if self.label is None else int((~self.label).sum())

    def take(self, index):
        return InstanceSet(
            self.u[index], self.v[index], self.distance[index],
            None if self.label is None else self.label[index],
            {k: s[index] for k, s in self.scores.items()})

    def subset(self, mask):
        return self.take(np.flatnonzero(mask))

    def pair_keys(self, n_universe):
        return self.u * np.int64(n_universe) + self.v


def geodesic_bucket_enumerate(s, l_max, include_beyond=False,
                              include_disconnected=False):
    """Enumerate candidate pairs grouped by geodesic distance.

    Per-source breadth-first expansion bounded at ``l_max`` (unbounded when
    the beyond bucket is requested) emits each unordered non-adjacent pair
    exactly once, ordered by (distance, u, v). Cross-component pairs go to
    the disconnected bucket on request.
    """
    if l_max < 2:
        raise ConfigError("l_max must be >= 2", field="lmax")
    nodes = s.node_ids
    us, vs, ds = [], [], []
    depth_limit = None if include_beyond else l_max
    for u in nodes:
        u = int(u)
        levels = bfs_levels(s, u, depth_limit=depth_limit)
        candidates = nodes[nodes > u]
        lv = levels[candidates]
        finite = (lv >= 2) & (lv <= l_max)
        if np.any(finite):
            us.append(np.full(int(finite.sum()), u, dtype=np.int64))
            vs.append(candidates[finite])
            ds.append(lv[finite])
        if include_beyond:
            far = lv > l_max
            if np.any(far):
                us.append(np.full(int(far.sum()), u, dtype=np.int64))
                vs.append(candidates[far])
                ds.append(np.full(int(far.sum()), BEYOND, dtype=np.int64))
        if include_disconnected:
            missing = lv < 0
            if np.any(missing):
                us.append(np.full(int(missing.sum()), u, dtype=np.int64))
                vs.append(candidates[missing])
                ds.append(np.full(int(missing.sum()), DISCONNECTED, dtype=np.int64))
    if not us:
        empty = np.empty(0, dtype=np.int64)
        return InstanceSet(empty, empty, empty)
    u_arr = np.concatenate(us)
    v_arr = np.concatenate(vs)
    d_arr = np.concatenate(ds)
    order = np.lexsort((v_arr, u_arr, d_arr))
    return InstanceSet(u_arr[order], v_arr[order], d_arr[order])


def label_instances(candidates, label_snapshot):
    """Label each candidate positive iff it is an edge of the label snapshot."""
    n = max(label_snapshot.n_universe, 1)
    eu, ev, _ = label_snapshot.edge_arrays()
    edge_keys = eu * np.int64(n) + ev
    lo = np.minimum(candidates.u, candidates.v)
    hi = np.maximum(candidates.u, candidates.v)
    in_range = (lo >= 0) & (hi < n)
    keys = np.where(in_range, lo * np.int64(n) + hi, -1)
    labels = np.isin(keys, edge_keys)
    return InstanceSet(candidates.u, candidates.v, candidates.distance, labels,
                       dict(candidates.scores))


def generate_test_set(feature, label, mode="recommendation", l_max=2,
                      include_beyond=True, include_disconnected=True):
    """Build the labeled evaluation instance set for one window pair.

    recommendation mode draws candidate pairs from the feature snapshot's
    nodes only: links involving nodes first seen in the label period are
    unforeseeable and excluded. query mode adds pairs touching label-period
    nodes unknown to the feature snapshot; such pairs have no feature-side
    path, so they land in the disconnected bucket.
    """
    if mode not in GENERATION_MODES:
        raise ConfigError(f"unknown generation mode {mode!r}", field="mode")
    cands = geodesic_bucket_enumerate(feature, l_max,
                                      include_beyond=include_beyond,
                                      include_disconnected=include_disconnected)
    if mode == "query":
        feat_nodes = set(feature.node_ids.tolist())
        new_nodes = sorted(set(label.node_ids.tolist()) - feat_nodes)
        if new_nodes and include_disconnected:
            old = np.asarray(sorted(feat_nodes), dtype=np.int64)
            new = np.asarray(new_nodes, dtype=np.int64)
            extra_u, extra_v = [], []
            for i, x in enumerate(new):
                mates = np.concatenate([old, new[i + 1:]])
                extra_u.append(np.minimum(x, mates))
                extra_v.append(np.maximum(x, mates))
            eu = np.concatenate([cands.u] + extra_u)
            ev = np.concatenate([cands.v] + extra_v)
            ed = np.concatenate([cands.distance,
                                 np.full(sum(a.size for a in extra_u),
                                         DISCONNECTED, dtype=np.int64)])
            order = np.lexsort((ev, eu, ed))
            cands = InstanceSet(eu[order], ev[order], ed[order])
    return label_instances(cands, label)


def new_link_distance_distribution(feature, label):
    """Empirical distribution of prior geodesic distance over new links.

    Considers label-snapshot edges whose endpoints both exist in the feature
    snapshot and that are not already feature edges; returns a dict mapping
    distance (finite hop count or DISCONNECTED) to probability. Empty when
    no such edge exists.
    """
    eu, ev, _ = label.edge_arrays()
    counts = {}
    cache = {}
    feature_edges = feature.edge_key_set()
    n = feature.n_universe
    for a, b in zip(eu.tolist(), ev.tolist()):
        if not (feature.contains(a) and feature.contains(b)):
            continue
        if a * n + b in feature_edges:
            continue
        if a not in cache:
            cache[a] = bfs_levels(feature, a)
        d = int(cache[a][b])
        d = DISCONNECTED if d < 0 else d
        counts[d] = counts.get(d, 0) + 1
    total = sum(counts.values())
    return {d: c / total for d, c in sorted(counts.items())}


def write_instances_csv(path_or_file, instances, id_labels=None, score_keys=None):
    """Write ``u,v,distance,label[,score...]`` rows.

    Distance uses the bucket names for sentinels; the label column is empty
    for unlabeled candidates. Score columns follow in the given key order.
    """
    keys = list(score_keys if score_keys is not None else instances.scores)
    name = (lambda i: id_labels[i]) if id_labels is not None else str
    header = ["u", "v", "distance", "label"] + (["score"] if len(keys) == 1
                                                else [f"score_{k}" for k in keys])

    def rows():
        yield ",".join(header) + "\n"
        for i in range(len(instances)):
            cells = [name(int(instances.u[i])), name(int(instances.v[i])),
                     distance_str(int(instances.distance[i])),
                     "" if instances.label is None else str(int(instances.label[i]))]
            cells += [repr(float(instances.scores[k][i])) for k in keys]
            yield ",".join(cells) + "\n"

    if hasattr(path_or_file, "write"):
        path_or_file.writelines(rows())
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.writelines(rows())


def read_instances_csv(path_or_file, id_index=None):
    """Read instances written by :func:`write_instances_csv`.

    Third-party score files in the same format are accepted, which is how
    externally produced (e.g. supervised) predictors enter the evaluation
    pipeline. ``id_index`` maps external id strings to interned ints; without
    it ids must already be integers.
    """
    close = False
    if hasattr(path_or_file, "read"):
        fh = path_or_file
    else:
        fh = open(path_or_file, "r", encoding="utf-8", newline="")
        close = True
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != ["u", "v", "distance", "label"]:
            raise IngestError("expected header u,v,distance,label[,score...]", line=1)
        score_names = [h[6:] if h.startswith("score_") else "score"
                       for h in header[4:]]
        us, vs, ds, ls = [], [], [], []
        score_cols = [[] for _ in score_names]
        have_labels = True
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(f"expected {len(header)} fields", line=line_no)
            try:
                u = int(row[0]) if id_index is None else id_index[row[0]]
                v = int(row[1]) if id_index is None else id_index[row[1]]
                d = parse_distance(row[2])
                if row[3] == "":
                    have_labels = False
                else:
                    ls.append(bool(int(row[3])))
                for col, cell in zip(score_cols, row[4:]):
                    col.append(float(cell))
            except (KeyError, ValueError) as exc:
                raise IngestError(str(exc), line=line_no) from None
            us.append(u)
            vs.append(v)
            ds.append(d)
        label = np.asarray(ls, dtype=bool) if have_labels and us else None
        inst = InstanceSet(np.asarray(us, dtype=np.int64),
                           np.asarray(vs, dtype=np.int64),
                           np.asarray(ds, dtype=np.int64), label)
        for nm, col in zip(score_names, score_cols):
            inst.scores[nm] = np.asarray(col, dtype=np.float64)
        return inst
    finally:
        if close:
            fh.close()
