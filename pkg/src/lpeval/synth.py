"""Bundled synthetic event-log generator.

Grows a sparse undirected network with tunable locality: each new edge
either closes a length-2 path (triadic closure, probability ``locality``) or
joins a uniformly random non-adjacent pair. Event timestamps ramp linearly
over the horizon, so any window split yields a feature network from the
early events and a label network from the late ones, with new links
concentrated at short geodesic distances when locality is high.
"""

from __future__ import annotations

import numpy as np

from . import rng as rng_mod
from .errors import ConfigError
from .graphstore import EventLog
from .rng import substream


def synthetic_event_log(n_nodes, mean_degree=4.0, horizon=100, locality=0.8,
                        seed=0, id_prefix="n"):
    """Generate a pairwise event log of ~``mean_degree * n / 2`` edges."""
    if n_nodes < 3:
        raise ConfigError("need at least 3 nodes", field="synth.nodes")
    if not 0 <= locality <= 1:
        raise ConfigError("locality must be in [0, 1]", field="synth.locality")
    target_edges = max(n_nodes - 1, int(round(mean_degree * n_nodes / 2)))
    max_edges = n_nodes * (n_nodes - 1) // 2
    if target_edges > max_edges:
        raise ConfigError("mean_degree too high for the node count",
                          field="synth.mean_degree")
    rng = substream(seed, rng_mod.STREAM_SYNTH)

    adj = [set() for _ in range(n_nodes)]
    edges = []

    def connect(a, b):
        adj[a].add(b)
        adj[b].add(a)
        edges.append((a, b))

    # Connected backbone: a random chain.
    chain = rng.permutation(n_nodes)
    for i in range(n_nodes - 1):
        connect(int(chain[i]), int(chain[i + 1]))

    def random_missing_pair():
        while True:
            a = int(rng.integers(n_nodes))
            b = int(rng.integers(n_nodes))
            if a != b and b not in adj[a]:
                return a, b

    def triadic_pair():
        # Close a 2-path a - x - b; fall back to a random pair when the
        # sampled wedge is already closed.
        for _ in range(8):
            a = int(rng.integers(n_nodes))
            if not adj[a]:
                continue
            x = int(rng.choice(sorted(adj[a])))
            choices = sorted(adj[x] - adj[a] - {a})
            if choices:
                return a, int(rng.choice(choices))
        return random_missing_pair()

    while len(edges) < target_edges:
        if rng.random() < locality:
            a, b = triadic_pair()
        else:
            a, b = random_missing_pair()
        connect(a, b)

    width = len(str(n_nodes - 1))
    labels = [f"{id_prefix}{i:0{width}d}" for i in range(n_nodes)]
    total = len(edges)
    events = [(int(i * (horizon + 1) / total), (a, b), None)
              for i, (a, b) in enumerate(edges)]
    return EventLog.from_tuples(events, id_labels=labels)


def write_event_file(log, path):
    """Write a log back out in the pair-event text format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# pair events: src<TAB>dst<TAB>timestamp\n")
        for i in range(log.n_events):
            parts = log.participants(i)
            if parts.size != 2:
                raise ConfigError("pair format cannot hold k-clique events")
            a, b = log.id_labels[parts[0]], log.id_labels[parts[1]]
            fh.write(f"{a}\t{b}\t{int(log.timestamps[i])}\n")
