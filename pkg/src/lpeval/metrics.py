"""Ranking metrics: confusion rates, TPR_K, ROC and PR threshold curves.

Tie handling is uniform across every function here: a run of equal scores is
atomic. Rank cuts never split a run (integer cuts move to the run boundary;
interpolated cuts give the run fractional credit), the ROC curve crosses a
run as a single diagonal segment, and the PR curve follows the
achievable-point interpolation where false positives grow linearly in true
positives between achievable cuts. Under that interpolation the area has a
closed form, which is what :func:`pr_curve` integrates.

AUROC equals the rank statistic -- the probability that a random positive
outranks a random negative, ties half credit -- exactly: areas are
accumulated in integer arithmetic before the final division.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UndefinedMetricError

TIE_POLICY = "group-atomic"

RATE_NAMES = ("sensitivity", "specificity", "precision", "recall", "fallout",
              "accuracy")


class Ranking:
    """Scored labeled instances sorted by score descending.

    ``bounds`` holds the rank cuts at tie-group boundaries (0, ..., n);
    ``tp``/``fp`` the cumulative positive/negative counts at those cuts.
    """

    def __init__(self, scores, labels):
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels, dtype=bool)
        if scores.size == 0:
            raise UndefinedMetricError("empty ranking")
        if scores.shape != labels.shape:
            raise ConfigError("scores and labels must have equal length")
        if np.any(np.isnan(scores)):
            raise ConfigError("NaN scores are forbidden")
        order = np.argsort(-scores, kind="stable")
        self.scores = scores[order]
        self.labels = labels[order]
        change = np.flatnonzero(self.scores[1:] != self.scores[:-1]) + 1
        self.bounds = np.concatenate([[0], change, [scores.size]]).astype(np.int64)
        ctp = np.cumsum(self.labels.astype(np.int64))
        self.tp = np.concatenate([[0], ctp[self.bounds[1:] - 1]]).astype(np.int64)
        self.fp = self.bounds - self.tp

    def __len__(self):
        return int(self.scores.size)

    @property
    def n_pos(self):
        return int(self.tp[-1])

    @property
    def n_neg(self):
        return int(self.fp[-1])

    def threshold_scores(self):
        """Score at the top of each tie group, one per non-origin boundary."""
        return self.scores[self.bounds[:-1]]


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts at a rank cut: everything above predicted positive.

    Fields are floats so interpolated (fractional tie credit) cuts are
    representable; integer cuts carry whole numbers. tp + fn equals the
    positive count and fp + tn the negative count by construction.
    """

    tp: float
    fp: float
    tn: float
    fn: float

    @property
    def cut(self):
        return self.tp + self.fp


def confusion_at(rank, cut, ties="ceil"):
    """Confusion counts with the top ``cut`` entries predicted positive.

    A cut inside a tie group cannot be realized by a score threshold:
    ``ceil`` (default) and ``floor`` move it to the nearest group boundary
    above/below (the effective cut is readable as ``result.cut``), while
    ``interpolate`` keeps the requested cut and assigns the straddled group
    expected-value fractional credit.
    """
    if not 0 <= cut <= len(rank):
        raise ConfigError(f"cut {cut} outside [0, {len(rank)}]")
    bounds, tp, fp = rank.bounds, rank.tp, rank.fp
    j = int(np.searchsorted(bounds, cut, side="left"))
    if bounds[j] == cut:
        ctp, cfp = float(tp[j]), float(fp[j])
    elif ties == "ceil":
        ctp, cfp = float(tp[j]), float(fp[j])
    elif ties == "floor":
        ctp, cfp = float(tp[j - 1]), float(fp[j - 1])
    elif ties == "interpolate":
        frac = (cut - bounds[j - 1]) / (bounds[j] - bounds[j - 1])
        ctp = float(tp[j - 1]) + frac * float(tp[j] - tp[j - 1])
        cfp = float(fp[j - 1]) + frac * float(fp[j] - fp[j - 1])
    else:
        raise ConfigError(f"unknown tie mode {ties!r}")
    return ConfusionCounts(ctp, cfp, rank.n_neg - cfp, rank.n_pos - ctp)


def rates(c):
    """The six fixed-threshold rates; None marks an undefined (0/0) rate."""
    def ratio(num, den):
        return None if den == 0 else num / den

    return {
        "sensitivity": ratio(c.tp, c.tp + c.fn),
        "specificity": ratio(c.tn, c.fp + c.tn),
        "precision": ratio(c.tp, c.tp + c.fp),
        "recall": ratio(c.tp, c.tp + c.fn),
        "fallout": ratio(c.fp, c.fp + c.tn),
        "accuracy": ratio(c.tp + c.tn, c.tp + c.fp + c.tn + c.fn),
    }


def tpr_k(rank, k=None, percent=None):
    """Fraction of positives among the top K entries (R-precision).

    Exactly one of ``k`` (absolute count) or ``percent`` (of the ranking
    size, in (0, 100]) must be given. A K boundary inside a tie group earns
    the group expected-value fractional credit.
    """
    if (k is None) == (percent is None):
        raise ConfigError("give exactly one of k or percent")
    if percent is not None:
        if not 0 < percent <= 100:
            raise ConfigError(f"percent {percent} outside (0, 100]")
        k = min(len(rank), max(1, round(percent / 100 * len(rank))))
    if not 1 <= k <= len(rank):
        raise ConfigError(f"k {k} outside [1, {len(rank)}]")
    c = confusion_at(rank, k, ties="interpolate")
    return c.tp / k


@dataclass(frozen=True)
class ThresholdCurve:
    """An ROC or PR curve: ordered points, area, and class counts."""

    space: str
    points: np.ndarray  # (m, 2) of (x, y)
    area: float
    n_pos: int
    n_neg: int
    tie_policy: str = TIE_POLICY

    def summary(self):
        return {"space": self.space, "area": self.area, "n_pos": self.n_pos,
                "n_neg": self.n_neg, "tie_policy": self.tie_policy}


def auroc(scores, labels=None):
    """Area under the ROC curve (accepts a Ranking or score/label arrays)."""
    rank = scores if isinstance(scores, Ranking) else Ranking(scores, labels)
    if rank.n_pos == 0 or rank.n_neg == 0:
        raise UndefinedMetricError("AUROC needs at least one positive and one negative")
    # Trapezoid over tie boundaries, exact in int64:
    # sum of dFP * (TP_i + TP_{i+1}) = 2 * P * N * area.
    dfp = np.diff(rank.fp)
    twice = rank.tp[:-1] + rank.tp[1:]
    return float(np.sum(dfp * twice)) / (2.0 * rank.n_pos * rank.n_neg)


def roc_curve(rank):
    """ROC threshold curve with one point per distinct-score cut.

    Tie groups appear as single diagonal segments, so the curve (and its
    trapezoid area) is independent of within-tie input order and invariant
    to changes in class prior.
    """
    if not isinstance(rank, Ranking):
        raise ConfigError("roc_curve expects a Ranking")
    if rank.n_pos == 0 or rank.n_neg == 0:
        raise UndefinedMetricError("ROC needs at least one positive and one negative")
    x = rank.fp / rank.n_neg
    y = rank.tp / rank.n_pos
    points = np.column_stack([x, y])
    return ThresholdCurve("ROC", points, auroc(rank), rank.n_pos, rank.n_neg)


def _pr_segment_areas(tp, fp):
    """Exact integral of precision d(tp) for each achievable-point segment.

    Between achievable cuts (tp_a, fp_a) -> (tp_b, fp_b) the interpolation
    adds fp linearly in tp, so precision along the segment is
    t / (a*t + c) with a = 1 + dfp/dtp and c = fp_a - (dfp/dtp) * tp_a, whose
    antiderivative is t/a - (c/a^2) * ln(a*t + c). The origin segment has
    a*t + c = 0 at t = 0 and constant precision, handled separately.
    """
    tp_a, tp_b = tp[:-1].astype(float), tp[1:].astype(float)
    fp_a, fp_b = fp[:-1].astype(float), fp[1:].astype(float)
    dtp = tp_b - tp_a
    rising = dtp > 0
    areas = np.zeros(dtp.size, dtype=np.float64)
    if not np.any(rising):
        return areas
    s = np.zeros_like(dtp)
    s[rising] = (fp_b[rising] - fp_a[rising]) / dtp[rising]
    a = 1.0 + s
    c = fp_a - s * tp_a
    start = tp_a + fp_a  # a * tp_a + c
    end = tp_b + fp_b    # a * tp_b + c
    flat = rising & ((c == 0.0) | (start == 0.0))
    areas[flat] = dtp[flat] / a[flat]
    curved = rising & ~flat
    areas[curved] = (dtp[curved] / a[curved]
                     - (c[curved] / a[curved] ** 2)
                     * np.log(end[curved] / start[curved]))
    return areas


def pr_curve(rank):
    """Precision-recall curve under achievable-point interpolation.

    Points are emitted at every achievable cut and at every interpolated
    integer TP increment in between; the area integrates the interpolated
    curve exactly. The curve is anchored at recall 0 with the precision of
    the first achievable point (never a fabricated precision of 1).
    """
    if not isinstance(rank, Ranking):
        raise ConfigError("pr_curve expects a Ranking")
    if rank.n_pos == 0:
        raise UndefinedMetricError("PR needs at least one positive")
    P = rank.n_pos
    tp, fp = rank.tp, rank.fp
    area = float(np.sum(_pr_segment_areas(tp, fp))) / P

    pts = []
    first_cut = tp[1] + fp[1]
    pts.append((0.0, tp[1] / first_cut))
    for j in range(1, tp.size):
        tp_a, fp_a, tp_b, fp_b = tp[j - 1], fp[j - 1], tp[j], fp[j]
        dtp = tp_b - tp_a
        if dtp == 0:
            pts.append((tp_b / P, tp_b / (tp_b + fp_b)))
            continue
        slope = (fp_b - fp_a) / dtp
        for t in range(int(tp_a) + 1, int(tp_b) + 1):
            f = fp_a + slope * (t - tp_a)
            pts.append((t / P, t / (t + f)))
    points = np.array([pts[0]] + [p for i, p in enumerate(pts[1:], 1)
                                  if p != pts[i - 1]])
    return ThresholdCurve("PR", points, area, P, rank.n_neg)


def aupr(scores, labels=None):
    """Area under the PR curve (accepts a Ranking or score/label arrays)."""
    rank = scores if isinstance(scores, Ranking) else Ranking(scores, labels)
    if rank.n_pos == 0:
        raise UndefinedMetricError("AUPR needs at least one positive")
    return float(np.sum(_pr_segment_areas(rank.tp, rank.fp))) / rank.n_pos


def average_precision(rank):
    """Mean interpolated precision at each TP increment (alternate statistic)."""
    if rank.n_pos == 0:
        raise UndefinedMetricError("average precision needs at least one positive")
    total = 0.0
    tp, fp = rank.tp, rank.fp
    for j in range(1, tp.size):
        tp_a, fp_a, tp_b, fp_b = tp[j - 1], fp[j - 1], tp[j], fp[j]
        if tp_b == tp_a:
            continue
        slope = (fp_b - fp_a) / (tp_b - tp_a)
        for t in range(int(tp_a) + 1, int(tp_b) + 1):
            total += t / (t + fp_a + slope * (t - tp_a))
    return total / rank.n_pos


@dataclass(frozen=True)
class ScoreDistribution:
    """Histogram plus exact empirical CDF of a score sample."""

    bin_edges: np.ndarray
    bin_counts: np.ndarray
    sorted_scores: np.ndarray

    def ecdf(self, q):
        """P(score <= q), exact step function; vectorized over q."""
        pos = np.searchsorted(self.sorted_scores, q, side="right")
        return pos / self.sorted_scores.size


def score_distribution(scores, bins=100):
    """Summarize a score sample; constant input collapses to a single bin."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise UndefinedMetricError("empty score sample")
    srt = np.sort(scores)
    if srt[0] == srt[-1]:
        edges = np.array([srt[0], srt[0]])
        counts = np.array([scores.size], dtype=np.int64)
    else:
        counts, edges = np.histogram(srt, bins=bins)
    return ScoreDistribution(edges, counts, srt)


def write_curve_csv(curve, path_or_file):
    text = "x,y\n" + "".join(f"{repr(float(x))},{repr(float(y))}\n"
                             for x, y in curve.points)
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)


def write_curve_json(curve, path_or_file):
    text = json.dumps(curve.summary(), sort_keys=True, indent=2) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)
