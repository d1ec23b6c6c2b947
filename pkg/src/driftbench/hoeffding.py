"""Incremental Hoeffding tree classifier over embedding vectors.

Split decisions are certified by the one-sided Hoeffding bound
eps = sqrt(R^2 ln(1/delta) / (2n)) with R = log2(C) for C-class
information gain. Numeric features are summarized per leaf by running
min/max plus a 10-bin equal-width class histogram; candidate thresholds
are the interior bin boundaries.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .validation import check_feature_matrix, check_labels, resolve_classes

N_BINS = 10


def hoeffding_epsilon(r, delta, n):
    """Margin below which the best/second-best gain gap is not yet trusted."""
    if r <= 0:
        raise ValueError(f"range must be positive, got {r}")
    if not 0 < delta <= 1:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    if n < 1:
        raise ValueError(f"need at least one observation, got {n}")
    return math.sqrt(r * r * math.log(1.0 / delta) / (2.0 * n))


def _entropy_bits(counts):
    """Base-2 entropy along the last axis, with 0*log(0) treated as 0."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 0.0)
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=-1) * -1.0


def info_gain(parent_counts, left_counts, right_counts):
    """Entropy reduction (bits) of splitting `parent` into the two children."""
    parent = np.asarray(parent_counts, dtype=np.int64)
    left = np.asarray(left_counts, dtype=np.int64)
    right = np.asarray(right_counts, dtype=np.int64)
    if not np.array_equal(left + right, parent):
        raise ValueError("child counts do not sum to the parent counts")
    n = parent.sum()
    if n == 0:
        raise ValueError("parent has no observations")
    h = _entropy_bits(parent)
    nl, nr = left.sum(), right.sum()
    return float(h - (nl / n) * _entropy_bits(left) - (nr / n) * _entropy_bits(right))


def split_condition(delta_g, epsilon, tau):
    """The disjunction governing splits: a trusted gap, or a certified tie."""
    return delta_g > epsilon or epsilon < tau


@dataclass(frozen=True)
class SplitRecord:
    """One committed split, kept for auditing the split rule."""

    feature: int
    threshold: float
    gain_best: float
    gain_second: float
    epsilon: float
    tau: float
    n: int


class _LeafStats:
    """Sufficient statistics at a leaf.

    `counts`/`hist` cover examples this leaf observed itself; `seed` holds
    class counts inherited from an ancestor split so that no observation is
    ever dropped from the tree's books. Splits use fresh statistics only;
    prediction uses fresh + seed.
    """

    __slots__ = ("counts", "seed", "mins", "maxs", "hist", "since_attempt")

    def __init__(self, dim, n_classes):
        self.counts = np.zeros(n_classes, dtype=np.int64)
        self.seed = np.zeros(n_classes, dtype=np.int64)
        self.mins = np.full(dim, np.inf)
        self.maxs = np.full(dim, -np.inf)
        self.hist = np.zeros((dim, n_classes, N_BINS), dtype=np.int64)
        self.since_attempt = 0

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def example_count(self):
        return int(self.counts.sum() + self.seed.sum())

    def update(self, x, y):
        self.counts[y] += 1
        self.since_attempt += 1
        np.minimum(self.mins, x, out=self.mins)
        np.maximum(self.maxs, x, out=self.maxs)
        span = self.maxs - self.mins
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(span > 0, (x - self.mins) / np.where(span > 0, span, 1.0), 0.0)
        bins = np.clip((frac * N_BINS).astype(np.int64), 0, N_BINS - 1)
        self.hist[np.arange(len(x)), y, bins] += 1

    def best_split_per_feature(self):
        """Per-feature best (gain, threshold, boundary bin); gain 0 where no candidate."""
        dim = len(self.mins)
        parent = self.counts
        n = parent.sum()
        h_parent = _entropy_bits(parent)
        cum = self.hist.cumsum(axis=2)  # (dim, C, bins)
        left = cum[:, :, :-1].transpose(0, 2, 1)  # (dim, bins-1, C)
        right = parent[None, None, :] - left
        nl = left.sum(axis=-1)
        nr = right.sum(axis=-1)
        gains = h_parent - (nl / n) * _entropy_bits(left) - (nr / n) * _entropy_bits(right)
        # Boundaries with an empty side carry no information; neither do
        # features that have only ever seen a single value.
        gains[(nl == 0) | (nr == 0)] = 0.0
        span = self.maxs - self.mins
        gains[span <= 0, :] = 0.0
        best_bin = gains.argmax(axis=1)
        best_gain = gains[np.arange(dim), best_bin]
        thresholds = self.mins + (best_bin + 1) / N_BINS * span
        return best_gain, thresholds, best_bin


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "stats", "depth")

    def __init__(self, dim, n_classes, depth):
        self.feature = None
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.stats = _LeafStats(dim, n_classes)
        self.depth = depth

    @property
    def is_leaf(self):
        return self.feature is None

    def sort(self, x):
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node


class HoeffdingTreeClassifier(BaseEstimator, ClassifierMixin):
    """Streaming decision tree with Hoeffding-bound split decisions.

    Parameters
    ----------
    delta : split confidence; smaller delays splits.
    tau : tie-break threshold; once eps < tau the best split is taken.
    grace_period : observations a leaf accumulates between split attempts.
    max_depth : optional cap on tree depth (None = unbounded).
    n_classes : class count; may instead be given to partial_fit(classes=...).
    """

    def __init__(self, delta=0.01, tau=0.05, grace_period=200, max_depth=None, n_classes=None):
        self.delta = delta
        self.tau = tau
        self.grace_period = grace_period
        self.max_depth = max_depth
        self.n_classes = n_classes

    def _ensure_init(self, dim, classes=None):
        if hasattr(self, "root_"):
            if dim != self.dim_:
                raise ValueError(f"expected {self.dim_} features, got {dim}")
            return
        n_classes = self.n_classes if classes is None else resolve_classes(classes, None)
        if n_classes is None:
            raise NotFittedError("class count unknown; pass classes on the first partial_fit")
        self.n_classes_ = int(n_classes)
        self.classes_ = np.arange(self.n_classes_)
        self.dim_ = dim
        self.root_ = _Node(dim, self.n_classes_, depth=0)
        self.n_seen_ = 0
        self.split_log_ = []

    # -- streaming surface ----------------------------------------------

    def observe(self, x, y):
        """Route one example to its leaf, update stats, maybe split."""
        x = np.asarray(x, dtype=np.float64)
        self._ensure_init(x.shape[-1])
        leaf = self.root_.sort(x)
        leaf.stats.update(x, int(y))
        self.n_seen_ += 1
        if leaf.stats.since_attempt >= self.grace_period:
            self._attempt_split(leaf)

    def _attempt_split(self, leaf):
        stats = leaf.stats
        stats.since_attempt = 0
        if self.max_depth is not None and leaf.depth >= self.max_depth:
            return None
        if np.count_nonzero(stats.counts) < 2:
            return None
        gains, thresholds, bins = stats.best_split_per_feature()
        best_f = int(np.argmax(gains))
        g_best = float(gains[best_f])
        g_second = float(np.delete(gains, best_f).max()) if len(gains) > 1 else 0.0
        if g_best <= 0:
            return None
        eps = hoeffding_epsilon(math.log2(max(self.n_classes_, 2)), self.delta, stats.total)
        if not split_condition(g_best - g_second, eps, self.tau):
            return None
        record = SplitRecord(
            feature=best_f,
            threshold=float(thresholds[best_f]),
            gain_best=g_best,
            gain_second=g_second,
            epsilon=eps,
            tau=self.tau,
            n=stats.total,
        )
        self._commit_split(leaf, record, bins[best_f])
        self.split_log_.append(record)
        return record

    def _commit_split(self, leaf, record, boundary_bin):
        """Turn the leaf into an internal node, conserving its example counts.

        Fresh counts are partitioned exactly along the chosen histogram
        boundary; inherited seed counts are divided in the same proportion
        (integer floor left, remainder right) so totals are preserved.
        """
        stats = leaf.stats
        cum = stats.hist[record.feature].cumsum(axis=1)
        left_fresh = cum[:, boundary_bin].copy()
        right_fresh = stats.counts - left_fresh
        nl = left_fresh.sum()
        left_seed = stats.seed * nl // stats.counts.sum()
        left = _Node(self.dim_, self.n_classes_, leaf.depth + 1)
        right = _Node(self.dim_, self.n_classes_, leaf.depth + 1)
        left.stats.seed = left_fresh + left_seed
        right.stats.seed = right_fresh + (stats.seed - left_seed)
        leaf.feature = record.feature
        leaf.threshold = record.threshold
        leaf.left = left
        leaf.right = right
        leaf.stats = None

    def predict_proba_one(self, x):
        """Laplace-smoothed class distribution at the example's leaf."""
        if not hasattr(self, "root_"):
            raise NotFittedError("tree has not seen any classes yet")
        x = np.asarray(x, dtype=np.float64)
        stats = self.root_.sort(x).stats
        smoothed = stats.counts + stats.seed + 1.0
        return smoothed / smoothed.sum()

    # -- sklearn surface --------------------------------------------------

    def partial_fit(self, X, y, classes=None):
        X = check_feature_matrix(X)
        if not hasattr(self, "root_"):
            self._ensure_init(X.shape[1], classes if classes is not None else self.n_classes)
        y = check_labels(y, len(X), self.n_classes_)
        for xi, yi in zip(X, y):
            self.observe(xi, yi)
        return self

    def predict_proba(self, X):
        X = check_feature_matrix(X, getattr(self, "dim_", None))
        return np.stack([self.predict_proba_one(x) for x in X])

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    # -- introspection -----------------------------------------------------

    def leaf_example_total(self):
        """Examples credited across all leaves (equals n_seen_ by invariant)."""
        total = 0
        stack = [self.root_]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                total += node.stats.example_count
            else:
                stack.extend((node.left, node.right))
        return total

    @property
    def n_nodes(self):
        count = 0
        stack = [self.root_]
        while stack:
            node = stack.pop()
            count += 1
            if not node.is_leaf:
                stack.extend((node.left, node.right))
        return count
