"""Adaptive random forest over embeddings.

An ensemble of Hoeffding trees trained by online bagging: each member
draws a Poisson(lambda) repeat count per instance, sees only a fixed
random feature subset, and votes with a weight equal to its prequential
accuracy over the last W instances. Members whose weight falls rho below
the ensemble mean are reset in place with a freshly sampled mask.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .hoeffding import HoeffdingTreeClassifier
from .validation import check_feature_matrix, check_labels, resolve_classes


def weighted_vote(votes, weights, n_classes):
    """Class with the largest weight sum; ties -> lowest voted class index."""
    votes = np.asarray(votes, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if votes.shape != weights.shape or votes.ndim != 1:
        raise ValueError("votes and weights must be equal-length 1-D arrays")
    if votes.size == 0:
        raise ValueError("cannot vote with zero members")
    tally = np.zeros(n_classes)
    np.add.at(tally, votes, weights)
    voted = np.zeros(n_classes, dtype=bool)
    voted[votes] = True
    tally[~voted] = -np.inf
    return int(np.argmax(tally))


class _RingWindow:
    """Fixed-capacity ring of hit/miss bits with an O(1) running sum."""

    __slots__ = ("buf", "size", "pos", "hits")

    def __init__(self, capacity):
        self.buf = np.zeros(capacity, dtype=np.int8)
        self.size = 0
        self.pos = 0
        self.hits = 0

    def push(self, hit):
        hit = int(hit)
        if self.size < len(self.buf):
            self.size += 1
        else:
            self.hits -= int(self.buf[self.pos])
        self.buf[self.pos] = hit
        self.hits += hit
        self.pos = (self.pos + 1) % len(self.buf)

    def clear(self):
        self.size = 0
        self.pos = 0
        self.hits = 0

    @property
    def full(self):
        return self.size == len(self.buf)

    @property
    def accuracy(self):
        return self.hits / self.size if self.size else 0.0


class _Member:
    __slots__ = ("tree", "mask", "window")

    def __init__(self, tree, mask, window_size):
        self.tree = tree
        self.mask = mask
        self.window = _RingWindow(window_size)

    @property
    def weight(self):
        return self.window.accuracy

    def vote(self, x):
        return int(np.argmax(self.tree.predict_proba_one(x[self.mask])))


class AdaptiveRandomForestClassifier(BaseEstimator, ClassifierMixin):
    """Online-bagging ensemble of Hoeffding trees with weighted voting.

    Parameters
    ----------
    n_members : ensemble size T.
    lam : Poisson intensity for online bagging (lam=1 approximates
        sampling-without-replacement bagging; 6 is the usual ARF value).
    window : W, the prequential window length behind each member's weight.
    rho : replacement margin; members with weight < mean - rho are reset.
    delta, tau, grace_period : forwarded to the member trees.
    n_classes : class count; may instead arrive via partial_fit(classes=...).
    seed : drives mask sampling and the Poisson draws.
    """

    def __init__(
        self,
        n_members=10,
        lam=6.0,
        window=500,
        rho=0.10,
        delta=0.01,
        tau=0.05,
        grace_period=200,
        n_classes=None,
        seed=0,
    ):
        self.n_members = n_members
        self.lam = lam
        self.window = window
        self.rho = rho
        self.delta = delta
        self.tau = tau
        self.grace_period = grace_period
        self.n_classes = n_classes
        self.seed = seed

    def _ensure_init(self, dim, classes=None):
        if hasattr(self, "members_"):
            if dim != self.dim_:
                raise ValueError(f"expected {self.dim_} features, got {dim}")
            return
        n_classes = self.n_classes if classes is None else resolve_classes(classes, None)
        if n_classes is None:
            raise NotFittedError("class count unknown; pass classes on the first partial_fit")
        self.n_classes_ = int(n_classes)
        self.classes_ = np.arange(self.n_classes_)
        self.dim_ = dim
        self.mask_size_ = max(1, int(round(np.sqrt(dim))))
        self.rng_ = np.random.default_rng(self.seed)
        self.members_ = [self._fresh_member() for _ in range(self.n_members)]
        self.n_seen_ = 0

    def _fresh_tree(self):
        tree = HoeffdingTreeClassifier(
            delta=self.delta,
            tau=self.tau,
            grace_period=self.grace_period,
            n_classes=self.n_classes_,
        )
        tree._ensure_init(self.mask_size_)
        return tree

    def _fresh_member(self):
        mask = np.sort(self.rng_.choice(self.dim_, size=self.mask_size_, replace=False))
        return _Member(self._fresh_tree(), mask, self.window)

    # -- streaming surface ----------------------------------------------

    def train_instance(self, x, y):
        """Prequential update: each member scores itself, then trains w~Poisson times."""
        x = np.asarray(x, dtype=np.float64)
        self._ensure_init(x.shape[-1])
        y = int(y)
        for member in self.members_:
            member.window.push(member.vote(x) == y)
            w = int(self.rng_.poisson(self.lam))
            xm = x[member.mask]
            for _ in range(w):
                member.tree.observe(xm, y)
        self.n_seen_ += 1
        mean_weight = float(np.mean([m.weight for m in self.members_]))
        for i in range(len(self.members_)):
            self.maybe_replace(i, mean_weight)

    def maybe_replace(self, i, mean_weight=None):
        """Reset member i if its full window sits rho below the ensemble mean."""
        member = self.members_[i]
        if not member.window.full:
            return False
        if mean_weight is None:
            mean_weight = float(np.mean([m.weight for m in self.members_]))
        if member.weight < mean_weight - self.rho:
            self.members_[i] = self._fresh_member()
            return True
        return False

    def predict_one(self, x):
        if not hasattr(self, "members_"):
            raise NotFittedError("forest has not seen any classes yet")
        x = np.asarray(x, dtype=np.float64)
        votes = [m.vote(x) for m in self.members_]
        weights = [m.weight for m in self.members_]
        return weighted_vote(votes, weights, self.n_classes_)

    # -- sklearn surface --------------------------------------------------

    def partial_fit(self, X, y, classes=None):
        X = check_feature_matrix(X)
        if not hasattr(self, "members_"):
            self._ensure_init(X.shape[1], classes if classes is not None else self.n_classes)
        y = check_labels(y, len(X), self.n_classes_)
        for xi, yi in zip(X, y):
            self.train_instance(xi, yi)
        return self

    def predict(self, X):
        X = check_feature_matrix(X, getattr(self, "dim_", None))
        return np.array([self.predict_one(x) for x in X], dtype=np.int64)

    def predict_proba(self, X):
        """Weight-mixture of member leaf distributions.

        This is a smooth probability readout for loss logging; `predict`
        follows the discrete weighted vote and may disagree with the
        argmax of these probabilities on close calls.
        """
        X = check_feature_matrix(X, getattr(self, "dim_", None))
        if not hasattr(self, "members_"):
            raise NotFittedError("forest has not seen any classes yet")
        out = np.zeros((len(X), self.n_classes_))
        weights = np.array([m.weight for m in self.members_])
        if weights.sum() == 0:
            weights = np.ones_like(weights)
        weights = weights / weights.sum()
        for j, x in enumerate(X):
            for member, w in zip(self.members_, weights):
                out[j] += w * member.tree.predict_proba_one(x[member.mask])
        return out
