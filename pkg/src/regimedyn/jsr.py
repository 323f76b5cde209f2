"""Joint spectral radius bounds by word enumeration.

Products are kept normalised to unit norm with their log-scale tracked
separately, so long words of large matrices never overflow. Enumeration is
breadth-first in lexicographic order. The reported witness is reduced to
the smallest rotation of its primitive root: rotations and powers share
the growth rate exactly, while their computed values differ by rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

NORMS = ("inf", "2")
DEFAULT_BUDGET = 10**6
DEFAULT_MAX_DEPTH = 16
DEFAULT_GAP = 1e-2
# relative slack under which two growth rates count as tied
TIE_RTOL = 1e-13

STABLE = "StableCertified"
UNSTABLE = "UnstableCertified"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class JsrBounds:
    lower: float
    upper: float
    depth: int = 0
    norm_id: str = "inf"
    witness_word: tuple = ()
    products_evaluated: int = 0
    terminated_by: str = ""

    def __post_init__(self):
        if self.lower < 0 or self.lower > self.upper * (1 + 1e-12) + 1e-12:
            raise ValueError(f"invalid bounds: lower={self.lower}, upper={self.upper}")

    @property
    def gap(self):
        return self.upper - self.lower


@dataclass(frozen=True)
class StabilityVerdict:
    status: str
    bounds: JsrBounds
    margin: float


def _family(matrices):
    mats = [np.asarray(m, dtype=float) for m in matrices]
    if len({m.shape for m in mats}) > 1:
        raise DimensionError("matrices in a family must share one square shape")
    mats = np.array(mats)
    if mats.ndim != 3 or mats.shape[0] == 0 or mats.shape[1] != mats.shape[2]:
        raise DimensionError("need a non-empty family of equally sized square matrices")
    if not np.all(np.isfinite(mats)):
        raise DimensionError("matrix family has non-finite entries")
    return mats


def _norms(P, norm_id):
    if norm_id == "inf":
        return np.abs(P).sum(axis=2).max(axis=1)
    if norm_id == "2":
        return np.linalg.norm(P, ord=2, axis=(1, 2))
    raise ValueError(f"unknown norm {norm_id!r}; choose from {NORMS}")


def _log(v):
    with np.errstate(divide="ignore"):
        return np.log(v)


def _rho(P):
    n = P.shape[1]
    if n == 1:
        return np.abs(P[:, 0, 0])
    if n == 2:
        a, b, c, d = P[:, 0, 0], P[:, 0, 1], P[:, 1, 0], P[:, 1, 1]
        half_tr = 0.5 * (a + d)
        disc = (0.5 * (a - d)) ** 2 + b * c
        real = np.abs(half_tr) + np.sqrt(np.maximum(disc, 0.0))
        # complex pair: |lambda|^2 = det
        cplx = np.sqrt(np.maximum(a * d - b * c, 0.0))
        return np.where(disc >= 0, real, cplx)
    return np.abs(np.linalg.eigvals(P)).max(axis=1)


def _log_rho(P, logscale):
    return _log(_rho(P)) + logscale


class _Frontier:
    """Words of equal length with their normalised products."""

    def __init__(self, mats, norm_id):
        n = mats.shape[1]
        self.mats = mats
        self.norm_id = norm_id
        self.words = np.zeros((1, 0), dtype=np.int64)
        self.P = np.eye(n)[None]
        self.logscale = np.zeros(1)
        self.cand = np.full(1, np.inf)  # min over prefixes of log-norm / length

    def __len__(self):
        return self.words.shape[0]

    @property
    def length(self):
        return self.words.shape[1]

    def expand(self):
        """Extend every word by every regime; returns the log-norms of the children."""
        S = self.mats.shape[0]
        F = len(self)
        n = self.mats.shape[1]
        child = np.matmul(self.mats[None, :, :, :], self.P[:, None, :, :]).reshape(F * S, n, n)
        nrm = _norms(child, self.norm_id)
        safe = np.where(nrm > 0, nrm, 1.0)
        self.P = child / safe[:, None, None]
        self.logscale = np.repeat(self.logscale, S) + _log(nrm)
        self.words = np.hstack([np.repeat(self.words, S, axis=0),
                                np.tile(np.arange(S), F)[:, None]])
        k = self.length
        self.cand = np.minimum(np.repeat(self.cand, S), self.logscale / k)
        return self.logscale

    def keep(self, mask):
        self.words = self.words[mask]
        self.P = self.P[mask]
        self.logscale = self.logscale[mask]
        self.cand = self.cand[mask]


def canonical_word(word):
    """Smallest rotation of the primitive root of ``word``.

    Rotations and powers of a word have exactly the same growth rate, so
    this is the shortest, then lexicographically smallest, word tied with it.
    """
    word = tuple(word)
    k = len(word)
    for p in range(1, k + 1):
        if k % p == 0 and word == word[:p] * (k // p):
            root = word[:p]
            break
    return min(root[i:] + root[:i] for i in range(len(root)))


def _best(values, words, lower, witness):
    """Update (lower, witness) with this level's growth rates."""
    if values.size == 0:
        return lower, witness
    m = float(values.max())
    if m > lower * (1 + TIE_RTOL) or (lower == 0 and m > 0) or not witness:
        i = int(np.flatnonzero(values >= m * (1 - TIE_RTOL))[0])
        return m, canonical_word(int(s) for s in words[i])
    return lower, witness


def jsr_lower(matrices, depth: int):
    """Max over words of length <= depth of rho(product)^(1/length), with its word."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    mats = _family(matrices)
    fr = _Frontier(mats, "inf")
    lower, witness = 0.0, ()
    for k in range(1, depth + 1):
        fr.expand()
        vals = np.exp(_log_rho(fr.P, fr.logscale) / k)
        lower, witness = _best(vals, fr.words, lower, witness)
    return lower, witness


def jsr_upper(matrices, depth: int, norm_id: str = "inf") -> float:
    """Gelfand truncation: min over k <= depth of max over |w| = k of ||product||^(1/k)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    mats = _family(matrices)
    fr = _Frontier(mats, norm_id)
    upper = math.inf
    for k in range(1, depth + 1):
        lognorm = fr.expand()
        upper = min(upper, float(np.exp(lognorm.max() / k)))
    return upper


def jsr_bounds(matrices, target_gap: float = DEFAULT_GAP, max_depth: int = DEFAULT_MAX_DEPTH,
               budget: int = DEFAULT_BUDGET, norm_id: str = "inf", prune: bool = True) -> JsrBounds:
    """Branch-and-bound bracket on the joint spectral radius.

    At each depth k the lower bound is the best rho(P_w)^(1/|w|) seen so far.
    A word's upper-bound candidate is the minimum over its prefixes of
    ||P_prefix||^(1/|prefix|); the depth-k upper bound is the max of the
    lower bound and all surviving candidates. A prefix whose own normalised
    norm is at or below the current lower bound is not extended: every
    extension has a candidate no larger than it.
    """
    if not target_gap > 0:
        raise ValueError("target_gap must be positive")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    mats = _family(matrices)
    S = mats.shape[0]
    fr = _Frontier(mats, norm_id)
    lower, witness = 0.0, ()
    upper = math.inf
    evaluated = 0
    depth = 0
    reason = "max_depth"
    while depth < max_depth:
        if depth > 0 and evaluated + len(fr) * S > budget:
            reason = "budget"
            break
        fr.expand()
        depth += 1
        evaluated += len(fr)
        vals = np.exp(_log_rho(fr.P, fr.logscale) / depth)
        lower, witness = _best(vals, fr.words, lower, witness)
        level_upper = max(lower, float(np.exp(fr.cand.max())))
        upper = min(upper, level_upper)
        if upper - lower <= target_gap:
            reason = "gap"
            break
        if prune:
            with np.errstate(divide="ignore"):
                fr.keep(fr.logscale / depth > math.log(lower) if lower > 0 else fr.logscale > -np.inf)
            if len(fr) == 0:
                # every extension is dominated by the lower bound
                upper = lower
                reason = "exhausted"
                break
    upper = max(upper, lower)
    return JsrBounds(lower, upper, depth, norm_id, witness, evaluated, reason)


def stability_verdict(bounds: JsrBounds) -> StabilityVerdict:
    if bounds.upper < 1.0:
        return StabilityVerdict(STABLE, bounds, 1.0 - bounds.upper)
    if bounds.lower > 1.0:
        return StabilityVerdict(UNSTABLE, bounds, bounds.lower - 1.0)
    return StabilityVerdict(INCONCLUSIVE, bounds, min(1.0 - bounds.lower, bounds.upper - 1.0))


def exponential_envelope_fit(trajectory, x_star):
    """Least-squares fit of log||x_t - x*||_inf = log M + t log(alpha).

    Diagnostic only: the fitted pair describes this trajectory, it does not
    certify a bound over all switching sequences. Zero deviations are
    skipped; an all-zero trajectory gives (0, 0).
    """
    states = np.asarray(getattr(trajectory, "states", trajectory), dtype=float)
    if states.shape[0] < 3:
        raise ValueError("envelope fit needs at least 3 states")
    dev = np.abs(states - np.asarray(x_star, dtype=float)).max(axis=1)
    t = np.flatnonzero(dev > 0)
    if t.size == 0:
        return 0.0, 0.0
    if t.size < 2:
        raise ValueError("envelope fit needs at least two nonzero deviations")
    slope, intercept = np.polyfit(t.astype(float), np.log(dev[t]), 1)
    return float(np.exp(intercept)), float(np.exp(slope))
