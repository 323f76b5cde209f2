"""Sample-based structural diagnostics for a regime family.

Every verdict here is driven by finite sampling: a witness is a concrete
state where two maps measurably disagree and can be re-checked by direct
evaluation, whereas the absence of a witness proves nothing.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import RegimeSystem
from .errors import DimensionError, SamplingError
from .prng import Xoshiro256

DEFAULT_TOL = 1e-9
RULED_OUT = "RuledOut"
NOT_RULED_OUT = "NotRuledOut"


@dataclass(frozen=True)
class SamplingPlan:
    """Deterministic grid plus seeded uniform points over a box.

    ``box`` is either a single (low, high) pair applied to every axis or a
    list of per-axis pairs. Grids that would exceed ``max_grid`` points are
    thinned to the largest per-axis count that fits.
    """

    box: tuple = (-2.0, 4.0)
    grid_points: int = 11
    random_points: int = 1000
    seed: int = 0
    max_grid: int = 100_000

    def bounds(self, n):
        box = np.asarray(self.box, dtype=float)
        if box.shape == (2,):
            box = np.tile(box, (n, 1))
        if box.shape != (n, 2) or np.any(box[:, 0] > box[:, 1]):
            raise DimensionError(f"sampling box {self.box} does not fit dimension {n}")
        return box

    def grid_size(self, n):
        g = self.grid_points
        while g > 1 and g**n > self.max_grid:
            g -= 1
        return g if self.grid_points > 0 else 0

    def points(self, n) -> np.ndarray:
        box = self.bounds(n)
        parts = []
        g = self.grid_size(n)
        if g == 1:
            parts.append(box.mean(axis=1)[None, :])
        elif g > 1:
            axes = [np.linspace(lo, hi, g) for lo, hi in box]
            parts.append(np.array(list(itertools.product(*axes)), dtype=float))
        if self.random_points > 0:
            rng = Xoshiro256(self.seed)
            R = np.empty((self.random_points, n))
            for i in range(self.random_points):
                for j in range(n):
                    R[i, j] = rng.uniform(box[j, 0], box[j, 1])
            parts.append(R)
        if not parts:
            raise SamplingError("sampling plan produces no points")
        return np.vstack(parts)


@dataclass(frozen=True, eq=False)
class CommutationReport:
    pair: tuple
    max_discrepancy: float
    witness: np.ndarray | None
    commute: bool
    samples_tested: int
    samples_failed: int = 0
    tolerance: float = DEFAULT_TOL
    note: str = ""


@dataclass(frozen=True, eq=False)
class RepresentabilityVerdict:
    status: str
    reason: str
    evidence: tuple
    linear_commutators: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class PairDifference:
    pair: tuple
    max_difference: float
    witness: np.ndarray


@dataclass(frozen=True, eq=False)
class IrreducibilityReport:
    distinct_pairs: tuple
    reducible_candidate: bool
    samples_tested: int = 0
    note: str = ""


@dataclass(frozen=True)
class TopologyReport:
    regime_count: int
    component_count: int
    conjugate_to_invariant_law: bool


def matrix_commutator_norm(A, B) -> float:
    """||AB - BA||_inf."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"commutator needs equal square shapes, got {A.shape} and {B.shape}")
    return float(np.abs(A @ B - B @ A).sum(axis=1).max())


def _chunks(m, workers):
    if workers <= 1 or m < 2 * workers:
        return [slice(0, m)]
    edges = np.linspace(0, m, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _pointwise(fn, X, workers):
    """Row-wise map of ``fn`` over X, optionally threaded; order preserved."""
    parts = _chunks(X.shape[0], workers)
    if len(parts) == 1:
        return fn(X)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        out = list(pool.map(lambda sl: fn(X[sl]), parts))
    return tuple(np.concatenate([o[i] for o in out]) for i in range(len(out[0])))


def _compare(f, g, X, tol, workers):
    """Per-row discrepancy ||f(x) - g(x)||_inf, threshold and failure mask."""

    def block(Xb):
        with np.errstate(all="ignore"):
            Y1 = f(Xb)
            Y2 = g(Xb)
            ok = np.all(np.isfinite(Y1), axis=1) & np.all(np.isfinite(Y2), axis=1)
            d = np.abs(Y1 - Y2).max(axis=1)
            thr = tol * (1.0 + np.abs(Y1).max(axis=1))
        return d, thr, ok

    d, thr, ok = _pointwise(block, X, workers)
    if not np.any(ok):
        raise SamplingError("evaluation failed at every sample point")
    d = np.where(ok, d, -np.inf)
    return d, thr, ok


def commutation_witness(op_a, op_b, sampler: SamplingPlan | None = None, tol: float = DEFAULT_TOL,
                        pair=(0, 1), workers: int = 1) -> CommutationReport:
    """Search the sample set for x with F_a(F_b(x)) != F_b(F_a(x)).

    A sample counts as a witness when the discrepancy exceeds
    tol * (1 + ||F_a(F_b(x))||_inf). The reported witness is the sample of
    largest discrepancy (lowest index on ties).
    """
    if op_a.dimension != op_b.dimension:
        raise DimensionError("operators disagree on dimension")
    sampler = sampler or SamplingPlan()
    X = sampler.points(op_a.dimension)
    d, thr, ok = _compare(lambda Z: op_a.apply_batch(op_b.apply_batch(Z)),
                          lambda Z: op_b.apply_batch(op_a.apply_batch(Z)), X, tol, workers)
    exceed = ok & (d > thr)
    i = int(np.argmax(d))
    commute = not bool(np.any(exceed))
    failed = int(np.count_nonzero(~ok))
    note = ("no discrepancy above tolerance on the sampled points; this is not a proof of commutation"
            if commute else "witness re-verifiable by direct evaluation")
    return CommutationReport(tuple(pair), float(d[i]), None if commute else X[i].copy(), commute,
                             int(X.shape[0]), failed, tol, note)


def verify_commutation_witness(op_a, op_b, x) -> float:
    """Recompute ||F_a(F_b(x)) - F_b(F_a(x))||_inf from scratch."""
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(op_a.apply(op_b.apply(x)) - op_b.apply(op_a.apply(x)))))


def invariant_law_verdict(system: RegimeSystem, sampler: SamplingPlan | None = None,
                          tol: float = DEFAULT_TOL, linearization=None,
                          workers: int = 1) -> RepresentabilityVerdict:
    """Can a single map F with x_{t+1} = F(x_t) generate every regime composition?

    Iterates of one map always commute, so any non-commuting pair rules a
    single-map representation out. Commuting samples do not establish the
    converse.
    """
    S = system.size
    reports = []
    for a, b in itertools.combinations(range(S), 2):
        reports.append(commutation_witness(system.operators[a], system.operators[b], sampler, tol,
                                           pair=(system.labels[a], system.labels[b]), workers=workers))
    commutators = {}
    if linearization is not None:
        for a, b in itertools.combinations(range(S), 2):
            commutators[f"{system.labels[a]},{system.labels[b]}"] = matrix_commutator_norm(
                linearization.matrices[a], linearization.matrices[b])
    witnesses = [r for r in reports if r.witness is not None]
    if witnesses:
        r = witnesses[0]
        reason = (f"regimes {r.pair[0]} and {r.pair[1]} do not commute at x={r.witness.tolist()} "
                  f"(discrepancy {r.max_discrepancy:.6g}); iterates of a single map always commute, "
                  "so no invariant law reproduces all regime compositions")
        return RepresentabilityVerdict(RULED_OUT, reason, tuple(reports), commutators)
    if S == 1:
        reason = "single regime: the system is its own invariant law"
    else:
        reason = ("all sampled pairs commute within tolerance; commutation is necessary but not "
                  "sufficient for a single-map representation, and sampling is finite")
    return RepresentabilityVerdict(NOT_RULED_OUT, reason, tuple(reports), commutators)


def irreducibility_check(system: RegimeSystem, sampler: SamplingPlan | None = None,
                         tol: float = DEFAULT_TOL, workers: int = 1) -> IrreducibilityReport:
    """Pairs of regimes whose maps differ somewhere on the sample set.

    An injective regime-blind reduction phi(F_s(x)) = G(phi(x)) forces all
    F_s to coincide, so each listed pair rules one out.
    """
    sampler = sampler or SamplingPlan()
    X = sampler.points(system.dimension)
    distinct = []
    for a, b in itertools.combinations(range(system.size), 2):
        fa, fb = system.operators[a], system.operators[b]
        d, thr, ok = _compare(fa.apply_batch, fb.apply_batch, X, tol, workers)
        if np.any(ok & (d > thr)):
            i = int(np.argmax(d))
            distinct.append(PairDifference((system.labels[a], system.labels[b]), float(d[i]),
                                           X[i].copy()))
    reducible = not distinct
    note = ("all regimes coincide on the samples; a regime-blind reduction is not excluded"
            if reducible else "distinct regime maps: no injective regime-blind reduction exists")
    return IrreducibilityReport(tuple(distinct), reducible, int(X.shape[0]), note)


def topology_report(system: RegimeSystem) -> TopologyReport:
    """Connected components of the regime-stratified state space (one per regime)."""
    S = system.size
    return TopologyReport(S, S, S < 2)
