"""Regime systems, switching signals, trajectories and ordered composition."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, EmptyWordError, NumericalError, SignalExhausted
from .operators import AffineOperator, ComposedOperator, Operator, as_state
from .prng import MASK64, Xoshiro256

PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RegimeSystem:
    """A finite family of propagation operators on R^n, one per regime."""

    operators: tuple
    labels: tuple = ()

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise ValueError("a regime system needs at least one regime")
        n = ops[0].dimension
        for i, op in enumerate(ops):
            if op.dimension != n:
                raise DimensionError(f"regime {i} has dimension {op.dimension}, expected {n}")
        labels = tuple(self.labels) if self.labels else tuple(str(i) for i in range(len(ops)))
        if len(labels) != len(ops):
            raise ValueError("need exactly one label per regime")
        if len(set(labels)) != len(labels):
            raise ValueError(f"regime labels must be unique, got {labels}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return self.operators[0].dimension

    @property
    def size(self) -> int:
        return len(self.operators)

    def __len__(self):
        return len(self.operators)

    def index(self, regime) -> int:
        """Resolve a regime given by index or label."""
        if isinstance(regime, (int, np.integer)) and not isinstance(regime, bool):
            if 0 <= regime < len(self.operators):
                return int(regime)
            raise IndexError(f"regime index {regime} out of range [0, {len(self.operators) - 1}]")
        try:
            return self.labels.index(regime)
        except ValueError:
            raise KeyError(f"unknown regime label {regime!r}; known: {list(self.labels)}") from None

    def resolve(self, word) -> tuple:
        return tuple(self.index(s) for s in word)

    def operator(self, regime) -> Operator:
        return self.operators[self.index(regime)]

    def all_affine(self) -> bool:
        return all(op.is_affine() for op in self.operators)


@dataclass(frozen=True)
class SwitchingSignal:
    """Generator of the exogenous regime path.

    kind is one of "explicit", "periodic", "iid", "markov". Words may hold
    labels or indices and are resolved against the system at sampling time.
    """

    kind: str
    word: tuple = ()
    weights: tuple = ()
    transition: tuple = ()
    seed: int | None = None
    initial_regime: object = 0

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "transition", tuple(tuple(float(p) for p in row) for row in self.transition))
        if self.kind in ("explicit", "periodic"):
            if self.kind == "periodic" and not self.word:
                raise ValueError("periodic signal needs a non-empty word")
        elif self.kind == "iid":
            _check_probabilities(self.weights, "weights")
            self._check_seed()
        elif self.kind == "markov":
            if not self.transition:
                raise ValueError("markov signal needs a transition matrix")
            m = len(self.transition)
            for i, row in enumerate(self.transition):
                if len(row) != m:
                    raise ValueError(f"transition row {i} has length {len(row)}, expected {m}")
                _check_probabilities(row, f"transition row {i}")
            self._check_seed()
        else:
            raise ValueError(f"unknown signal kind {self.kind!r}")

    def _check_seed(self):
        if self.seed is None:
            raise ValueError(f"{self.kind} signal requires an explicit seed")
        if not 0 <= int(self.seed) <= MASK64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @classmethod
    def explicit(cls, word):
        return cls("explicit", word=tuple(word))

    @classmethod
    def periodic(cls, word):
        return cls("periodic", word=tuple(word))

    @classmethod
    def iid(cls, weights, seed):
        return cls("iid", weights=tuple(weights), seed=seed)

    @classmethod
    def markov(cls, transition, seed, initial_regime=0):
        return cls("markov", transition=tuple(map(tuple, transition)), seed=seed,
                   initial_regime=initial_regime)

    def with_seed(self, seed):
        if self.kind not in ("iid", "markov"):
            return self
        return SwitchingSignal(self.kind, self.word, self.weights, self.transition, seed,
                               self.initial_regime)

    def regimes(self, system: RegimeSystem, horizon: int) -> tuple:
        """The first ``horizon`` regime indices of this path."""
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        S = system.size
        if self.kind == "explicit":
            word = system.resolve(self.word)
            if len(word) < horizon:
                raise SignalExhausted(f"explicit word has length {len(word)} but horizon is {horizon}")
            return word[:horizon]
        if self.kind == "periodic":
            word = system.resolve(self.word)
            return tuple(word[t % len(word)] for t in range(horizon))
        rng = Xoshiro256(int(self.seed))
        if self.kind == "iid":
            if len(self.weights) != S:
                raise ValueError(f"iid weights have length {len(self.weights)}, system has {S} regimes")
            cum = _cumulative(self.weights)
            return tuple(rng.choice(cum) for _ in range(horizon))
        if len(self.transition) != S:
            raise ValueError(f"transition matrix is {len(self.transition)}x{len(self.transition)}, "
                             f"system has {S} regimes")
        cums = [_cumulative(row) for row in self.transition]
        out = []
        s = system.index(self.initial_regime)
        for t in range(horizon):
            if t > 0:
                s = rng.choice(cums[s])
            out.append(s)
        return tuple(out)


def _check_probabilities(p, name):
    if not p:
        raise ValueError(f"{name} is empty")
    if any(not (0.0 <= v <= 1.0) for v in p):
        raise ValueError(f"{name} has entries outside [0, 1]: {list(p)}")
    total = sum(p)
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"{name} sums to {total:.12g}, not 1")


def _cumulative(p):
    cum = list(np.cumsum(p))
    # the last regime with positive mass absorbs the rounding remainder
    last = max(i for i, v in enumerate(p) if v > 0)
    for i in range(last, len(cum)):
        cum[i] = 1.0
    return cum


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray  # (T+1, n)
    regimes: tuple = field(default=())

    def __post_init__(self):
        s = np.array(self.states, dtype=float)
        if s.ndim != 2 or s.shape[0] != len(self.regimes) + 1:
            raise ValueError("trajectory needs len(regimes) + 1 states")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "regimes", tuple(int(r) for r in self.regimes))

    @property
    def horizon(self) -> int:
        return len(self.regimes)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

    def deviations(self, x_star, ord=np.inf) -> np.ndarray:
        return np.linalg.norm(self.states - np.asarray(x_star, dtype=float), ord=ord, axis=1)

    def replays(self, system: RegimeSystem) -> bool:
        """True when every transition is reproduced exactly by ``step``."""
        for t, s in enumerate(self.regimes):
            if not np.array_equal(step(system, s, self.states[t]), self.states[t + 1]):
                return False
        return True


def step(system: RegimeSystem, regime, x) -> np.ndarray:
    """Apply the operator of ``regime`` to ``x``."""
    s = system.index(regime)
    x = as_state(x, system.dimension)
    try:
        return system.operators[s].apply(x)
    except NumericalError as exc:
        raise exc.located(regime=system.labels[s]) from None


def simulate(system: RegimeSystem, signal: SwitchingSignal | Sequence, x0, horizon: int) -> Trajectory:
    """Iterate x_{t+1} = F_{s_t}(x_t) for ``horizon`` steps.

    A plain sequence for ``signal`` is treated as an explicit word.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    if not isinstance(signal, SwitchingSignal):
        signal = SwitchingSignal.explicit(signal)
    x = as_state(x0, system.dimension)
    regimes = signal.regimes(system, horizon)
    states = np.empty((horizon + 1, system.dimension))
    states[0] = x
    for t, s in enumerate(regimes):
        try:
            x = step(system, s, x)
        except NumericalError as exc:
            raise exc.located(timestep=t) from None
        states[t + 1] = x
    return Trajectory(states, regimes)


def compose(system: RegimeSystem, word) -> Operator:
    """The single operator F_{s_k} o ... o F_{s_1} for ``word`` in application order."""
    idx = system.resolve(word)
    if not idx:
        raise EmptyWordError("cannot compose an empty word")
    ops = [system.operators[s] for s in idx]
    if len(ops) == 1:
        return ops[0]
    if all(op.is_affine() for op in ops):
        n = system.dimension
        A = np.eye(n)
        c = np.zeros(n)
        for op in ops:
            A = op.matrix @ A
            c = op.matrix @ c + op.offset
        return AffineOperator(A, c)
    return ComposedOperator(tuple(ops))
