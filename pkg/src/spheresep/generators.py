"""Seeded generators for the example circuit families on an L x L grid.

Qubit ``x * L + y`` sits at position ``(x, y)``; spacing and gate range are 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, haar_unitary


def grid_positions(L: int) -> np.ndarray:
    return np.array([(x, y) for x in range(L) for y in range(L)], dtype=float)


def grid_bonds(L: int):
    """Horizontal ``((x, y), (x+1, y))`` then vertical ``((x, y), (x, y+1))`` bonds as qubit pairs."""
    horiz = [(x * L + y, (x + 1) * L + y) for x in range(L - 1) for y in range(L)]
    vert = [(x * L + y, x * L + y + 1) for x in range(L) for y in range(L - 1)]
    return horiz, vert


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# -- IQP -----------------------------------------------------------------------------

@dataclass
class IqpParams:
    L: int
    T: int | None = None
    gamma: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be at least 2")
        if self.T is None:
            self.T = self.L * self.L

    @property
    def pair_probability(self) -> float:
        N = self.L * self.L
        return 0.75 * self.gamma * math.log(N) / N


def gen_iqp(params: IqpParams, stats: dict | None = None) -> Circuit:
    """Random phase gates with probability 7/8, then controlled-phase-type
    gates on free nearest-neighbour pairs visited in a shuffled order."""
    rng = _rng(params.seed)
    L, T = params.L, params.T
    N = L * L
    horiz, vert = grid_bonds(L)
    pairs = horiz + vert
    p = params.pair_probability
    gates = []
    visits = eligible = placed = 0
    for t in range(T):
        for q in range(N):
            if rng.random() < 7 / 8:
                m = int(rng.integers(8))
                gates.append(Gate((q,), np.diag([1.0, np.exp(1j * math.pi * m / 4)]), t))
        used = np.zeros(N, dtype=bool)
        for idx in rng.permutation(len(pairs)):
            a, b = pairs[idx]
            visits += 1
            if used[a] or used[b]:
                continue
            eligible += 1
            if rng.random() < p:
                m = int(rng.integers(4))
                gates.append(Gate((a, b), np.diag([1.0, 1.0, 1.0, 1j ** m]), t))
                used[a] = used[b] = True
                placed += 1
    if stats is not None:
        stats.update(visits=visits, eligible=eligible, placed=placed)
    return Circuit(2, grid_positions(L), gates, T, 1.0, 1.0)


# -- Sycamore-type ----------------------------------------------------------------

DEFAULT_PATTERN = ("A", "B", "C", "D", "C", "D", "A", "B")


@dataclass
class SycamoreParams:
    L: int
    q: int = 5
    p_idle: float = 0.88
    seed: int = 0
    pattern: tuple = DEFAULT_PATTERN
    gates_per_coupling: int = 2

    def __post_init__(self):
        if not 0 <= self.p_idle <= 1:
            raise ValueError("p_idle must lie in [0, 1]")
        if self.L < 2 or self.q < 1:
            raise ValueError("need L >= 2 and q >= 1")


def coupling_classes(L: int):
    """A/B: horizontal bonds from even/odd x; C/D: vertical bonds from even/odd y."""
    horiz, vert = grid_bonds(L)
    cls = {"A": [], "B": [], "C": [], "D": []}
    for a, b in horiz:
        cls["A" if (a // L) % 2 == 0 else "B"].append((a, b))
    for a, b in vert:
        cls["C" if (a % L) % 2 == 0 else "D"].append((a, b))
    return cls


def gen_sycamore(params: SycamoreParams) -> Circuit:
    """Periods of eight coupling cycles; each period every qubit is idle with
    probability ``p_idle``. Per cycle an active qubit gets a Haar single-qubit
    gate and, when its partner in the cycle's class is active too,
    ``gates_per_coupling`` Haar two-qubit gates on that bond."""
    rng = _rng(params.seed)
    L = params.L
    N = L * L
    cls = coupling_classes(L)
    gates = []
    cycle = 0
    for _ in range(params.q):
        active = rng.random(N) >= params.p_idle
        for name in params.pattern:
            for qb in range(N):
                if active[qb]:
                    gates.append(Gate((qb,), haar_unitary(2, rng), cycle))
            for a, b in cls[name]:
                if active[a] and active[b]:
                    for _ in range(params.gates_per_coupling):
                        gates.append(Gate((a, b), haar_unitary(4, rng), cycle))
            cycle += 1
    return Circuit(2, grid_positions(L), gates, cycle, 1.0, 1.0)


# -- (2+1)-d random circuits with cavities ----------------------------------------

@dataclass
class Random3dParams:
    L: int
    alpha: float = 0.1
    S_cavity: int = 5
    sigma: float = 10.0
    lam: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.lam is None:
            self.lam = 5e4 * (self.L / 200.0) ** 3.5
        if self.T < 1:
            raise ValueError("alpha * L must round to at least one time step")

    @property
    def T(self) -> int:
        return int(round(self.alpha * self.L))


def cavity_acceptance(x, y, t, L, T, sigma) -> float:
    """Placement probability with coordinates measured from the space-time centre."""
    xc, yc, tc = (L - 1) / 2.0, (L - 1) / 2.0, (T - 1) / 2.0
    return math.exp(-(((x - xc) / L) ** 2 + ((y - yc) / L) ** 2 + ((t - tc) / T) ** 2) / sigma ** 2)


def gen_random3d(params: Random3dParams, stats: dict | None = None) -> Circuit:
    """Dense brick layers of Haar gates with Poisson-many S x S x S cavities."""
    rng = _rng(params.seed)
    L, T, S = params.L, params.T, params.S_cavity
    v = int(rng.poisson(params.lam))
    hole = np.zeros((T, L, L), dtype=bool)
    accepted = []
    for _ in range(v):
        x, y, t = int(rng.integers(L)), int(rng.integers(L)), int(rng.integers(T))
        if rng.random() < cavity_acceptance(x, y, t, L, T, params.sigma):
            accepted.append((x, y, t))
            hole[t:t + S, x:x + S, y:y + S] = True
    gates = []
    for t in range(T):
        horizontal = bool(rng.integers(2))
        offset = int(rng.integers(2))
        for u in range(offset, L - 1, 2):
            for w in range(L):
                if horizontal:
                    a, b = (u, w), (u + 1, w)
                else:
                    a, b = (w, u), (w, u + 1)
                if hole[t, a[0], a[1]] or hole[t, b[0], b[1]]:
                    continue
                gates.append(Gate((a[0] * L + a[1], b[0] * L + b[1]), haar_unitary(4, rng), t))
    if stats is not None:
        stats.update(drawn=v, accepted=len(accepted), cavities=accepted)
    return Circuit(2, grid_positions(L), gates, T, 1.0, 1.0)
