"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import itertools
from decimal import Decimal, getcontext

import numpy as np

from spheresep.circuit import Circuit, Gate, Measurement, haar_unitary, random_projector
from spheresep.geometry import EmbeddedSphere
from spheresep.tncore import C_D, TensorNetwork


def jittered_grid(n, d, rng, spacing=1.5, jitter=0.25, radius=1.0):
    """First ``n`` points of a cubic grid, jittered, as unit spheres."""
    side = int(np.ceil(n ** (1.0 / d) - 1e-9))
    pts = np.array(list(itertools.product(range(side), repeat=d))[:n], dtype=float) * spacing
    pts += rng.uniform(-jitter, jitter, pts.shape)
    return [EmbeddedSphere(p, radius, i) for i, p in enumerate(pts)]


def sphere_network(spheres, dim=2):
    """Network with a bond of dimension ``dim`` between every pair of intersecting spheres."""
    net = TensorNetwork()
    for s in spheres:
        net.add_tensor(s.tensor_id)
    bid = 0
    for a, b in itertools.combinations(spheres, 2):
        if np.linalg.norm(a.center - b.center) <= a.radius + b.radius:
            net.add_bond(bid, dim, a.tensor_id, b.tensor_id)
            bid += 1
    return net


def random_data(net, rng):
    """Fill every tensor with standard complex normal entries."""
    for t in net.tensors.values():
        shape = tuple(net.bonds[b].dim for b in t.bonds)
        t.data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return net


def grid_network(rows, cols, dim, rng):
    """Closed rows x cols grid of random tensors (the tensor id is ``r * cols + c``)."""
    net = TensorNetwork()
    for t in range(rows * cols):
        net.add_tensor(t)
    bid = 0
    for r in range(rows):
        for c in range(cols):
            t = r * cols + c
            if c + 1 < cols:
                net.add_bond(bid, dim, t, t + 1)
                bid += 1
            if r + 1 < rows:
                net.add_bond(bid, dim, t, t + cols)
                bid += 1
    return random_data(net, rng)


def einsum_oracle(net):
    """Full contraction in one einsum call (independent of any plan)."""
    letters = {}
    for b in net.bonds:
        letters[b] = chr(ord("a") + len(letters)) if len(letters) < 26 else chr(ord("A") + len(letters) - 26)
    terms, ops = [], []
    for t in net.tensors.values():
        terms.append("".join(letters[b] for b in t.bonds))
        ops.append(t.data)
    return complex(np.einsum(",".join(terms) + "->", *ops)) * complex(net.prefactor)


def random_small_circuit(rows, cols, rng, steps=4, p_two=0.5, p_single=0.5):
    """Nearest-neighbour Haar circuit on a rows x cols grid with random projectors."""
    pos = np.array([(x, y) for x in range(rows) for y in range(cols)], dtype=float)
    pairs = [(x * cols + y, (x + 1) * cols + y) for x in range(rows - 1) for y in range(cols)]
    pairs += [(x * cols + y, x * cols + y + 1) for x in range(rows) for y in range(cols - 1)]
    gates = []
    for t in range(steps):
        used = set()
        for q in range(rows * cols):
            if rng.random() < p_single:
                gates.append(Gate((q,), haar_unitary(2, rng), t))
        for idx in rng.permutation(len(pairs)):
            a, b = pairs[idx]
            if a in used or b in used or rng.random() >= p_two:
                continue
            used.update((a, b))
            gates.append(Gate((a, b), haar_unitary(4, rng), t))
    c = Circuit(2, pos, gates, steps, 1.0, 1.0)
    m = Measurement({q: random_projector(rng) for q in range(rows * cols)})
    return c, m


def decimal_log2(x):
    return x.ln() / Decimal(2).ln()


def decimal_a(d, c_d=None):
    getcontext().prec = 60
    c = Decimal(str(C_D[d] if c_d is None else c_d))
    q = Decimal(d + 1) / Decimal(d + 2)
    return c / (2 - 2 * q ** (1 - Decimal(1) / Decimal(d)))


def decimal_theorem1(n, M, k, d):
    """Independent log2 of ``2 n^(1/log2((d+2)/(d+1))) M^(a_d k^(1/d) n^(1-1/d))``."""
    getcontext().prec = 60
    n_, k_ = Decimal(n), Decimal(k)
    expo = 1 / decimal_log2(Decimal(d + 2) / Decimal(d + 1))
    inv = Decimal(1) / Decimal(d)
    return 1 + expo * decimal_log2(n_) + decimal_a(d) * k_ ** inv * n_ ** (1 - inv) * decimal_log2(Decimal(M))


def decimal_theorem2(sum_f, F, d, l, r):
    """Independent log2 of ``[2S]^(1/log2((d+2)/(d+1))) 2^(1 + 8 a_d (1 + l/r) F^(1/d) S^(1-1/d))``."""
    getcontext().prec = 60
    S = Decimal(sum_f)
    inv = Decimal(1) / Decimal(d)
    expo = 1 / decimal_log2(Decimal(d + 2) / Decimal(d + 1))
    return (expo * decimal_log2(2 * S) + 1
            + 8 * decimal_a(d) * (1 + Decimal(str(l)) / Decimal(str(r))) * Decimal(F) ** inv * S ** (1 - inv))
