"""Tensor networks, pairwise contraction with operation counting, leaf planning,
plan execution and the generic separator-hierarchy cost bound.

Costs follow the pairwise rule: contracting two tensors costs
``2 * prod(dims of all their distinct bonds)`` scalar operations (one
multiplication and at most one addition per term). Bonds may carry a
separate ``cost_dim`` that is used for bookkeeping instead of the numeric
dimension; every cost routine takes ``use_cost_dims`` to choose.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np

# sphere-separator constants c_d (d = 1..5)
C_D = {1: 1.0, 2: 2.0, 3: 2.135, 4: 2.280, 5: 2.421}
C_PST = 1.971

DEFAULT_MEMORY_CAP = 2**31


class StructureError(ValueError):
    """Inconsistent network or hierarchy structure."""


class ResourceError(RuntimeError):
    """An intermediate tensor would exceed the configured memory cap."""


@dataclass
class Bond:
    id: int
    dim: int
    endpoints: tuple
    cost_dim: int | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise StructureError(f"bond {self.id}: dim must be >= 1")
        if len(self.endpoints) not in (1, 2):
            raise StructureError(f"bond {self.id}: needs one or two endpoints")
        if len(self.endpoints) == 2 and self.endpoints[0] == self.endpoints[1]:
            raise StructureError(f"bond {self.id}: endpoints must be distinct")
        self.endpoints = tuple(self.endpoints)

    @property
    def cdim(self) -> int:
        return self.cost_dim if self.cost_dim is not None else self.dim


@dataclass
class Tensor:
    id: int
    bonds: list
    data: np.ndarray | None = None


@dataclass
class TensorNetwork:
    tensors: dict = field(default_factory=dict)
    bonds: dict = field(default_factory=dict)
    # scalar multiplied into the full contraction (e.g. idle-qubit factors)
    prefactor: complex = 1.0

    def __post_init__(self):
        self._adj = None

    # -- construction -----------------------------------------------------
    def add_tensor(self, tid, data=None):
        if tid in self.tensors:
            raise StructureError(f"duplicate tensor id {tid}")
        self.tensors[tid] = Tensor(tid, [], data)
        self._adj = None
        return self.tensors[tid]

    def add_bond(self, bid, dim, *endpoints, cost_dim=None):
        if bid in self.bonds:
            raise StructureError(f"duplicate bond id {bid}")
        b = Bond(bid, int(dim), tuple(endpoints), cost_dim)
        for t in endpoints:
            if t not in self.tensors:
                raise StructureError(f"bond {bid} refers to unknown tensor {t}")
        for t in endpoints:
            self.tensors[t].bonds.append(bid)
        self.bonds[bid] = b
        self._adj = None
        return b

    # -- queries ----------------------------------------------------------
    def dims(self, use_cost_dims=False):
        if use_cost_dims:
            return {b.id: b.cdim for b in self.bonds.values()}
        return {b.id: b.dim for b in self.bonds.values()}

    def open_bonds(self):
        return [b.id for b in self.bonds.values() if len(b.endpoints) == 1]

    def entry_count(self, tid, use_cost_dims=True) -> int:
        out = 1
        for bid in self.tensors[tid].bonds:
            out *= self.bonds[bid].cdim if use_cost_dims else self.bonds[bid].dim
        return out

    def neighbors(self, use_cost_dims=True):
        """``{tid: {neighbor: product of shared bond dims}}`` (cached)."""
        if self._adj is None or self._adj[0] != use_cost_dims:
            adj = {t: {} for t in self.tensors}
            for b in self.bonds.values():
                if len(b.endpoints) == 2:
                    u, v = b.endpoints
                    dim = b.cdim if use_cost_dims else b.dim
                    adj[u][v] = adj[u].get(v, 1) * dim
                    adj[v][u] = adj[v].get(u, 1) * dim
            self._adj = (use_cost_dims, adj)
        return self._adj[1]

    def boundary_bonds(self, ids):
        """Bonds with exactly one endpoint inside ``ids`` (including open bonds)."""
        ids = set(ids)
        out = set()
        for t in ids:
            for bid in self.tensors[t].bonds:
                ends = self.bonds[bid].endpoints
                if len(ends) == 1 or not (ends[0] in ids and ends[1] in ids):
                    out.add(bid)
        return out

    def subnetwork(self, ids):
        """Restriction to ``ids``; bonds leaving the set become open bonds."""
        ids = set(ids)
        sub = TensorNetwork()
        for t in sorted(ids):
            src = self.tensors[t]
            sub.tensors[t] = Tensor(t, list(src.bonds), src.data)
        for t in sorted(ids):
            for bid in self.tensors[t].bonds:
                if bid in sub.bonds:
                    continue
                b = self.bonds[bid]
                ends = tuple(e for e in b.endpoints if e in ids)
                sub.bonds[bid] = Bond(bid, b.dim, ends, b.cost_dim)
        return sub

    def validate(self, require_data=False, closed=False):
        for t in self.tensors.values():
            if len(set(t.bonds)) != len(t.bonds):
                raise StructureError(f"tensor {t.id} lists a bond twice")
            for bid in t.bonds:
                if bid not in self.bonds or t.id not in self.bonds[bid].endpoints:
                    raise StructureError(f"tensor {t.id}: dangling bond {bid}")
            if t.data is not None:
                shape = tuple(self.bonds[b].dim for b in t.bonds)
                if tuple(np.shape(t.data)) != shape:
                    raise StructureError(f"tensor {t.id}: data shape {np.shape(t.data)} != {shape}")
            elif require_data:
                raise StructureError(f"tensor {t.id} has no data")
        for b in self.bonds.values():
            for e in b.endpoints:
                if e not in self.tensors or b.id not in self.tensors[e].bonds:
                    raise StructureError(f"bond {b.id}: endpoint {e} does not list it")
        if closed and self.open_bonds():
            raise StructureError("network has open bonds; only full contractions are supported")

    # -- serialization ----------------------------------------------------
    def to_json(self, path, binary_path=None, dtype="complex128"):
        """Write structure as JSON and tensor data as raw little-endian complex."""
        path = Path(path)
        doc = {
            "prefactor": [repr(complex(self.prefactor).real), repr(complex(self.prefactor).imag)],
            "bonds": [
                {"id": b.id, "dim": b.dim, "endpoints": list(b.endpoints),
                 **({"cost_dim": b.cost_dim} if b.cost_dim is not None else {})}
                for b in self.bonds.values()
            ],
            "tensors": [],
        }
        has_data = all(t.data is not None for t in self.tensors.values()) and self.tensors
        dt = np.dtype(dtype).newbyteorder("<")
        offset = 0
        chunks = []
        for t in self.tensors.values():
            entry = {"id": t.id, "bonds": list(t.bonds)}
            if has_data:
                arr = np.ascontiguousarray(t.data, dtype=dt).ravel()
                entry["offset"] = offset
                entry["count"] = int(arr.size)
                offset += arr.size
                chunks.append(arr)
            doc["tensors"].append(entry)
        if has_data:
            binary_path = Path(binary_path) if binary_path else path.with_suffix(".bin")
            doc["data"] = {"file": binary_path.name, "dtype": dtype, "byteorder": "little"}
            with open(binary_path, "wb") as fh:
                for arr in chunks:
                    fh.write(arr.tobytes())
        path.write_text(json.dumps(doc, indent=1))

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        doc = json.loads(path.read_text())
        net = cls()
        re_, im_ = doc.get("prefactor", ["1.0", "0.0"])
        net.prefactor = complex(float(re_), float(im_))
        raw = None
        if "data" in doc:
            dt = np.dtype(doc["data"]["dtype"]).newbyteorder("<")
            raw = np.fromfile(path.parent / doc["data"]["file"], dtype=dt)
        for t in doc["tensors"]:
            net.tensors[t["id"]] = Tensor(t["id"], list(t["bonds"]), None)
        for b in doc["bonds"]:
            net.bonds[b["id"]] = Bond(b["id"], b["dim"], tuple(b["endpoints"]), b.get("cost_dim"))
        if raw is not None:
            for t in doc["tensors"]:
                shape = tuple(net.bonds[bid].dim for bid in t["bonds"])
                chunk = raw[t["offset"]:t["offset"] + t["count"]]
                net.tensors[t["id"]].data = chunk.astype(np.complex128).reshape(shape)
        net.validate()
        return net


def _as_bitlen_log2(x: int) -> float:
    return math.log2(x) if x > 0 else float("-inf")


@dataclass
class CostLedger:
    exact_ops: int
    per_node: dict = field(default_factory=dict)
    root_open_bonds: tuple = ()

    @property
    def log2_scalar_ops(self) -> float:
        return _as_bitlen_log2(self.exact_ops)


# -- pairwise contraction ---------------------------------------------------

def pair_ops(bonds_a, bonds_b, dims) -> int:
    """``2 * prod`` of the distinct bond dims of the two operands."""
    out = 2
    for bid in set(bonds_a) | set(bonds_b):
        out *= dims[bid]
    return out


def pair_result_bonds(bonds_a, bonds_b):
    return sorted(set(bonds_a) ^ set(bonds_b))


def contract_pair(A: Tensor, B: Tensor, dims, new_id=None):
    """Contract two tensors over their shared bonds.

    Returns ``(tensor, ops)``. The result carries the symmetric difference of
    the bonds in sorted order; ``ops`` follows the pairwise cost rule with
    ``dims``.
    """
    if A.id == B.id and A.id is not None:
        raise StructureError("cannot contract a tensor with itself")
    shared = sorted(set(A.bonds) & set(B.bonds))
    ops = pair_ops(A.bonds, B.bonds, dims)
    out_bonds = pair_result_bonds(A.bonds, B.bonds)
    data = None
    if A.data is not None and B.data is not None:
        ax_a = [A.bonds.index(s) for s in shared]
        ax_b = [B.bonds.index(s) for s in shared]
        for i, j, s in zip(ax_a, ax_b, shared):
            if A.data.shape[i] != B.data.shape[j]:
                raise StructureError(f"dimension mismatch on shared bond {s}")
        res = np.tensordot(A.data, B.data, axes=(ax_a, ax_b))
        order = [b for b in A.bonds if b not in shared] + [b for b in B.bonds if b not in shared]
        perm = [order.index(b) for b in out_bonds]
        data = np.ascontiguousarray(np.transpose(res, perm)) if perm else res
    return Tensor(new_id, out_bonds, data), ops


# -- greedy leaf planning ----------------------------------------------------

def greedy_leaf_plan(cluster: TensorNetwork, use_cost_dims=True):
    """Greedy pairwise order for a small cluster, as an SSA path.

    Tensors are numbered ``0..m-1`` in sorted id order and each contraction
    appends a new tensor numbered ``m, m+1, ...``. Each step takes the pair
    with the fewest operations, then the smaller result, then the
    lexicographically smallest pair.
    """
    dims = cluster.dims(use_cost_dims)
    live = {i: tuple(cluster.tensors[t].bonds) for i, t in enumerate(sorted(cluster.tensors))}
    nxt = len(live)
    plan = []
    while len(live) > 1:
        best = None
        keys = sorted(live)
        for x in range(len(keys)):
            for y in range(x + 1, len(keys)):
                i, j = keys[x], keys[y]
                ops = pair_ops(live[i], live[j], dims)
                size = 1
                for bid in set(live[i]) ^ set(live[j]):
                    size *= dims[bid]
                cand = (ops, size, i, j)
                if best is None or cand < best:
                    best = cand
        _, _, i, j = best
        live[nxt] = tuple(pair_result_bonds(live.pop(i), live.pop(j)))
        plan.append((i, j))
        nxt += 1
    return plan


def plan_ops(bond_lists, plan, dims) -> int:
    """Total operations of an SSA path over the given operand bond lists."""
    live = dict(enumerate(tuple(b) for b in bond_lists))
    nxt = len(live)
    total = 0
    for i, j in plan:
        a, b = live.pop(i), live.pop(j)
        total += pair_ops(a, b, dims)
        live[nxt] = tuple(pair_result_bonds(a, b))
        nxt += 1
    return total


# -- hierarchy cost ------------------------------------------------------------

def _check_node(node, network):
    ids = set(node.tensor_ids)
    if node.children is None:
        if node.leaf_plan is None:
            raise StructureError(f"leaf {node.node_id} has no plan")
        if len(node.leaf_plan) != max(0, len(ids) - 1):
            raise StructureError(f"leaf {node.node_id}: plan length does not match size")
        return
    if node.leaf_plan is not None:
        raise StructureError(f"internal node {node.node_id} carries a leaf plan")
    a, b = (set(c.tensor_ids) for c in node.children)
    if a & b or (a | b) != ids or not a or not b:
        raise StructureError(f"children of node {node.node_id} do not partition it")


def hierarchy_cost(root, network: TensorNetwork, use_cost_dims=True) -> CostLedger:
    """Bottom-up operation count of the contraction order fixed by a hierarchy.

    Leaves cost their greedy plan; an internal node adds
    ``2 * prod(dims of all indices of its two children's effective tensors)``
    with shared indices counted once. ``per_node`` holds each node's own
    contribution; their sum is ``exact_ops``.
    """
    dims = network.dims(use_cost_dims)
    if set(root.tensor_ids) != set(network.tensors):
        raise StructureError("hierarchy root does not cover the network")
    per_node = {}
    open_of = {}
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if not done:
            _check_node(node, network)
            stack.append((node, True))
            if node.children is not None:
                stack.extend((c, False) for c in node.children)
            continue
        if node.children is None:
            ids = sorted(node.tensor_ids)
            cost = plan_ops([network.tensors[t].bonds for t in ids], node.leaf_plan, dims)
            open_of[node.node_id] = network.boundary_bonds(ids)
        else:
            a, b = (open_of.pop(c.node_id) for c in node.children)
            cost = pair_ops(a, b, dims)
            open_of[node.node_id] = a ^ b
        per_node[node.node_id] = cost
    return CostLedger(sum(per_node.values()), per_node, tuple(sorted(open_of[root.node_id])))


# -- execution -------------------------------------------------------------

def execute_plan(network: TensorNetwork, root, memory_cap=DEFAULT_MEMORY_CAP, return_ops=False):
    """Contract a closed, data-carrying network in the order fixed by ``root``."""
    network.validate(require_data=True, closed=True)
    if set(root.tensor_ids) != set(network.tensors):
        raise StructureError("hierarchy root does not cover the network")
    dims = network.dims(False)
    ops = 0

    def guard(bonds):
        size = 1
        for bid in bonds:
            size *= dims[bid]
        if size > memory_cap:
            raise ResourceError(f"intermediate of {size} entries exceeds cap {memory_cap}")

    def run(node):
        nonlocal ops
        _check_node(node, network)
        if node.children is None:
            ids = sorted(node.tensor_ids)
            live = {i: network.tensors[t] for i, t in enumerate(ids)}
            nxt = len(live)
            for i, j in node.leaf_plan:
                a, b = live.pop(i), live.pop(j)
                guard(pair_result_bonds(a.bonds, b.bonds))
                live[nxt], k = contract_pair(a, b, dims, new_id=("leaf", node.node_id, nxt))
                ops += k
                nxt += 1
            (out,) = live.values()
            return out
        a, b = (run(c) for c in node.children)
        guard(pair_result_bonds(a.bonds, b.bonds))
        out, k = contract_pair(a, b, dims, new_id=("node", node.node_id))
        ops += k
        return out

    out = run(root)
    if out.bonds:
        raise StructureError("contraction left open bonds")
    value = complex(np.asarray(out.data).reshape(())) * complex(network.prefactor)
    return (value, ops) if return_ops else value


def plan_peak_entries(root, network: TensorNetwork) -> int:
    """Largest intermediate (in entries, numeric dims) that :func:`execute_plan` would build."""
    dims = network.dims(False)
    peak = 0

    def size(bonds):
        out = 1
        for b in bonds:
            out *= dims[b]
        return out

    def run(node):
        nonlocal peak
        if node.children is None:
            ids = sorted(node.tensor_ids)
            live = {i: network.tensors[t].bonds for i, t in enumerate(ids)}
            nxt = len(live)
            for i, j in node.leaf_plan:
                live[nxt] = pair_result_bonds(live.pop(i), live.pop(j))
                peak = max(peak, size(live[nxt]))
                nxt += 1
            (out,) = live.values()
            return out
        a, b = (run(c) for c in node.children)
        out = pair_result_bonds(a, b)
        peak = max(peak, size(out))
        return out

    run(root)
    return peak


# -- closed-form bounds -------------------------------------------------------

def c_constant(d: int, c_d: float | None = None) -> float:
    if c_d is not None:
        return float(c_d)
    if d not in C_D:
        raise ValueError(f"no separator constant tabulated for d={d}; pass c_d")
    return C_D[d]


def a_constant(d: int, c_d: float | None = None):
    """``c_d / (2 - 2((d+1)/(d+2))^(1-1/d))`` in extended precision."""
    with mpmath.workdps(50):
        c = mpmath.mpf(c_constant(d, c_d))
        q = mpmath.mpf(d + 1) / (d + 2)
        return c / (2 - 2 * q ** (1 - mpmath.mpf(1) / d))


def a_planar():
    with mpmath.workdps(50):
        return mpmath.mpf(C_PST) / (2 - 2 * mpmath.sqrt(mpmath.mpf(2) / 3))


def depth_exponent(d: int):
    """``1 / log2((d+2)/(d+1))``."""
    with mpmath.workdps(50):
        return 1 / mpmath.log(mpmath.mpf(d + 2) / (d + 1), 2)


def theorem1_bound(n: int, M: int, k: int, d: int, c_d: float | None = None) -> float:
    """log2 of ``2 n^(1/log2((d+2)/(d+1))) M^(a_d k^(1/d) n^(1-1/d))``."""
    if n < 1 or M < 2 or k < 1:
        raise ValueError("need n >= 1, M >= 2, k >= 1")
    if c_d is None and not 2 <= d <= 5:
        raise ValueError(f"d={d} outside the tabulated range 2..5; pass c_d")
    with mpmath.workdps(50):
        n_, M_, k_ = mpmath.mpf(n), mpmath.mpf(M), mpmath.mpf(k)
        a = a_constant(d, c_d)
        val = (1 + depth_exponent(d) * mpmath.log(n_, 2)
               + a * k_ ** (mpmath.mpf(1) / d) * n_ ** (1 - mpmath.mpf(1) / d) * mpmath.log(M_, 2))
        return float(val)


def level_log2_interfaces(n: int, M: int, k: int, d: int, c_d: float | None = None):
    """log2 of the worst-case ``M^(l+1)`` for each hierarchy level ``l = 0..z-1``."""
    c = mpmath.mpf(c_constant(d, c_d))
    q = mpmath.mpf(d + 1) / (d + 2)
    with mpmath.workdps(50):
        z = int(mpmath.floor(1 + mpmath.log(n, 2) / mpmath.log(1 / q, 2)))
        out = []
        acc = mpmath.mpf(0)
        for j in range(1, z + 1):
            acc += c * mpmath.mpf(k) ** (mpmath.mpf(1) / d) * (n * q ** (j - 1)) ** (1 - mpmath.mpf(1) / d)
            out.append(float(acc / 2 * mpmath.log(M, 2)))
    return out


def closed_form_sum(level_log2, leaf_log2: float | None = None) -> float:
    """log2 of ``sum_l 2^(l+1) M^(l+1) + 2^z * leaf`` given per-level log2 sizes."""
    with mpmath.workdps(50):
        total = mpmath.mpf(0)
        for ell, lg in enumerate(level_log2):
            total += mpmath.mpf(2) ** (ell + 1 + mpmath.mpf(lg))
        if leaf_log2 is not None:
            total += mpmath.mpf(2) ** (len(level_log2) + mpmath.mpf(leaf_log2))
        return float(mpmath.log(total, 2))
