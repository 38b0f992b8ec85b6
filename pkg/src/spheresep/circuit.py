"""Circuit IR, conversion of ``<0|U^dag P U|0>`` into an embedded tensor network,
analytic circuit bounds, naive baselines and a dense statevector oracle."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np

from .geometry import EmbeddedSphere
from .tncore import TensorNetwork, a_constant, a_planar, depth_exponent

UNITARY_TOL = 1e-10
SCHMIDT_TOL = 1e-12
GATE_BOND_COST_DIM = 4
DEFAULT_STATEVECTOR_CAP = 24

KET0 = np.array([1.0, 0.0], dtype=complex)
PROJ0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


class ValidationError(ValueError):
    pass


def haar_unitary(n: int, rng) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def is_unitary(U, tol=UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() < tol


@dataclass
class Gate:
    qubits: tuple
    matrix: np.ndarray
    time: int = 0

    def __post_init__(self):
        self.qubits = tuple(int(q) for q in self.qubits)
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if len(self.qubits) not in (1, 2):
            raise ValidationError("gates act on one or two qubits")
        if len(self.qubits) == 2 and self.qubits[0] == self.qubits[1]:
            raise ValidationError("two-qubit gate needs distinct qubits")
        dim = 2 ** len(self.qubits)
        if self.matrix.shape != (dim, dim):
            raise ValidationError(f"gate on {self.qubits} needs a {dim}x{dim} matrix")

    @property
    def kind(self) -> str:
        return "single" if len(self.qubits) == 1 else "two"


@dataclass
class Circuit:
    """Qubits at fixed positions in R^d acted on by a time-ordered gate list.

    Two-qubit matrices use the basis index ``2*a + b`` for ``qubits = (a, b)``.
    """

    d: int
    positions: np.ndarray
    gates: list = field(default_factory=list)
    T: int = 0
    r: float | None = None
    l: float | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, self.d)
        if self.r is None:
            self.r = self._min_spacing()
        if self.l is None:
            self.l = max([self.gate_range(g) for g in self.gates if len(g.qubits) == 2], default=self.r)

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    def _min_spacing(self) -> float:
        P = self.positions
        if len(P) < 2:
            return 1.0
        from scipy.spatial import cKDTree

        dist, _ = cKDTree(P).query(P, k=2)
        return float(dist[:, 1].min())

    def gate_range(self, g: Gate) -> float:
        a, b = g.qubits
        return float(np.linalg.norm(self.positions[a] - self.positions[b]))

    def validate(self):
        if self.N and self._min_spacing() < self.r - 1e-12:
            raise ValidationError("qubits closer than the recorded minimal spacing r")
        last = -math.inf
        for g in self.gates:
            if any(q < 0 or q >= self.N for q in g.qubits):
                raise ValidationError(f"gate acts on unknown qubit {g.qubits}")
            if not is_unitary(g.matrix):
                raise ValidationError(f"gate on {g.qubits} at t={g.time} is not unitary")
            if len(g.qubits) == 2 and self.gate_range(g) > self.l + 1e-12:
                raise ValidationError(f"gate on {g.qubits} exceeds range l={self.l}")
            if g.time < last:
                raise ValidationError("gates must be listed in time order")
            last = g.time

    def profile(self) -> "GateProfile":
        f = np.zeros(self.N, dtype=np.int64)
        for g in self.gates:
            if len(g.qubits) == 2:
                f[g.qubits[0]] += 1
                f[g.qubits[1]] += 1
        return GateProfile(f)

    def idle_qubits(self) -> int:
        busy = set()
        for g in self.gates:
            busy.update(g.qubits)
        return self.N - len(busy)

    # -- file format --------------------------------------------------------
    def to_dict(self):
        return {
            "d": self.d,
            "positions": [[repr(float(x)) for x in p] for p in self.positions],
            "r": repr(float(self.r)),
            "l": repr(float(self.l)),
            "T": int(self.T),
            "gates": [
                {"kind": g.kind, "qubits": list(g.qubits), "time": int(g.time),
                 "matrix": _matrix_to_strings(g.matrix)}
                for g in self.gates
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        d = int(doc["d"])
        gates = []
        for g in doc["gates"]:
            q = tuple(g["qubits"])
            gates.append(Gate(q, _matrix_from_strings(g["matrix"], 2 ** len(q)), int(g["time"])))
            if g.get("kind", gates[-1].kind) != gates[-1].kind:
                raise ValidationError(f"gate kind {g['kind']!r} does not match its qubits")
        pos = np.array([[float(x) for x in p] for p in doc["positions"]], dtype=float).reshape(-1, d)
        return cls(d, pos, gates, int(doc["T"]), float(doc["r"]), float(doc["l"]))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def _matrix_to_strings(M):
    return [[repr(float(z.real)), repr(float(z.imag))] for z in np.asarray(M).ravel()]


def _matrix_from_strings(pairs, dim):
    vals = [complex(float(re_), float(im_)) for re_, im_ in pairs]
    return np.array(vals, dtype=complex).reshape(dim, dim)


@dataclass
class Measurement:
    """Product projector; qubits without an entry use |0><0|."""

    projectors: dict = field(default_factory=dict)

    def __post_init__(self):
        self.projectors = {int(q): np.asarray(P, dtype=complex) for q, P in self.projectors.items()}
        for q, P in self.projectors.items():
            if P.shape != (2, 2):
                raise ValidationError(f"projector on qubit {q} must be 2x2")
            if np.abs(P @ P - P).max() > 1e-10 or np.abs(P - P.conj().T).max() > 1e-10:
                raise ValidationError(f"operator on qubit {q} is not a projector")

    def get(self, q) -> np.ndarray:
        return self.projectors.get(q, PROJ0)

    def to_json(self, path=None) -> str:
        text = json.dumps({"projectors": {str(q): _matrix_to_strings(P) for q, P in self.projectors.items()}},
                          indent=1)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, path):
        doc = json.loads(Path(path).read_text())
        return cls({int(q): _matrix_from_strings(M, 2) for q, M in doc.get("projectors", {}).items()})


def random_projector(rng) -> np.ndarray:
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


@dataclass
class GateProfile:
    f: np.ndarray

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=np.int64)

    @property
    def F(self) -> int:
        return int(self.f.max()) if len(self.f) else 0

    @property
    def sum_f(self) -> int:
        return int(self.f.sum())


# -- conversion -------------------------------------------------------------------

def split_two_qubit_gate(U):
    """Operator-Schmidt split ``U = sum_k A[:, :, k] (x) B[:, :, k]``.

    ``A[a_out, a_in, k]`` acts on the first qubit, ``B[b_out, b_in, k]`` on the
    second; both are truncated to the numerical rank ``chi``.
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (4, 4) or not is_unitary(U):
        raise ValidationError("split_two_qubit_gate needs a 4x4 unitary")
    M = U.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    X, s, Y = np.linalg.svd(M)
    chi = max(1, int(np.count_nonzero(s > SCHMIDT_TOL)))
    root = np.sqrt(s[:chi])
    A = (X[:, :chi] * root[None, :]).reshape(2, 2, chi)
    B = (root[:, None] * Y[:chi, :]).T.reshape(2, 2, chi)
    return A, B, chi


def reassemble(A, B):
    """Inverse of :func:`split_two_qubit_gate`."""
    M = np.einsum("aik,bjk->abij", A, B)
    return M.reshape(4, 4)


@dataclass
class _Half:
    gate: int
    side: int  # 0: first qubit of the gate, 1: second
    time: int
    order: int
    core: np.ndarray  # (out, in, chi)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)


def circuit_to_network(c: Circuit, m: Measurement | None = None, epsilon: float | None = None):
    """Embedded tensor network for ``<0| U^dag (x)_i P_i U |0>``.

    Every two-qubit gate on (i, j) becomes two tensors placed a quarter of
    the way from each qubit towards the other, for both U and U^dag, with
    spheres of radius ``l/4 + epsilon``. Single-qubit gates, projectors and
    the |0> boundary vectors are absorbed into the chronologically nearest
    half-gate tensor on the same wire; wires without two-qubit gates
    contribute a scalar factor to ``network.prefactor``.

    Returns ``(network, embedding, k_bound)``.
    """
    m = m if m is not None else Measurement()
    epsilon = c.r / 100.0 if epsilon is None else epsilon
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c.validate()
    wires = [[] for _ in range(c.N)]  # per qubit: ('h', half) / ('s', order, time, matrix)
    halves = []
    g2 = 0
    for order, g in enumerate(c.gates):
        if len(g.qubits) == 2:
            A, B, _ = split_two_qubit_gate(g.matrix)
            for side, core in ((0, A), (1, B)):
                h = _Half(g2, side, g.time, order, core)
                halves.append(h)
                wires[g.qubits[side]].append(("h", h))
            g2 += 1
        else:
            wires[g.qubits[0]].append(("s", order, g.time, g.matrix))

    n_half = 2 * g2
    net = TensorNetwork()
    prefactor = 1.0 + 0.0j
    for q, seq in enumerate(wires):
        hs = [i for i, ev in enumerate(seq) if ev[0] == "h"]
        if not hs:
            V = np.eye(2, dtype=complex)
            for ev in seq:
                V = ev[3] @ V
            psi = V @ KET0
            prefactor *= complex(np.vdot(psi, m.get(q) @ psi))
            continue
        for pos, ev in enumerate(seq):
            if ev[0] != "s":
                continue
            prev = max((i for i in hs if i < pos), default=None)
            nxt = min((i for i in hs if i > pos), default=None)
            if prev is None:
                seq[nxt][1].pre.append(ev[3])
            elif nxt is None:
                seq[prev][1].post.append(ev[3])
            else:
                dp = ev[2] - seq[prev][1].time
                dn = seq[nxt][1].time - ev[2]
                if dp <= dn:
                    seq[prev][1].post.append(ev[3])
                else:
                    seq[nxt][1].pre.append(ev[3])

    def tid(h, bra):
        return (n_half if bra else 0) + 2 * h.gate + h.side

    for bra in (False, True):
        for h in halves:
            net.add_tensor(tid(h, bra))

    bond_id = 0
    internal = {}
    for bra in (False, True):
        for g in range(g2):
            a = tid(halves[2 * g], bra)
            b = tid(halves[2 * g + 1], bra)
            chi = halves[2 * g].core.shape[2]
            net.add_bond(bond_id, chi, a, b, cost_dim=GATE_BOND_COST_DIM)
            internal[a] = internal[b] = bond_id
            bond_id += 1
    # wire bonds: consecutive halves in each layer, and the top bond joining the layers
    roles = {}
    for q, seq in enumerate(wires):
        hs = [ev[1] for ev in seq if ev[0] == "h"]
        if not hs:
            continue
        for bra in (False, True):
            for h0, h1 in zip(hs, hs[1:]):
                net.add_bond(bond_id, 2, tid(h0, bra), tid(h1, bra))
                roles[(tid(h0, bra), "out")] = bond_id
                roles[(tid(h1, bra), "in")] = bond_id
                bond_id += 1
        top = hs[-1]
        net.add_bond(bond_id, 2, tid(top, False), tid(top, True))
        roles[(tid(top, False), "out")] = bond_id
        roles[(tid(top, True), "out")] = bond_id
        bond_id += 1

    data = {}
    for q, seq in enumerate(wires):
        hs = [ev[1] for ev in seq if ev[0] == "h"]
        for idx, h in enumerate(hs):
            pre = np.eye(2, dtype=complex)
            for V in h.pre:
                pre = V @ pre
            post = np.eye(2, dtype=complex)
            for V in h.post:
                post = V @ post
            T = np.einsum("ab,bck,cd->adk", post, h.core, pre)
            labels = ["out", "in", "k"]
            if idx == 0:
                T = np.einsum("ack,c->ak", T, KET0)
                labels = ["out", "k"]
            for bra in (False, True):
                t = tid(h, bra)
                X = T.conj() if bra else T
                if not bra and idx == len(hs) - 1:
                    X = np.tensordot(m.get(q), X, axes=(1, 0))
                bond_for = {"out": roles[(t, "out")], "k": internal[t]}
                if idx > 0:
                    bond_for["in"] = roles[(t, "in")]
                label_of = {b: lbl for lbl, b in bond_for.items()}
                perm = [labels.index(label_of[bid]) for bid in net.tensors[t].bonds]
                data[t] = np.ascontiguousarray(np.transpose(X, perm))
    for t, arr in data.items():
        net.tensors[t].data = arr
    net.prefactor = prefactor
    net.validate(require_data=True, closed=True)

    radius = c.l / 4.0 + epsilon
    embedding = []
    pairs = [g.qubits for g in c.gates if len(g.qubits) == 2]
    for h in halves:
        a, b = pairs[h.gate]
        qa, qb = (a, b) if h.side == 0 else (b, a)
        pos = c.positions[qa] + (c.positions[qb] - c.positions[qa]) / 4.0
        for bra in (False, True):
            embedding.append(EmbeddedSphere(pos.copy(), radius, tid(h, bra)))
    embedding.sort(key=lambda s: s.tensor_id)
    return net, embedding, k_bound(c)


def k_bound(c: Circuit) -> int:
    """Largest integer strictly below ``2F((l/4 + r/4)/(r/4))^d``."""
    F = c.profile().F
    x = 2 * F * ((c.l + c.r) / c.r) ** c.d
    k = math.ceil(x) - 1
    return max(1, k)


# -- bounds -----------------------------------------------------------------------------

def theorem2_bound(profile: GateProfile, d: int, l: float, r: float, c_d: float | None = None) -> float:
    """log2 of ``[2 S]^(1/log2((d+2)/(d+1))) 2^(1 + 8 a_d (1+l/r) F^(1/d) S^(1-1/d))``, ``S = sum f``."""
    S = profile.sum_f
    if S < 1:
        raise ValueError("bound needs at least one two-qubit gate")
    with mpmath.workdps(50):
        S_ = mpmath.mpf(S)
        a = a_constant(d, c_d)
        val = (depth_exponent(d) * mpmath.log(2 * S_, 2) + 1
               + 8 * a * (1 + mpmath.mpf(l) / mpmath.mpf(r))
               * mpmath.mpf(profile.F) ** (mpmath.mpf(1) / d) * S_ ** (1 - mpmath.mpf(1) / d))
        return float(val)


def theorem2_planar_bound(profile: GateProfile, d: int = 2, l: float = 1.0, r: float = 1.0) -> float:
    """Tighter nearest-neighbour bound in two dimensions (log2)."""
    if d != 2:
        raise ValueError("the planar bound applies to d = 2 only")
    if abs(l - r) > 1e-12 * max(abs(l), abs(r)):
        raise ValueError("the planar bound needs nearest-neighbour gates (l = r)")
    f = profile.f
    with mpmath.workdps(50):
        S = mpmath.fsum(mpmath.mpf(int(x)) * (2 + mpmath.mpf(int(x)) / 2) for x in f)
        if S <= 0:
            raise ValueError("bound needs at least one two-qubit gate")
        val = mpmath.log(S, 2) / mpmath.log(mpmath.mpf(3) / 2, 2) + 1 + 4 * a_planar() * mpmath.sqrt(S)
        return float(val)


def hypercubic_side(c: Circuit) -> int | None:
    """Side length L when the qubits fill an L^d grid of spacing r, else None."""
    P = (c.positions - c.positions.min(axis=0)) / c.r
    G = np.rint(P)
    if np.abs(P - G).max() > 1e-9:
        return None
    L = round(c.N ** (1.0 / c.d))
    if L ** c.d != c.N or G.max() > L - 1:
        return None
    if len({tuple(row) for row in G.astype(int)}) != c.N:
        return None
    return L


def baseline_bounds(c: Circuit, sidewise=True):
    """log2 of the side-wise and explicit-evolution costs.

    Side-wise: ``2^(1 + 4 F L^(d-1)) L`` on a hypercubic layout. Explicit:
    ``T N 2^(2 + N - idle)`` where idle qubits see no gate at all.
    """
    out = {}
    prof = c.profile()
    if sidewise:
        L = hypercubic_side(c)
        if L is None:
            raise ValueError("side-wise baseline needs a hypercubic L^d layout")
        out["sidewise"] = 1 + 4 * prof.F * L ** (c.d - 1) + math.log2(L)
    T = max(1, c.T)
    out["explicit"] = math.log2(T * c.N) + 2 + c.N - c.idle_qubits()
    return out


# -- statevector oracle -----------------------------------------------------------------

def _apply(state, U, qubits, n):
    k = len(qubits)
    Ut = U.reshape((2,) * (2 * k))
    state = np.tensordot(Ut, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(state, list(range(k)), list(qubits))


def statevector_expectation(c: Circuit, m: Measurement | None = None, cap: int = DEFAULT_STATEVECTOR_CAP) -> float:
    """``<0|U^dag P U|0>`` by dense simulation (qubit 0 is the leading axis)."""
    from .tncore import ResourceError

    if c.N > cap:
        raise ResourceError(f"{c.N} qubits exceed the statevector cap {cap}")
    m = m if m is not None else Measurement()
    n = c.N
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for g in c.gates:
        psi = _apply(psi, g.matrix, g.qubits, n)
    phi = psi
    for q in range(n):
        phi = _apply(phi, m.get(q), (q,), n)
    val = complex(np.vdot(psi.ravel(), phi.ravel()))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ArithmeticError("expectation of a Hermitian operator came out complex")
    return val.real
