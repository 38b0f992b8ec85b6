"""Randomized sphere separators and the recursive separator hierarchy."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import geometry, kernels
from .geometry import EmbeddedSphere, SeparatingSphere
from .tncore import C_D, StructureError, TensorNetwork, greedy_leaf_plan, plan_peak_entries

TIE_TOL = 1e-12


class SeparatorError(RuntimeError):
    """No valid separator was found; ``best`` holds the best candidate seen."""

    def __init__(self, msg, best=None, attempts=0):
        super().__init__(msg)
        self.best = best
        self.attempts = attempts


@dataclass
class SeparatorParams:
    k: int
    d: int
    c_d: float | None = None
    delta: float = 1.0
    max_circle_retries: int = 256
    leaf_size: int = 8
    redraw_every: int = 32
    max_hyperplanes: int = 6000
    sample_size: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.c_d is None:
            if self.d not in C_D:
                raise ValueError(f"no tabulated c_d for d={self.d}")
            self.c_d = C_D[self.d]
        if self.leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")

    def boundary_limit(self, n: int) -> float:
        return self.c_d * self.k ** (1.0 / self.d) * n ** (1.0 - 1.0 / self.d)

    def side_limit(self, n: int) -> float:
        return (self.d + 1) / (self.d + 2) * n


@dataclass
class SeparatorResult:
    sphere: SeparatingSphere | None
    gamma_O: frozenset
    gamma_E: frozenset
    gamma_I: frozenset
    attempts: int = 0
    fallback: bool = False


def _arrays(spheres):
    centers = np.array([s.center for s in spheres], dtype=float)
    radii = np.array([s.radius for s in spheres], dtype=float)
    ids = [s.tensor_id for s in spheres]
    return centers, radii, ids


def _labels(centers, radii, S: SeparatingSphere):
    if S.kind == "sphere":
        return kernels.classify_spheres(centers, radii, False, S.center, S.radius, TIE_TOL)
    return kernels.classify_spheres(centers, radii, True, S.normal, S.offset, TIE_TOL)


def classify(spheres, S: SeparatingSphere):
    """Split spheres into (boundary, exterior, interior) id sets relative to ``S``.

    A sphere whose surface meets the surface of ``S`` (ties included) is on
    the boundary; balls containing the whole of ``S`` also count as boundary.
    """
    if not spheres:
        raise ValueError("no spheres to classify")
    centers, radii, ids = _arrays(spheres)
    lab = _labels(centers, radii, S)
    out = ([], [], [])
    for tid, l in zip(ids, lab):
        out[l].append(tid)
    return tuple(frozenset(x) for x in out)


def satisfies_bounds(n_O, n_E, n_I, n, params: SeparatorParams) -> bool:
    return (n_O <= params.boundary_limit(n)
            and n_E <= params.side_limit(n)
            and n_I <= params.side_limit(n))


def makes_progress(n_O, n_E, n_I, n) -> bool:
    if n_E > 0 and n_I > 0:
        return True
    return n_O > 0 and n_E < n and n_I < n and (n_E > 0 or n_I > 0)


def find_separator(spheres, params: SeparatorParams, rng) -> SeparatorResult:
    """Randomized sphere separator with explicit verification of both bounds.

    Projects the centers onto S^d, moves an approximate centerpoint to the
    origin by a rotation and a conformal dilatation, and tries random great
    circles until the pulled-back sphere meets the boundary and balance
    bounds. The centerpoint is redrawn every ``params.redraw_every`` failures.
    """
    n = len(spheres)
    if n <= params.leaf_size:
        raise ValueError(f"find_separator needs more than leaf_size={params.leaf_size} spheres, got {n}")
    centers, radii, ids = _arrays(spheres)
    if centers.shape[1] != params.d:
        raise ValueError(f"sphere dimension {centers.shape[1]} != params.d={params.d}")
    projected = geometry.stereo_project(centers)
    best = None
    best_key = None
    R = alpha = None
    for attempt in range(params.max_circle_retries):
        if attempt % params.redraw_every == 0:
            try:
                c = geometry.centerpoint(projected, params.delta, rng, size=params.sample_size,
                                         max_hyperplanes=params.max_hyperplanes)
            except geometry.CenterpointError:
                c = projected.mean(axis=0)
            if np.linalg.norm(c) >= 1.0 - 1e-12:
                c = c * (1.0 - 1e-9) / np.linalg.norm(c)
            R = geometry.rotation_to_pole(c)
            alpha = geometry.dilation_factor(c)
        C = geometry.sample_great_circle(rng, params.d + 1)
        try:
            S = geometry.circle_to_sphere(C, R, alpha)
        except ValueError:
            continue
        lab = _labels(centers, radii, S)
        n_O, n_E, n_I = (int(np.count_nonzero(lab == v)) for v in
                         (kernels.BOUNDARY, kernels.EXTERIOR, kernels.INTERIOR))
        ok = satisfies_bounds(n_O, n_E, n_I, n, params)
        prog = makes_progress(n_O, n_E, n_I, n)
        if ok and prog:
            return _result(S, ids, lab, attempt + 1, False)
        key = (not ok, not prog, max(n_E, n_I) + n_O)
        if best_key is None or key < best_key:
            best_key, best = key, _result(S, ids, lab, attempt + 1, False)
    raise SeparatorError(f"no valid separator after {params.max_circle_retries} circles",
                         best=best, attempts=params.max_circle_retries)


def _result(S, ids, lab, attempts, fallback):
    groups = ([], [], [])
    for tid, l in zip(ids, lab):
        groups[l].append(tid)
    return SeparatorResult(S, frozenset(groups[0]), frozenset(groups[1]), frozenset(groups[2]),
                           attempts, fallback)


def median_split(spheres) -> SeparatorResult:
    """Fallback: cut at the median of the widest coordinate.

    Spheres crossing the cut plane go to the boundary set. When every center
    coincides (no geometric split exists) the ids are halved in sorted order.
    """
    centers, radii, ids = _arrays(spheres)
    span = np.ptp(centers, axis=0)
    axis = int(np.argmax(span))
    n = len(ids)
    if span[axis] > 1e-12:
        m = float(np.median(centers[:, axis]))
        normal = np.zeros(centers.shape[1])
        normal[axis] = 1.0
        S = SeparatingSphere.hyperplane(normal, m)
        lab = _labels(centers, radii, S)
        n_O, n_E, n_I = (int(np.count_nonzero(lab == v)) for v in (0, 1, 2))
        if n_E > 0 and n_I > 0:
            return _result(S, ids, lab, 0, True)
        # nothing strictly on one side: split the crossing set itself at the median
        order = np.argsort(centers[:, axis], kind="stable")
        lab = np.full(n, kernels.INTERIOR, dtype=np.int8)
        lab[order[n // 2:]] = kernels.EXTERIOR
        return _result(S, ids, lab, 0, True)
    order = sorted(range(n), key=lambda i: ids[i])
    lab = np.full(n, kernels.INTERIOR, dtype=np.int8)
    for i in order[n // 2:]:
        lab[i] = kernels.EXTERIOR
    return _result(None, ids, lab, 0, True)


def validate_separator(result: SeparatorResult, spheres, k: int, d: int, c_d: float | None = None):
    """Independent re-check of a separator; returns a list of violations (empty if valid).

    Classification is redone sphere by sphere in plain Python, disjointness
    of the exterior and interior balls is checked pairwise, and both size
    bounds are evaluated from scratch.
    """
    problems = []
    c = c_d if c_d is not None else C_D[d]
    n = len(spheres)
    by_id = {s.tensor_id: s for s in spheres}
    O, E, I = result.gamma_O, result.gamma_E, result.gamma_I
    if (O & E) or (O & I) or (E & I) or (O | E | I) != set(by_id):
        problems.append("sets do not partition the input")
    S = result.sphere
    if S is not None:
        for tid, s in by_id.items():
            if S.kind == "sphere":
                dist = math.dist(s.center.tolist(), S.center.tolist())
                ext = dist - s.radius > S.radius + TIE_TOL
                inside = dist + s.radius < S.radius - TIE_TOL
            else:
                sd = float(np.dot(s.center, S.normal)) - S.offset
                ext = sd > s.radius + TIE_TOL
                inside = sd < -s.radius - TIE_TOL
            want = E if ext else I if inside else O
            if tid not in want:
                problems.append(f"sphere {tid} misclassified")
                break
    if E and I:
        ce = np.array([by_id[t].center for t in E])
        re = np.array([by_id[t].radius for t in E])
        for t in I:
            s = by_id[t]
            gap = np.linalg.norm(ce - s.center, axis=1) - re - s.radius
            if np.any(gap <= 0):
                problems.append(f"interior sphere {t} intersects an exterior sphere")
                break
    if len(O) > c * k ** (1.0 / d) * n ** (1.0 - 1.0 / d):
        problems.append(f"|O|={len(O)} exceeds the boundary bound")
    side = (d + 1) / (d + 2) * n
    if len(E) > side or len(I) > side:
        problems.append(f"side sizes {len(E)}, {len(I)} exceed {(d + 1) / (d + 2)}*n")
    return problems


# -- overlap number -------------------------------------------------------------

def _pair_points_2d(centers, radii, pairs):
    """Intersection points of the boundary circles for each pair (d = 2)."""
    i, j = pairs[:, 0], pairs[:, 1]
    p, q = centers[i], centers[j]
    r1, r2 = radii[i], radii[j]
    dvec = q - p
    dist = np.linalg.norm(dvec, axis=1)
    ok = (dist > 1e-12) & (dist <= r1 + r2) & (dist >= np.abs(r1 - r2))
    p, dvec, dist, r1, r2 = p[ok], dvec[ok], dist[ok], r1[ok], r2[ok]
    a = (r1 ** 2 - r2 ** 2 + dist ** 2) / (2 * dist)
    h = np.sqrt(np.maximum(r1 ** 2 - a ** 2, 0.0))
    u = dvec / dist[:, None]
    base = p + a[:, None] * u
    perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
    return np.concatenate([base + h[:, None] * perp, base - h[:, None] * perp])


def overlap_number(spheres, exact: bool | None = None) -> int:
    """Maximum number of closed balls sharing a point.

    In two dimensions the maximum is attained at a center or at an
    intersection point of two boundary circles, so it is computed exactly.
    Otherwise the rigorous bound ``1 + max degree`` of the intersection
    graph is returned (all balls through a common point meet each other).
    """
    centers, radii, _ = _arrays(spheres)
    n, d = centers.shape
    if n == 0:
        return 0
    tree = cKDTree(centers)
    pairs = tree.query_pairs(2 * radii.max() + 1e-9, output_type="ndarray")
    if len(pairs):
        gap = np.linalg.norm(centers[pairs[:, 0]] - centers[pairs[:, 1]], axis=1)
        pairs = pairs[gap <= radii[pairs[:, 0]] + radii[pairs[:, 1]] + 1e-9]
    if exact is None:
        exact = d == 2
    if exact and d == 2:
        cand = centers
        if len(pairs):
            cand = np.concatenate([centers, _pair_points_2d(centers, radii, pairs)])
        best = 0
        rmax = radii.max()
        # only balls within reach of a candidate can cover it
        for lo in range(0, len(cand), 4096):
            chunk = cand[lo:lo + 4096]
            near = tree.query_ball_point(chunk, rmax + 1e-9)
            for pt, idx in zip(chunk, near):
                if len(idx) <= best:
                    continue
                idx = np.asarray(idx)
                cnt = int(kernels.coverage_counts(pt[None, :], centers[idx], radii[idx], 1e-9)[0])
                best = max(best, cnt)
        return best
    deg = np.zeros(n, dtype=np.int64)
    if len(pairs):
        np.add.at(deg, pairs[:, 0], 1)
        np.add.at(deg, pairs[:, 1], 1)
    return int(deg.max()) + 1


# -- boundary assignment ----------------------------------------------------------

def assign_boundary(result: SeparatorResult, network: TensorNetwork, use_cost_dims=True):
    """Append every boundary tensor to the side it shares more bond dimension with.

    Boundary tensors are processed in ascending id order against the sides
    as they grow. Ties go to the side with fewer tensors, then to the
    exterior side. Returns ``(exterior_ids, interior_ids)`` as sorted lists.
    """
    adj = network.neighbors(use_cost_dims)
    side_of = {}
    for t in result.gamma_E:
        side_of[t] = 0
    for t in result.gamma_I:
        side_of[t] = 1
    sizes = [len(result.gamma_E), len(result.gamma_I)]
    for t in sorted(result.gamma_O):
        w = [1, 1]
        for nb, dim in adj[t].items():
            s = side_of.get(nb)
            if s is not None:
                w[s] *= dim
        if w[0] != w[1]:
            s = 0 if w[0] > w[1] else 1
        elif sizes[0] != sizes[1]:
            s = 0 if sizes[0] < sizes[1] else 1
        else:
            s = 0
        side_of[t] = s
        sizes[s] += 1
    ext = sorted(t for t, s in side_of.items() if s == 0)
    inn = sorted(t for t, s in side_of.items() if s == 1)
    return ext, inn


# -- hierarchy ------------------------------------------------------------------

@dataclass
class HierarchyNode:
    node_id: int
    tensor_ids: tuple
    children: tuple | None = None
    interface_log2dim: float = 0.0
    leaf_plan: list | None = None
    fallback: bool = False
    attempts: int = 0

    def nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if node.children:
                stack.extend(reversed(node.children))

    def leaves(self):
        return [n for n in self.nodes() if n.children is None]

    def depth(self) -> int:
        if self.children is None:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def to_dict(self):
        out = {"node_id": self.node_id, "tensor_ids": list(self.tensor_ids),
               "interface_log2dim": self.interface_log2dim,
               "fallback": self.fallback, "attempts": self.attempts}
        if self.children is None:
            out["leaf_plan"] = [list(p) for p in self.leaf_plan]
        else:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    @classmethod
    def from_dict(cls, doc):
        children = None
        if "children" in doc:
            children = tuple(cls.from_dict(c) for c in doc["children"])
        plan = [tuple(p) for p in doc["leaf_plan"]] if "leaf_plan" in doc else None
        return cls(doc["node_id"], tuple(doc["tensor_ids"]), children,
                   doc.get("interface_log2dim", 0.0), plan,
                   doc.get("fallback", False), doc.get("attempts", 0))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text_or_path):
        text = text_or_path
        if not text.lstrip().startswith("{"):
            with open(text_or_path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


@dataclass
class BuildStats:
    separator_calls: int = 0
    circle_attempts: int = 0
    fallbacks: int = 0
    ssa_levels: list = field(default_factory=list)


def _interface_log2(network, a_ids, b_ids, use_cost_dims):
    a = set(a_ids)
    total = 0.0
    for t in b_ids:
        for bid in network.tensors[t].bonds:
            ends = network.bonds[bid].endpoints
            if len(ends) == 2 and (ends[0] in a or ends[1] in a):
                b = network.bonds[bid]
                total += math.log2(b.cdim if use_cost_dims else b.dim)
    return total


def build_hierarchy(network: TensorNetwork, embedding, params: SeparatorParams, rng,
                    use_cost_dims=True, stats: BuildStats | None = None) -> HierarchyNode:
    """Recursively split the network with sphere separators down to small leaves.

    Each split runs :func:`find_separator` on the node's spheres (falling
    back to :func:`median_split` when it is exhausted), assigns the boundary
    tensors with :func:`assign_boundary`, and recurses on both sides with
    independent random streams spawned from ``rng``.
    """
    spheres = {s.tensor_id: s for s in embedding}
    if set(spheres) != set(network.tensors):
        raise StructureError("embedding must cover every tensor exactly once")
    stats = stats if stats is not None else BuildStats()
    counter = itertools.count()

    def leaf(ids):
        sub = network.subnetwork(ids)
        return HierarchyNode(next(counter), tuple(sorted(ids)), None, 0.0,
                             greedy_leaf_plan(sub, use_cost_dims))

    def split(ids, gen):
        sph = [spheres[t] for t in ids]
        distinct = len(np.unique(np.array([s.center for s in sph]), axis=0))
        try:
            if distinct < params.d + 2:
                # too few distinct positions for a centerpoint: go straight to the fallback
                raise SeparatorError("degenerate point set", attempts=0)
            res = find_separator(sph, params, gen)
            stats.separator_calls += 1
            stats.circle_attempts += res.attempts
        except SeparatorError as exc:
            stats.separator_calls += 1
            stats.circle_attempts += exc.attempts
            res = median_split(sph)
        if res.fallback:
            stats.fallbacks += 1
        stats.ssa_levels.append({"n": len(ids), "n_O": len(res.gamma_O), "n_E": len(res.gamma_E),
                                 "n_I": len(res.gamma_I), "fallback": res.fallback})
        ext, inn = assign_boundary(res, network, use_cost_dims)
        if not ext or not inn:
            # keep both children nonempty
            big = ext if ext else inn
            moved = sorted(res.gamma_O)[-1] if res.gamma_O else big[-1]
            big.remove(moved)
            (inn if not inn else ext).append(moved)
        return res, sorted(ext), sorted(inn)

    # explicit stack: (ids, gen, parent_slot)
    root_holder = []
    stack = [(tuple(sorted(network.tensors)), rng, root_holder, 0)]
    pending = []
    while stack:
        ids, gen, holder, slot = stack.pop()
        if len(ids) <= params.leaf_size:
            node = leaf(ids)
            holder.append((slot, node))
            continue
        res, ext, inn = split(ids, gen)
        node = HierarchyNode(next(counter), tuple(ids), None, 0.0, None, res.fallback, res.attempts)
        kids = []
        g_ext, g_inn = gen.spawn(2)
        holder.append((slot, node))
        pending.append((node, kids, ext, inn))
        stack.append((tuple(inn), g_inn, kids, 1))
        stack.append((tuple(ext), g_ext, kids, 0))
    for node, kids, ext, inn in reversed(pending):
        kids.sort(key=lambda x: x[0])
        a, b = kids[0][1], kids[1][1]
        a.interface_log2dim = b.interface_log2dim = _interface_log2(network, ext, inn, use_cost_dims)
        node.children = (a, b)
    return root_holder[0][1]


def execution_hierarchy(network: TensorNetwork, embedding, params: SeparatorParams, rng,
                        tries: int = 8, target: int = 2**19) -> HierarchyNode:
    """Hierarchy for numeric execution, built on the numeric bond dimensions.

    Up to ``tries`` hierarchies are built from independent streams and the
    one with the smallest peak intermediate is kept; the search stops early
    once the peak is at most ``target`` entries.
    """
    best = best_peak = None
    for g in rng.spawn(tries):
        root = build_hierarchy(network, embedding, params, g, use_cost_dims=False)
        peak = plan_peak_entries(root, network)
        if best_peak is None or peak < best_peak:
            best, best_peak = root, peak
        if best_peak <= target:
            break
    return best
