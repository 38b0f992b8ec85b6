import math

import numpy as np
import pytest

from helpers import grid_network, jittered_grid, sphere_network
from spheresep import separator as sep
from spheresep import tncore
from spheresep.geometry import EmbeddedSphere, SeparatingSphere
from spheresep.tncore import TensorNetwork


def _sph(center, r, tid):
    return EmbeddedSphere(np.asarray(center, dtype=float), r, tid)


def test_classify_metric_rule():
    S = SeparatingSphere.sphere([0.0, 0.0], 1.0)
    spheres = [_sph([0, 0], 0.5, 0), _sph([10, 0], 1.0, 1), _sph([1, 0], 0.5, 2)]
    O, E, I = sep.classify(spheres, S)
    assert (O, E, I) == ({2}, {1}, {0})


def test_classify_hyperplane_sign_convention():
    S = SeparatingSphere.hyperplane([1.0, 0.0], 0.0)
    O, E, I = sep.classify([_sph([3, 0], 1.0, 0), _sph([-3, 0], 1.0, 1), _sph([0.5, 0], 1.0, 2)], S)
    assert (O, E, I) == ({2}, {0}, {1})


def test_classify_tangent_counts_as_boundary():
    S = SeparatingSphere.sphere([0.0, 0.0], 2.0)
    O, E, I = sep.classify([_sph([3, 0], 1.0, 0), _sph([1, 0], 1.0, 1)], S)
    assert O == {0, 1}


def test_find_separator_20x20_grid():
    pts = [(x, y) for x in range(20) for y in range(20)]
    spheres = [_sph(p, 1.0, i) for i, p in enumerate(pts)]
    k = sep.overlap_number(spheres)
    params = sep.SeparatorParams(k=k, d=2)
    res = sep.find_separator(spheres, params, np.random.default_rng(0))
    assert len(res.gamma_O) <= 2 * math.sqrt(k) * 20
    assert max(len(res.gamma_E), len(res.gamma_I)) <= 300
    assert sep.validate_separator(res, spheres, k, 2) == []


def test_find_separator_precondition():
    spheres = [_sph([i, 0], 0.6, i) for i in range(9)]
    with pytest.raises(ValueError):
        sep.find_separator(spheres[:8], sep.SeparatorParams(k=2, d=2), np.random.default_rng(0))
    sep.find_separator(spheres, sep.SeparatorParams(k=2, d=2), np.random.default_rng(0))


def test_find_separator_deterministic():
    spheres = jittered_grid(300, 2, np.random.default_rng(1))
    params = sep.SeparatorParams(k=sep.overlap_number(spheres), d=2)
    a = sep.find_separator(spheres, params, np.random.default_rng(5))
    b = sep.find_separator(spheres, params, np.random.default_rng(5))
    assert (a.gamma_O, a.gamma_E, a.gamma_I) == (b.gamma_O, b.gamma_E, b.gamma_I)
    assert a.sphere.to_dict() == b.sphere.to_dict()


def test_separator_error_carries_best():
    spheres = [_sph([0, 0], 1.0, i) for i in range(12)]  # coincident: no split possible
    params = sep.SeparatorParams(k=12, d=2, max_circle_retries=5)
    with pytest.raises(sep.SeparatorError) as info:
        sep.find_separator(spheres, params, np.random.default_rng(0))
    assert info.value.attempts == 5


def test_params_validation_and_table():
    assert sep.SeparatorParams(k=1, d=3).c_d == 2.135
    assert sep.SeparatorParams(k=1, d=5).c_d == 2.421
    with pytest.raises(ValueError):
        sep.SeparatorParams(k=0, d=2)
    with pytest.raises(ValueError):
        sep.SeparatorParams(k=1, d=7)
    assert sep.SeparatorParams(k=1, d=7, c_d=3.0).c_d == 3.0


def test_validator_flags_bad_results():
    spheres = [_sph([i, 0], 0.6, i) for i in range(10)]
    bad = sep.SeparatorResult(None, frozenset(), frozenset(range(9)), frozenset({9}))
    probs = sep.validate_separator(bad, spheres, 2, 2)
    assert any("interior sphere" in p for p in probs) and any("side sizes" in p for p in probs)
    bad2 = sep.SeparatorResult(None, frozenset({0}), frozenset(range(5)), frozenset(range(5, 10)))
    assert "sets do not partition the input" in sep.validate_separator(bad2, spheres, 2, 2)


def test_no_bond_between_sides():
    spheres = jittered_grid(400, 2, np.random.default_rng(2))
    net = sphere_network(spheres)
    params = sep.SeparatorParams(k=sep.overlap_number(spheres), d=2)
    res = sep.find_separator(spheres, params, np.random.default_rng(3))
    for b in net.bonds.values():
        u, v = b.endpoints
        assert not ({u, v} <= res.gamma_E | res.gamma_I and
                    (u in res.gamma_E) != (v in res.gamma_E))


def test_median_split_fallbacks():
    spheres = [_sph([i, 0], 0.3, i) for i in range(10)]
    res = sep.median_split(spheres)
    assert res.fallback and res.gamma_E and res.gamma_I
    same = [_sph([0, 0], 1.0, i) for i in range(7)]
    res = sep.median_split(same)
    assert res.sphere is None
    assert res.gamma_I == frozenset({0, 1, 2}) and res.gamma_E == frozenset({3, 4, 5, 6})


def test_overlap_number_exact_2d():
    # three unit disks around a common point plus a far one
    spheres = [_sph([0, 0], 1.0, 0), _sph([1, 0], 1.0, 1), _sph([0.5, 0.8], 1.0, 2), _sph([9, 9], 1.0, 3)]
    assert sep.overlap_number(spheres) == 3
    # two disks touching only on their boundaries still share a point
    assert sep.overlap_number([_sph([0, 0], 1.0, 0), _sph([2, 0], 1.0, 1)]) == 2
    # pairwise-intersecting triple without a common point
    tri = [_sph([0, 0], 1.0, 0), _sph([1.9, 0], 1.0, 1), _sph([0.95, 1.64], 1.0, 2)]
    assert sep.overlap_number(tri) == 2


def test_overlap_number_upper_bound_3d():
    spheres = jittered_grid(64, 3, np.random.default_rng(0))
    k = sep.overlap_number(spheres)
    centers = np.array([s.center for s in spheres])
    deg = (np.linalg.norm(centers[:, None] - centers[None], axis=2) <= 2).sum(axis=1)
    assert k == deg.max()


def _chain_net(dims):
    net = TensorNetwork()
    for t in range(3):
        net.add_tensor(t)
    net.add_bond(0, dims[0], 0, 1)
    net.add_bond(1, dims[1], 1, 2)
    return net


def test_assign_boundary_prefers_heavier_side():
    net = _chain_net((4, 2))
    res = sep.SeparatorResult(None, frozenset({1}), frozenset({0}), frozenset({2}))
    assert sep.assign_boundary(res, net) == ([0, 1], [2])


def test_assign_boundary_tie_rules():
    net = TensorNetwork()
    for t in range(4):
        net.add_tensor(t)
    # isolated boundary tensor 3: tie -> fewer tensors (I has 1) -> I
    res = sep.SeparatorResult(None, frozenset({3}), frozenset({0, 1}), frozenset({2}))
    assert sep.assign_boundary(res, net) == ([0, 1], [2, 3])
    # equal sizes -> lower side index (E)
    res = sep.SeparatorResult(None, frozenset({3}), frozenset({0}), frozenset({2}))
    assert sep.assign_boundary(res, net)[0] == [0, 3]


def test_assigned_cross_cut_at_most_sqrt_entries():
    spheres = jittered_grid(256, 2, np.random.default_rng(4))
    net = sphere_network(spheres)
    params = sep.SeparatorParams(k=sep.overlap_number(spheres), d=2)
    res = sep.find_separator(spheres, params, np.random.default_rng(1))
    ext, inn = sep.assign_boundary(res, net)
    side = {t: 0 for t in ext} | {t: 1 for t in inn}
    for t in sorted(res.gamma_O):
        # bonds to sides fixed before t was placed (boundary tensors placed later do not count)
        cross = 1
        for b in net.tensors[t].bonds:
            u, v = net.bonds[b].endpoints
            o = v if u == t else u
            if o not in res.gamma_O or o < t:
                if side[o] != side[t]:
                    cross *= net.bonds[b].dim
        assert cross * cross <= net.entry_count(t)


def _grid_setup(side, seed=0):
    spheres = [_sph([x, y], 0.6, x * side + y) for x in range(side) for y in range(side)]
    net = grid_network(side, side, 2, np.random.default_rng(seed))
    return spheres, net


def test_hierarchy_single_leaf():
    spheres, net = _grid_setup(2)
    net2 = TensorNetwork()
    for t in range(8):
        net2.add_tensor(t)
    emb = [_sph([t, 0], 0.6, t) for t in range(8)]
    root = sep.build_hierarchy(net2, emb, sep.SeparatorParams(k=2, d=2), np.random.default_rng(0))
    assert root.children is None and len(root.leaf_plan) == 7


def test_hierarchy_16x16_invariants():
    spheres, net = _grid_setup(16)
    k = sep.overlap_number(spheres)
    params = sep.SeparatorParams(k=k, d=2)
    stats = sep.BuildStats()
    root = sep.build_hierarchy(net, spheres, params, np.random.default_rng(1), stats=stats)
    for node in root.nodes():
        if node.children:
            a, b = (set(c.tensor_ids) for c in node.children)
            assert not (a & b) and a | b == set(node.tensor_ids)
            assert node.leaf_plan is None
        else:
            assert len(node.tensor_ids) <= params.leaf_size and node.leaf_plan is not None
    for lvl in stats.ssa_levels:
        if not lvl["fallback"]:
            assert max(lvl["n_E"], lvl["n_I"]) <= 0.75 * lvl["n"]
    n = len(net.tensors)
    assert root.depth() <= 1 + math.log2(n) / math.log2(4 / 3) + stats.fallbacks
    a = sep.build_hierarchy(net, spheres, params, np.random.default_rng(1))
    assert a.to_dict() == root.to_dict()


def test_hierarchy_interface_matches_bonds():
    spheres, net = _grid_setup(8)
    root = sep.build_hierarchy(net, spheres, sep.SeparatorParams(k=4, d=2), np.random.default_rng(2))
    for node in root.nodes():
        if node.children:
            a, b = node.children
            cross = [bb for bb in net.bonds.values()
                     if len(set(bb.endpoints) & set(a.tensor_ids)) == 1
                     and len(set(bb.endpoints) & set(b.tensor_ids)) == 1]
            assert a.interface_log2dim == pytest.approx(len(cross))


def test_hierarchy_json_roundtrip(tmp_path):
    spheres, net = _grid_setup(6)
    root = sep.build_hierarchy(net, spheres, sep.SeparatorParams(k=4, d=2), np.random.default_rng(3))
    path = tmp_path / "h.json"
    root.to_json(path)
    back = sep.HierarchyNode.from_json(str(path))
    assert back.to_dict() == root.to_dict()
    assert tncore.hierarchy_cost(back, net).exact_ops == tncore.hierarchy_cost(root, net).exact_ops


def test_hierarchy_rejects_partial_embedding():
    spheres, net = _grid_setup(4)
    with pytest.raises(tncore.StructureError):
        sep.build_hierarchy(net, spheres[:-1], sep.SeparatorParams(k=4, d=2), np.random.default_rng(0))


def test_hierarchy_cost_below_theorem1():
    for side in (6, 10):
        spheres, net = _grid_setup(side)
        k = sep.overlap_number(spheres)
        root = sep.build_hierarchy(net, spheres, sep.SeparatorParams(k=k, d=2), np.random.default_rng(side))
        M = max(net.entry_count(t) for t in net.tensors)
        assert tncore.hierarchy_cost(root, net).log2_scalar_ops <= tncore.theorem1_bound(len(net.tensors), M, k, 2)


def test_retry_statistics():
    retries = []
    for s in range(100):
        rng = np.random.default_rng([7, s])
        spheres = jittered_grid(500, 2, rng)
        params = sep.SeparatorParams(k=4, d=2)
        retries.append(sep.find_separator(spheres, params, rng).attempts)
    assert np.mean(retries) <= 32


def test_execution_hierarchy_contracts_correctly():
    from helpers import einsum_oracle

    spheres, net = _grid_setup(4, seed=9)
    root = sep.execution_hierarchy(net, spheres, sep.SeparatorParams(k=4, d=2, leaf_size=3),
                                   np.random.default_rng(0), tries=3)
    val = tncore.execute_plan(net, root)
    ref = einsum_oracle(net)
    assert abs(val - ref) <= 1e-10 * abs(ref)
