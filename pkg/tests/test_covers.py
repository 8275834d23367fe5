from collections import Counter

import pytest

from sunada_lab.covers import (
    BaseGraph,
    VoltageGraph,
    check_free_action,
    connectivity,
    derive_cover,
    projection,
    quotient,
    sigma_map,
)
from sunada_lab.errors import SubgroupNotContained, ValidationFailed
from sunada_lab.fixtures import (
    SINGER,
    TRANSVECTION,
    cyclic_group,
    fano_pair,
    gl32_points_planes,
    gl32_with_polarity,
    point_permutation,
    point_plane_permutation,
    polarity,
    symmetric_group,
)
from sunada_lab.groups import Permutation, Subgroup, full_subgroup, stabilizer, trivial_subgroup

THETA = [(0, 1), (0, 1), (0, 1)]


def fano_vg():
    G, g1, g2 = fano_pair()
    v = [G.identity, point_permutation(SINGER), point_permutation(TRANSVECTION)]
    return VoltageGraph(BaseGraph.from_pairs(2, THETA), G, dict(enumerate(v))), g1, g2


def coset_key(H, g):
    return frozenset(h * g for h in H.elements)


def orbit_quotient_edges(vg, H):
    """Oracle: walk the full cover and collapse (u, g) to (u, H g) by hand."""
    edges = Counter()
    for e in vg.base.edges:
        for g in vg.group.elements:
            edges[(e.tail, coset_key(H, g), e.head, coset_key(H, g * vg.voltage[e.id]))] += 1
    # each quotient edge is the image of |H| cover edges
    return Counter({k: v // H.order for k, v in edges.items()})


def test_single_loop_gives_cycle():
    C3 = cyclic_group(3)
    vg = VoltageGraph(BaseGraph.from_pairs(1, [(0, 0)]), C3, {0: C3.generators[0]})
    cover = derive_cover(vg)
    assert cover.vertex_count == 3 and len(cover.edges) == 3
    assert all(not e.is_loop for e in cover.edges)
    assert connectivity(cover) == 1
    assert sorted(Counter(v for e in cover.edges for v in (e.tail, e.head)).values()) == [2, 2, 2]


def test_identity_voltages_give_disjoint_copies():
    S3 = symmetric_group(3)
    vg = VoltageGraph(BaseGraph.path(3), S3, {0: S3.identity, 1: S3.identity})
    assert connectivity(derive_cover(vg)) == 6


def test_fano_cover_counts_and_connectivity():
    vg, g1, g2 = fano_vg()
    cover = derive_cover(vg)
    assert cover.vertex_count == 336 and len(cover.edges) == 504
    assert connectivity(cover) == 1
    m1 = quotient(vg, g1)
    assert m1.vertex_count == 14 and len(m1.edges) == 21
    assert connectivity(m1) == 1


@pytest.mark.parametrize("which", [0, 1, 2, 3])
def test_quotient_matches_orbit_oracle(which):
    vg, g1, g2 = fano_vg()
    H = [g1, g2, trivial_subgroup(vg.group), full_subgroup(vg.group)][which]
    m = quotient(vg, H)
    reps = m.coset_table.coset_reps
    got = Counter()
    for e in m.edges:
        u, c = divmod(e.tail, m.index)
        v, d = divmod(e.head, m.index)
        got[(u, coset_key(H, reps[c]), v, coset_key(H, reps[d]))] += 1
    assert got == orbit_quotient_edges(vg, H)


def test_quotient_by_whole_group_is_base():
    vg, _, _ = fano_vg()
    m = quotient(vg, full_subgroup(vg.group))
    assert m.vertex_count == 2
    assert [(e.tail, e.head) for e in m.edges] == THETA


def test_free_action():
    vg, g1, _ = fano_vg()
    for H in (g1, trivial_subgroup(vg.group), full_subgroup(vg.group)):
        assert check_free_action(vg, H)


def test_bad_voltage_names_field():
    G, _, _ = fano_pair()
    S7 = symmetric_group(7)
    odd = Permutation.from_cycles(7, [0, 1])
    assert odd in S7
    with pytest.raises(ValidationFailed) as err:
        VoltageGraph(BaseGraph.from_pairs(2, THETA), G, {0: G.identity, 1: odd, 2: G.identity})
    assert err.value.field == "voltage_graph.edges[1].voltage"


def test_quotient_rejects_foreign_subgroup():
    vg, _, _ = fano_vg()
    with pytest.raises(SubgroupNotContained):
        quotient(vg, symmetric_group(7))


def brooks_tower():
    hat, G = gl32_with_polarity(), gl32_points_planes()
    tau = polarity()
    G = Subgroup(hat, G.generators, name="G")
    g1 = stabilizer(G, [0])
    g2 = Subgroup(G, [tau * g * tau.inverse() for g in g1.generators])
    v = [hat.identity, point_plane_permutation(SINGER), point_plane_permutation(TRANSVECTION) * tau]
    vg = VoltageGraph(BaseGraph.from_pairs(2, THETA), hat, dict(enumerate(v)))
    return vg, G, g1, g2, tau


def test_brooks_tower_shapes():
    vg, G, g1, g2, tau = brooks_tower()
    m1, m2, mid = quotient(vg, g1), quotient(vg, g2), quotient(vg, G)
    assert (m1.vertex_count, m2.vertex_count, mid.vertex_count) == (28, 28, 4)
    vmap, emap = projection(m1, mid)
    assert sorted(Counter(vmap).values()) == [7, 7, 7, 7]
    for e in m1.edges:
        f = mid.edges[emap[e.id]]
        assert (vmap[e.tail], vmap[e.head]) == (f.tail, f.head)


def test_sigma_map_is_a_graph_isomorphism():
    vg, G, g1, g2, tau = brooks_tower()
    m1, m2 = quotient(vg, g1), quotient(vg, g2)
    vmap, emap = sigma_map(m1, m2, tau)
    assert sorted(vmap) == list(range(m2.vertex_count))
    assert sorted(emap) == list(range(len(m2.edges)))
    for e in m1.edges:
        f = m2.edges[emap[e.id]]
        assert (vmap[e.tail], vmap[e.head]) == (f.tail, f.head)
