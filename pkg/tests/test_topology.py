"""Topology builder tests.

The summary grid below is the frozen oracle for the three tabulated
system scales; capacities, switch counts, QPUs/rack and ToR counts must
match exactly.  The qfly_half ports column is excluded (its published
value is inconsistent with the structural wiring rule; see the build
notes), so it carries None here.
"""

import random

import pytest

from qdcbench.topology import (
    Arch,
    BsmModel,
    build,
    build_bcube,
    build_clos,
    build_fattree,
    build_qfly,
    export_fabric_json,
    export_fabric_text,
    fattree_radix,
    allocate_bsms,
    topology_summary,
)

# arch -> N -> (qpu_capacity, switches, qpus_per_rack, ports, tors)
SUMMARY_ORACLE = {
    Arch.QFLY_FULL: {
        16: (16, 8, 2.00, 9, 8),
        64: (64, 16, 4.00, 19, 16),
        128: (128, 32, 4.00, 35, 32),
    },
    Arch.QFLY_HALF: {
        16: (16, 8, 2.00, None, 8),
        64: (64, 16, 4.00, None, 16),
        128: (128, 32, 4.00, None, 32),
    },
    Arch.QFLY_RESIDUAL: {
        16: (16, 8, 2.00, 4, 8),
        64: (64, 16, 4.00, 8, 16),
        128: (128, 32, 4.00, 8, 32),
    },
    Arch.CLOS_TIGHT: {
        16: (16, 28, 1.00, 8, 16),
        64: (64, 28, 4.00, 8, 16),
        128: (128, 88, 2.00, 16, 64),
    },
    Arch.CLOS_COMPACT: {
        16: (18, 18, 2.00, 6, 9),
        64: (64, 28, 4.00, 8, 16),
        128: (150, 40, 6.00, 10, 25),
    },
    Arch.FATTREE: {
        16: (16, 20, 2.00, 4, 8),
        64: (64, 80, 4.00, 8, 32),
        128: (128, 80, 4.00, 8, 32),
    },
    Arch.BCUBE: {
        16: (16, 8, 2.00, 4, 8),
        64: (64, 16, 4.00, 8, 16),
        128: (128, 96, 1.33, 8, 96),
    },
}


@pytest.mark.parametrize("arch", list(SUMMARY_ORACLE))
@pytest.mark.parametrize("n", [16, 64, 128])
def test_summary_grid(arch, n):
    row = topology_summary(build(arch, n))
    capacity, switches, per_rack, ports, tors = SUMMARY_ORACLE[arch][n]
    assert row.qpu_capacity == capacity
    assert row.switches == switches
    assert round(row.qpus_per_rack, 2) == per_rack
    assert row.tors == tors
    if ports is not None:
        assert row.ports_per_switch == ports


def test_fattree_examples():
    fab = build_fattree(16)
    assert fab.params.k == 4
    assert fab.n_switches == 20
    # every edge switch hosts exactly two QPUs
    for t in fab.tor_ids:
        qpus = [v for v, _ in fab.adjacency[t] if not fab.is_switch(v)]
        assert len(qpus) == 2
    assert build_fattree(64).n_switches == 80
    assert topology_summary(build_fattree(64)).ports_per_switch == 8

    tiny = build_fattree(1)
    assert tiny.params.k == 2
    assert tiny.n_switches == 5
    # the lone QPU hangs off the first edge switch
    (sw, _), = tiny.adjacency[0]
    assert sw == tiny.tor_ids[0]


def test_fattree_radix_is_minimal_even():
    for n in range(1, 513):
        k = fattree_radix(n)
        assert k % 2 == 0
        assert k ** 3 / 4 >= n
        assert k == 2 or (k - 2) ** 3 / 4 < n
        assert build_fattree(n).n_switches == 5 * k * k // 4


def test_fattree_placement_blocks():
    fab = build_fattree(64)  # k=8 -> blocks of 4
    for q in range(64):
        (sw, _), = [(v, l) for v, l in fab.adjacency[q]]
        assert sw == fab.n_qpus + q // 4


def test_clos_examples():
    tight = build_clos(64, "tight")
    assert (tight.params.k, tight.params.t, tight.params.r) == (8, 16, 4)
    assert tight.n_switches == 28

    compact = build_clos(128, "compact")
    assert (compact.params.k, compact.params.t, compact.params.r) == (10, 25, 6)
    assert compact.n_switches == 40
    assert topology_summary(compact).qpu_capacity == 150

    tight128 = build_clos(128, "tight")
    assert (tight128.params.k, tight128.params.t, tight128.params.r) == (16, 64, 2)
    assert tight128.n_switches == 88
    assert tight128.params.t * tight128.params.r - 128 == 0  # zero unused


def test_clos_policy_ordering():
    for n in [1, 3, 7, 16, 30, 64, 100, 128, 200, 333]:
        tight = build_clos(n, "tight").params
        compact = build_clos(n, "compact").params
        assert tight.t * tight.r >= n and compact.t * compact.r >= n
        assert tight.t * tight.r - n <= compact.t * compact.r - n
        s_tight = tight.t + tight.k + tight.k // 2
        s_compact = compact.t + compact.k + compact.k // 2
        assert s_compact <= s_tight


def test_clos_wiring_complete_bipartite():
    fab = build_clos(16, "tight")  # k=8: 16 ToRs, 8 agg, 4 core
    t, a, c = fab.params.t, fab.params.k, fab.params.k // 2
    tors = fab.tor_ids
    aggs = [s for s in fab.switch_ids if fab.nodes[s].layer == 1]
    cores = [s for s in fab.switch_ids if fab.nodes[s].layer == 2]
    assert (len(tors), len(aggs), len(cores)) == (t, a, c)
    for tor in tors:
        up = {v for v, _ in fab.adjacency[tor] if fab.is_switch(v)}
        assert up == set(aggs)
    for agg in aggs:
        up = {v for v, _ in fab.adjacency[agg] if fab.nodes[v].layer == 2}
        assert up == set(cores)


def test_qfly_examples():
    full = build_qfly(64, "full", 8)
    assert (full.params.m, full.params.k_ring) == (4, 15)
    assert full.n_switches == 16
    assert topology_summary(full).ports_per_switch == 19

    residual = build_qfly(128, "residual", 8)
    assert (residual.params.m, residual.params.k_ring) == (4, 4)
    assert residual.n_switches == 32
    assert topology_summary(residual).ports_per_switch == 8

    triangle = build_qfly(6, "full", 4)
    assert triangle.n_switches == 3
    ring = [l for l in triangle.links
            if triangle.is_switch(l.u) and triangle.is_switch(l.v)]
    assert len(ring) == 3  # complete graph on three switches


def test_qfly_full_is_complete():
    for n in [4, 16, 40, 64, 128]:
        fab = build(Arch.QFLY_FULL, n)
        s = fab.n_switches
        ring = [l for l in fab.links
                if fab.is_switch(l.u) and fab.is_switch(l.v)]
        assert len(ring) == s * (s - 1) // 2


def test_qfly_circulant_regularity():
    from math import gcd

    from qdcbench.topology import _circulant_edges

    for n_sw in range(2, 24):
        for degree in range(1, n_sw):
            deg = [0] * n_sw
            for a, b in _circulant_edges(n_sw, degree):
                deg[a] += 1
                deg[b] += 1
            if degree % 2 == 0 or degree == n_sw - 1:
                assert deg == [degree] * n_sw, (n_sw, degree)
            else:
                # odd degree: alternate-chord removal leaves exactly one
                # switch per odd cycle of the truncated offset one over
                cycles = gcd((degree + 1) // 2, n_sw)
                odd = cycles if (n_sw // cycles) % 2 else 0
                over = sorted(d for d in deg if d != degree)
                assert over == [degree + 1] * odd, (n_sw, degree)


def test_qfly_rejects_odd_reference_radix():
    with pytest.raises(AssertionError):
        build_qfly(16, "full", 5)


def test_bcube_examples():
    fab = build_bcube(64, 8)
    assert fab.params.k_bcube == 1
    assert fab.n_switches == 16
    assert {fab.nodes[s].layer for s in fab.switch_ids} == {0, 1}

    fab = build_bcube(128, 8)
    assert fab.params.k_bcube == 2
    per_level = [sum(1 for s in fab.switch_ids if fab.nodes[s].layer == lvl)
                 for lvl in range(3)]
    assert per_level == [16, 16, 64]
    assert fab.n_switches == 96

    star = build_bcube(8, 8)
    assert fab.params.n == 8
    assert star.n_switches == 1
    assert star.degree(star.n_qpus) == 8


def test_bcube_every_qpu_links_once_per_level():
    fab = build_bcube(100, 8)  # three levels, partially populated
    levels = fab.params.k_bcube + 1
    for q in range(100):
        layers = sorted(fab.nodes[v].layer for v, _ in fab.adjacency[q])
        assert layers == list(range(levels))


def test_bcube_fully_populated_switch_count():
    # at N = n^(k+1) every level holds n^k switches
    for n, k in [(2, 2), (4, 1), (8, 1), (3, 2)]:
        fab = build_bcube(n ** (k + 1), n)
        assert fab.params.k_bcube == k
        assert fab.n_switches == (k + 1) * n ** k


def test_allocate_bsms_per_switch():
    fab = allocate_bsms(build_fattree(64), BsmModel.per_switch(2))
    assert fab.total_bsms() == 160
    assert all(fab.bsm[s] == 2 for s in fab.switch_ids)


def test_allocate_bsms_total_budget():
    fab = allocate_bsms(build_bcube(64, 8), BsmModel.total(100))
    counts = [fab.bsm[s] for s in fab.switch_ids]
    # floor(100/16)=6 with remainder 4 to the lowest-index switches
    assert counts == [7, 7, 7, 7] + [6] * 12
    assert fab.total_bsms() == 100

    empty = allocate_bsms(build_bcube(64, 8), BsmModel.total(0))
    assert empty.total_bsms() == 0

    rng = random.Random(7)
    for _ in range(25):
        budget = rng.randrange(0, 400)
        fab = allocate_bsms(build_fattree(rng.randrange(1, 80)),
                            BsmModel.total(budget))
        counts = [fab.bsm[s] for s in fab.switch_ids]
        assert sum(counts) == budget
        assert max(counts) - min(counts) <= 1


def test_bsm_model_parse():
    assert BsmModel.parse("per-switch:2") == BsmModel.per_switch(2)
    assert BsmModel.parse("total:100") == BsmModel.total(100)
    assert BsmModel.parse("total:100").label() == "total:100"
    with pytest.raises(ValueError):
        BsmModel.parse("bogus:3")
    with pytest.raises(ValueError):
        BsmModel.parse("per-switch:x")


def test_builders_deterministic():
    for arch in Arch:
        a = build(arch, 23)
        b = build(arch, 23)
        assert a.links == b.links
        assert a.nodes == b.nodes


def test_export_formats():
    fab = allocate_bsms(build_qfly(6, "full", 4), BsmModel.per_switch(1))
    text = export_fabric_text(fab)
    lines = text.strip().split("\n")
    assert sum(1 for l in lines if l.startswith("node ")) == 6 + 3
    assert sum(1 for l in lines if l.startswith("edge ")) == len(fab.links)
    assert "bsm s0 1" in text

    doc = export_fabric_json(fab)
    assert doc["arch"] == "qfly_full"
    assert len(doc["edges"]) == len(fab.links)
    assert doc["summary"]["switches"] == 3


def test_every_qpu_attaches_only_to_switches_in_switch_centric():
    for arch in [Arch.FATTREE, Arch.CLOS_TIGHT, Arch.QFLY_RESIDUAL]:
        fab = build(arch, 40)
        for q in range(fab.n_qpus):
            assert all(fab.is_switch(v) for v, _ in fab.adjacency[q])
