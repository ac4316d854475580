"""Fabric construction for the benchmarked interconnect architectures.

Four families are supported: k-ary Fat-Tree, folded Clos (two sizing
policies), QFly (switch group graph with three inter-switch wiring
densities) and BCube (server-centric, QPUs double as repeaters).

All builders are deterministic: the same arguments always produce the
same node and edge sets.  QPUs are placed in contiguous index blocks so
that QPU index i of the partitioner maps onto rack/switch i // block.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from math import ceil, gcd, isqrt


DEFAULT_CHANNELS_PER_LINK = 5
DEFAULT_LINK_KM = 0.1


class DegenerateTopologyError(ValueError):
    """Raised when a requested wiring policy yields a disconnected fabric."""


class Arch(Enum):
    FATTREE = "fattree"
    CLOS_TIGHT = "clos_tight"
    CLOS_COMPACT = "clos_compact"
    QFLY_FULL = "qfly_full"
    QFLY_HALF = "qfly_half"
    QFLY_RESIDUAL = "qfly_residual"
    BCUBE = "bcube"


SWITCH_CENTRIC = (
    Arch.FATTREE,
    Arch.CLOS_TIGHT,
    Arch.CLOS_COMPACT,
    Arch.QFLY_FULL,
    Arch.QFLY_HALF,
    Arch.QFLY_RESIDUAL,
)


class NodeKind(Enum):
    QPU = "qpu"
    SWITCH = "switch"


@dataclass(frozen=True)
class NodeId:
    """Identity of a fabric node; indices are unique within each kind."""

    kind: NodeKind
    index: int
    layer: int | None = None  # switch tier in layered fabrics, else None

    def label(self) -> str:
        return ("q" if self.kind is NodeKind.QPU else "s") + str(self.index)


@dataclass(frozen=True)
class Link:
    """Undirected fiber bundle between two internal node ids."""

    u: int
    v: int
    channels: int
    length_km: float


@dataclass(frozen=True)
class ArchParams:
    """Architecture sizing parameters; fields not meaningful for an
    architecture stay None."""

    n_qpus: int
    k: int                      # declared switch radix / port budget
    t: int | None = None        # Clos ToR count
    r: int | None = None        # Clos QPUs per rack
    n: int | None = None        # BCube radix
    k_bcube: int | None = None  # BCube level parameter (levels - 1)
    k_ring: int | None = None   # QFly inter-switch degree (effective)
    m: int | None = None        # QFly QPUs per switch


@dataclass(frozen=True)
class BsmModel:
    """BSM provisioning policy: a fixed count per switch or a fabric-wide
    budget spread as evenly as the switch count allows."""

    kind: str   # "per_switch" | "total"
    count: int

    PER_SWITCH = "per_switch"
    TOTAL = "total"

    def __post_init__(self) -> None:
        if self.kind not in (self.PER_SWITCH, self.TOTAL):
            raise ValueError(f"unknown BSM model kind: {self.kind!r}")
        if self.count < 0:
            raise ValueError("BSM count must be >= 0")

    @classmethod
    def per_switch(cls, c: int) -> "BsmModel":
        return cls(cls.PER_SWITCH, c)

    @classmethod
    def total(cls, budget: int) -> "BsmModel":
        return cls(cls.TOTAL, budget)

    @classmethod
    def parse(cls, text: str) -> "BsmModel":
        """Parse 'per-switch:<c>' or 'total:<B>'."""
        head, sep, tail = text.partition(":")
        if not sep or not tail.isdigit():
            raise ValueError(f"bad BSM model {text!r}; "
                             "expected per-switch:<c> or total:<B>")
        if head == "per-switch":
            return cls.per_switch(int(tail))
        if head == "total":
            return cls.total(int(tail))
        raise ValueError(f"bad BSM model kind {head!r}")

    def label(self) -> str:
        return ("per-switch:" if self.kind == self.PER_SWITCH else "total:") \
            + str(self.count)


@dataclass
class Fabric:
    """Typed QPU/switch graph.  Internal node ids are dense integers:
    QPUs occupy 0..n_qpus-1 (id == QPU index), switches follow in global
    switch-index order.  Treated as immutable after construction."""

    arch: Arch
    params: ArchParams
    nodes: list[NodeId]
    links: list[Link]
    adjacency: list[list[tuple[int, int]]]  # node -> [(neighbour, link id)]
    radix: list[int]    # declared port count per node (0 for QPUs)
    bsm: list[int]      # BSMs per node (0 for QPUs; set by allocate_bsms)
    n_qpus: int
    tor_ids: list[int]  # internal ids of the rack-facing switch layer

    @property
    def switch_ids(self) -> range:
        return range(self.n_qpus, len(self.nodes))

    @property
    def n_switches(self) -> int:
        return len(self.nodes) - self.n_qpus

    def is_switch(self, node: int) -> bool:
        return node >= self.n_qpus

    def label(self, node: int) -> str:
        return self.nodes[node].label()

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def bsm_map(self) -> dict[NodeId, int]:
        return {self.nodes[s]: self.bsm[s] for s in self.switch_ids}

    def total_bsms(self) -> int:
        return sum(self.bsm[s] for s in self.switch_ids)


# ---------------------------------------------------------------------------
# assembly helpers


def _assemble(arch: Arch, params: ArchParams, n_qpus: int,
              switch_layers: list[int | None], switch_radix: list[int],
              edges: list[tuple[int, int]], tor_switches: list[int],
              channels: int, link_km: float) -> Fabric:
    """Build a Fabric from switch descriptions and (internal id) edges."""
    assert channels >= 1, "links need at least one optical channel"
    nodes = [NodeId(NodeKind.QPU, q) for q in range(n_qpus)]
    nodes += [NodeId(NodeKind.SWITCH, s, switch_layers[s])
              for s in range(len(switch_layers))]
    radix = [0] * n_qpus + list(switch_radix)
    links = [Link(u, v, channels, link_km) for u, v in edges]
    adjacency: list[list[tuple[int, int]]] = [[] for _ in nodes]
    seen = set()
    for lid, link in enumerate(links):
        key = (min(link.u, link.v), max(link.u, link.v))
        assert link.u != link.v and key not in seen, "duplicate or self edge"
        seen.add(key)
        adjacency[link.u].append((link.v, lid))
        adjacency[link.v].append((link.u, lid))
    fabric = Fabric(arch=arch, params=params, nodes=nodes, links=links,
                    adjacency=adjacency, radix=radix,
                    bsm=[0] * len(nodes), n_qpus=n_qpus,
                    tor_ids=[n_qpus + s for s in tor_switches])
    _check_fabric(fabric)
    return fabric


def _check_fabric(fabric: Fabric) -> None:
    """Structural invariants common to every architecture."""
    n = len(fabric.nodes)
    for q in range(fabric.n_qpus):
        assert fabric.degree(q) >= 1, "QPU left unattached"
    # connectivity over the QPUs (and, by construction, everything else)
    if n:
        seen = [False] * n
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v, _ in fabric.adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        assert all(seen[q] for q in range(fabric.n_qpus)), \
            "fabric does not connect all QPUs"
    # port budgets hold wherever the construction promises them
    if fabric.arch in (Arch.FATTREE, Arch.BCUBE, Arch.QFLY_HALF,
                       Arch.QFLY_RESIDUAL):
        for s in fabric.switch_ids:
            assert fabric.degree(s) <= fabric.radix[s], \
                f"switch {fabric.label(s)} exceeds its port budget"


# ---------------------------------------------------------------------------
# Fat-Tree


def fattree_radix(n_qpus: int) -> int:
    """Smallest even k with k^3/4 >= n_qpus (max rack capacity rule)."""
    k = 2
    while k * k * k < 4 * n_qpus:
        k += 2
    return k


def build_fattree(n_qpus: int, *, channels: int = DEFAULT_CHANNELS_PER_LINK,
                  link_km: float = DEFAULT_LINK_KM) -> Fabric:
    """k-ary Fat-Tree: k pods of k/2 edge + k/2 aggregation switches and
    (k/2)^2 core switches; each edge switch hosts up to k/2 QPUs, filled
    in index order."""
    assert n_qpus >= 1
    k = fattree_radix(n_qpus)
    half = k // 2
    s_edge = s_agg = k * k // 2
    s_core = k * k // 4
    n_sw = s_edge + s_agg + s_core
    layers = [0] * s_edge + [1] * s_agg + [2] * s_core
    edges: list[tuple[int, int]] = []

    def sid(s: int) -> int:  # switch global index -> internal id
        return n_qpus + s

    for q in range(n_qpus):
        edges.append((q, sid(q // half)))
    for pod in range(k):
        for e in range(half):
            for a in range(half):
                edges.append((sid(pod * half + e),
                              sid(s_edge + pod * half + a)))
        for a in range(half):
            for c in range(half):
                edges.append((sid(s_edge + pod * half + a),
                              sid(s_edge + s_agg + a * half + c)))
    params = ArchParams(n_qpus=n_qpus, k=k)
    return _assemble(Arch.FATTREE, params, n_qpus, layers, [k] * n_sw,
                     edges, list(range(s_edge)), channels, link_km)


# ---------------------------------------------------------------------------
# Clos


def _clos_choice(n_qpus: int, policy: str) -> tuple[int, int]:
    """Pick (k, r): T=k^2/4 ToRs, k aggregation, k/2 core switches;
    r QPUs per rack with r <= k-2.  'tight' minimises unused rack
    capacity T*r - N, 'compact' minimises the switch count, with the
    other quantity (then smaller k) breaking ties."""
    candidates = []
    k_max = 2 * (isqrt(max(n_qpus, 1)) + 3)
    for k in range(2, k_max + 1, 2):
        tors = k * k // 4
        r = ceil(n_qpus / tors)
        if r > k - 2:
            continue
        unused = tors * r - n_qpus
        total = tors + k + k // 2
        candidates.append((unused, total, k, r, tors))
    assert candidates, f"no feasible Clos sizing for N={n_qpus}"
    if policy == "tight":
        unused, total, k, r, tors = min(candidates)
    else:
        unused, total, k, r, tors = min(
            candidates, key=lambda c: (c[1], c[0], c[2]))
    return k, r


def build_clos(n_qpus: int, policy: str, *,
               channels: int = DEFAULT_CHANNELS_PER_LINK,
               link_km: float = DEFAULT_LINK_KM) -> Fabric:
    """Three-tier folded Clos.  policy is 'tight' or 'compact'; every ToR
    links to every aggregation switch and every aggregation switch to
    every core switch."""
    assert n_qpus >= 1
    assert policy in ("tight", "compact"), f"unknown Clos policy {policy!r}"
    k, r = _clos_choice(n_qpus, policy)
    tors = k * k // 4
    n_agg, n_core = k, k // 2
    n_sw = tors + n_agg + n_core
    layers = [0] * tors + [1] * n_agg + [2] * n_core
    edges: list[tuple[int, int]] = []

    def sid(s: int) -> int:
        return n_qpus + s

    for q in range(n_qpus):
        edges.append((q, sid(q // r)))
    for t in range(tors):
        for a in range(n_agg):
            edges.append((sid(t), sid(tors + a)))
    for a in range(n_agg):
        for c in range(n_core):
            edges.append((sid(tors + a), sid(tors + n_agg + c)))
    arch = Arch.CLOS_TIGHT if policy == "tight" else Arch.CLOS_COMPACT
    params = ArchParams(n_qpus=n_qpus, k=k, t=tors, r=r)
    return _assemble(arch, params, n_qpus, layers, [k] * n_sw, edges,
                     list(range(tors)), channels, link_km)


# ---------------------------------------------------------------------------
# QFly


def _circulant_edges(n_sw: int, degree: int) -> list[tuple[int, int]]:
    """Ring-with-chords graph: switch i links to i+-1..i+-ceil(d/2) mod S,
    truncated so every switch keeps exactly `degree` inter-switch links.

    An odd target needs half of the largest offset's chords removed, one
    per switch; that offset decomposes into gcd(offset, S) cycles, and
    every odd-length cycle necessarily leaves one switch a link over."""
    if n_sw <= 1 or degree <= 0:
        return []
    target = min(degree, n_sw - 1)
    batches: list[list[tuple[int, int]]] = []
    for off in range(1, (target + 1) // 2 + 1):
        batch = {(min(i, (i + off) % n_sw), max(i, (i + off) % n_sw))
                 for i in range(n_sw)}
        batches.append(sorted(batch))
    deg = [0] * n_sw
    for batch in batches:
        for a, b in batch:
            deg[a] += 1
            deg[b] += 1
    if any(d > target for d in deg):
        # walk each cycle of the largest offset, dropping alternate chords
        off = (target + 1) // 2
        removed = set()
        for start in range(gcd(off, n_sw)):
            i = start
            for _ in range(n_sw // gcd(off, n_sw)):
                j = (i + off) % n_sw
                if deg[i] > target and deg[j] > target:
                    removed.add((min(i, j), max(i, j)))
                    deg[i] -= 1
                    deg[j] -= 1
                i = j
        batches[-1] = [e for e in batches[-1] if e not in removed]
    assert max(deg) <= target + 1
    return [e for batch in batches for e in batch]


def build_qfly(n_qpus: int, ring_policy: str, k_ref: int, *,
               channels: int = DEFAULT_CHANNELS_PER_LINK,
               link_km: float = DEFAULT_LINK_KM) -> Fabric:
    """Flat switch-group fabric: S = ceil(N/m) switches each hosting
    m = k_ref/2 QPUs.  ring_policy picks the inter-switch degree:
    'full' -> S-1 (complete), 'half' -> ceil(m/2), 'residual' -> k_ref-m.
    """
    assert n_qpus >= 1
    assert k_ref >= 2 and k_ref % 2 == 0, "reference radix must be even"
    m = k_ref // 2
    n_sw = ceil(n_qpus / m)
    nominal = {"full": n_sw - 1,
               "half": ceil(m / 2),
               "residual": k_ref - m}
    if ring_policy not in nominal:
        raise ValueError(f"unknown QFly ring policy {ring_policy!r}")
    k_ring = min(nominal[ring_policy], n_sw - 1)
    if n_sw >= 3:
        # a 1-regular inter-switch graph is a matching and disconnects the
        # fabric; the ring (degree 2) is the connectivity floor
        k_ring = max(k_ring, 2)
    if n_sw >= 2 and k_ring < 1:
        raise DegenerateTopologyError(
            f"QFly {ring_policy} with m={m} leaves {n_sw} switches unwired")
    edges: list[tuple[int, int]] = []
    for q in range(n_qpus):
        edges.append((q, n_qpus + q // m))
    ring = _circulant_edges(n_sw, k_ring)
    ring_deg = [0] * n_sw
    for a, b in ring:
        edges.append((n_qpus + a, n_qpus + b))
        ring_deg[a] += 1
        ring_deg[b] += 1
    arch = {"full": Arch.QFLY_FULL, "half": Arch.QFLY_HALF,
            "residual": Arch.QFLY_RESIDUAL}[ring_policy]
    # declared ports; the parity corner of the circulant may hold one extra
    ports = [m + max(k_ring, ring_deg[s], 0) for s in range(n_sw)]
    params = ArchParams(n_qpus=n_qpus, k=k_ref, k_ring=max(k_ring, 0), m=m)
    return _assemble(arch, params, n_qpus, [None] * n_sw, ports,
                     edges, list(range(n_sw)), channels, link_km)


# ---------------------------------------------------------------------------
# BCube


def build_bcube(n_qpus: int, k_ref: int, *,
                channels: int = DEFAULT_CHANNELS_PER_LINK,
                link_km: float = DEFAULT_LINK_KM) -> Fabric:
    """Server-centric BCube over radix n = k_ref: QPU q is a base-n
    identifier of k_bcube+1 digits; the level-l switch for q groups the
    QPUs sharing every digit except digit l.  Only switches referenced
    by at least one QPU are instantiated."""
    assert n_qpus >= 1
    assert k_ref >= 2
    n = k_ref
    levels = 1
    while n ** levels < n_qpus:
        levels += 1
    k_bcube = levels - 1

    def group(q: int, lvl: int) -> int:
        # identifier of q with digit `lvl` removed, read as base-n value
        return (q // n ** (lvl + 1)) * n ** lvl + (q % n ** lvl)

    switch_index: dict[tuple[int, int], int] = {}
    layers: list[int | None] = []
    edges: list[tuple[int, int]] = []
    for lvl in range(levels):
        for v in sorted({group(q, lvl) for q in range(n_qpus)}):
            switch_index[(lvl, v)] = len(layers)
            layers.append(lvl)
    for q in range(n_qpus):
        for lvl in range(levels):
            edges.append((q, n_qpus + switch_index[(lvl, group(q, lvl))]))
    params = ArchParams(n_qpus=n_qpus, k=n, n=n, k_bcube=k_bcube)
    return _assemble(Arch.BCUBE, params, n_qpus, layers, [n] * len(layers),
                     edges, list(range(len(layers))), channels, link_km)


# ---------------------------------------------------------------------------
# BSM provisioning and reporting


def build(arch: Arch, n_qpus: int, *, channels: int = DEFAULT_CHANNELS_PER_LINK,
          link_km: float = DEFAULT_LINK_KM) -> Fabric:
    """Build any architecture by tag; QFly/BCube take their radix from the
    Fat-Tree sizing of the same N."""
    kw = dict(channels=channels, link_km=link_km)
    if arch is Arch.FATTREE:
        return build_fattree(n_qpus, **kw)
    if arch is Arch.CLOS_TIGHT:
        return build_clos(n_qpus, "tight", **kw)
    if arch is Arch.CLOS_COMPACT:
        return build_clos(n_qpus, "compact", **kw)
    k_ref = fattree_radix(n_qpus)
    if arch is Arch.QFLY_FULL:
        return build_qfly(n_qpus, "full", k_ref, **kw)
    if arch is Arch.QFLY_HALF:
        return build_qfly(n_qpus, "half", k_ref, **kw)
    if arch is Arch.QFLY_RESIDUAL:
        return build_qfly(n_qpus, "residual", k_ref, **kw)
    if arch is Arch.BCUBE:
        return build_bcube(n_qpus, k_ref, **kw)
    raise ValueError(f"unknown architecture {arch}")


def allocate_bsms(fabric: Fabric, model: BsmModel) -> Fabric:
    """Return a copy of the fabric with BSMs assigned to switches.

    per_switch: every switch receives exactly `count`.
    total: every switch receives floor(count/S); the remainder goes one
    each to the lowest-index switches.
    """
    bsm = list(fabric.bsm)
    switches = list(fabric.switch_ids)
    if model.kind == BsmModel.PER_SWITCH:
        for s in switches:
            bsm[s] = model.count
    else:
        share, extra = divmod(model.count, len(switches))
        for pos, s in enumerate(switches):
            bsm[s] = share + (1 if pos < extra else 0)
        assert sum(bsm[s] for s in switches) == model.count
    return replace(fabric, bsm=bsm)


@dataclass(frozen=True)
class SummaryRow:
    """One architecture-overview table row."""

    arch: str
    qpu_capacity: int
    switches: int
    qpus_per_rack: float
    ports_per_switch: int
    tors: int

    def as_tuple(self) -> tuple:
        return (self.arch, self.qpu_capacity, self.switches,
                self.qpus_per_rack, self.ports_per_switch, self.tors)


def topology_summary(fabric: Fabric) -> SummaryRow:
    """Headline sizing numbers for a fabric.

    qpu_capacity is the instantiated rack capacity (T*R) for Clos and N
    elsewhere.  qpus_per_rack is the maximum QPUs attached to one
    rack-layer switch, except BCube where no rack abstraction exists and
    the QPU-to-switch attachment ratio N/S is reported.  ports_per_switch
    is the declared radix of the largest deployed switch.
    """
    p = fabric.params
    if fabric.arch in (Arch.CLOS_TIGHT, Arch.CLOS_COMPACT):
        capacity = p.t * p.r
    else:
        capacity = p.n_qpus
    if fabric.arch is Arch.BCUBE:
        per_rack = p.n_qpus / fabric.n_switches
    else:
        per_rack = float(max(
            sum(1 for v, _ in fabric.adjacency[t] if not fabric.is_switch(v))
            for t in fabric.tor_ids))
    ports = max(fabric.radix[s] for s in fabric.switch_ids)
    return SummaryRow(arch=fabric.arch.value, qpu_capacity=capacity,
                      switches=fabric.n_switches, qpus_per_rack=per_rack,
                      ports_per_switch=ports, tors=len(fabric.tor_ids))


# ---------------------------------------------------------------------------
# export


def export_fabric_text(fabric: Fabric) -> str:
    """Line-oriented edge list: node/edge/bsm records."""
    out = []
    for node in fabric.nodes:
        line = f"node {node.kind.value} {node.index}"
        if node.layer is not None:
            line += f" {node.layer}"
        out.append(line)
    for link in fabric.links:
        out.append(f"edge {fabric.label(link.u)} {fabric.label(link.v)} "
                   f"{link.channels} {link.length_km:g}")
    for s in fabric.switch_ids:
        out.append(f"bsm {fabric.label(s)} {fabric.bsm[s]}")
    return "\n".join(out) + "\n"


def export_fabric_json(fabric: Fabric) -> dict:
    """JSON-ready document mirroring the text export plus the summary."""
    params = {k: v for k, v in vars(fabric.params).items() if v is not None}
    return {
        "arch": fabric.arch.value,
        "params": params,
        "nodes": [{"kind": n.kind.value, "index": n.index,
                   **({"layer": n.layer} if n.layer is not None else {})}
                  for n in fabric.nodes],
        "edges": [[fabric.label(l.u), fabric.label(l.v), l.channels,
                   l.length_km] for l in fabric.links],
        "bsm": {fabric.label(s): fabric.bsm[s] for s in fabric.switch_ids},
        "summary": vars(topology_summary(fabric)),
    }
