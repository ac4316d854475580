"""Optical loss and entanglement-timing model.

Switch-centric paths get a closed-form expected EPR-generation latency:
every attempt succeeds with the channel transmittance 10^(-L_tot/10)
and takes T_att = T_src + 2D/v + T_reset, so E[T_pair] = T_att / T_chan.

Server-centric paths are repeater chains of QPU-switch-QPU segments.
Segment attempts run in slotted time (slot = the segment T_att) under a
Sequential or Parallel hold-and-retry protocol bounded by the cutoff
tau_cut; the expected latency is estimated by a seeded Monte Carlo.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

DEFAULT_MC_TRIALS = 20_000

# pair lifetimes are tracked as "valid through slot" indices; effectively
# infinite cutoffs use a sentinel that keeps t + _INF_SLOTS inside int64
_INF_SLOTS = 2 ** 40


class UnreachableEntanglementError(ValueError):
    """A chain segment has zero success probability."""


class CutoffTooSmallError(ValueError):
    """tau_cut does not admit even the fastest possible chain completion."""


class Protocol(Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class PhysParams:
    """Loss (dB) and timing (seconds) constants of the physical layer."""

    alpha_db_per_km: float = 0.1      # fiber attenuation
    l2x2_db: float = 0.3              # per-2x2-element switch loss
    l_bsm_db: float = 0.0             # Bell-state measurement loss
    l_mem_db: float = 3.0             # memory loss per repeater QPU
    t_src_s: float = 1e-6             # EPR source repetition time
    t_reset_s: float = 10e-6          # communication-qubit reset time
    v_fiber_km_per_s: float = 2e5     # light speed in fiber
    t_local_s: float = 10e-6          # local two-qubit gate time
    tau_cut_s: float = 200e-6         # coherence cutoff for held pairs
    reconfig_delay_s: float = 10e-6   # switch reconfiguration delay

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            assert value >= 0, f"{name} must be non-negative"
        assert self.v_fiber_km_per_s > 0


@dataclass(frozen=True)
class PathDescriptor:
    """Physical shape of one entanglement path.

    Switch-centric: repeater_count = 0 and switch_radices lists the
    hop_count - 1 traversed switches.  Server-centric: segments holds
    one 2-hop single-switch sub-descriptor per chain segment and
    repeater_count = len(segments) - 1 intermediate QPUs.
    """

    hop_count: int
    fiber_km_total: float
    switch_radices: tuple[int, ...]
    repeater_count: int = 0
    segments: tuple["PathDescriptor", ...] = ()

    def __post_init__(self) -> None:
        assert self.hop_count >= 1 and self.fiber_km_total >= 0
        if self.segments:
            assert self.repeater_count == len(self.segments) - 1
            for seg in self.segments:
                assert seg.hop_count == 2 and not seg.segments
                assert len(seg.switch_radices) == 1
            assert self.hop_count == 2 * len(self.segments)
            total = sum(s.fiber_km_total for s in self.segments)
            assert abs(total - self.fiber_km_total) < 1e-9
        else:
            assert self.repeater_count == 0
            assert len(self.switch_radices) == self.hop_count - 1


def switch_path(radices: tuple[int, ...] | list[int],
                fiber_km_total: float) -> PathDescriptor:
    """Descriptor for a switch-centric path traversing the given switches."""
    radices = tuple(radices)
    return PathDescriptor(hop_count=len(radices) + 1,
                          fiber_km_total=fiber_km_total,
                          switch_radices=radices)


def chain_path(radices: tuple[int, ...] | list[int],
               segment_km: float) -> PathDescriptor:
    """Descriptor for a repeater chain with one switch per segment and
    uniform per-segment fiber length."""
    segs = tuple(PathDescriptor(2, segment_km, (k,)) for k in radices)
    return PathDescriptor(hop_count=2 * len(segs),
                          fiber_km_total=segment_km * len(segs),
                          switch_radices=tuple(radices),
                          repeater_count=len(segs) - 1,
                          segments=segs)


# ---------------------------------------------------------------------------
# loss terms


def switch_insertion_loss(k: int, l2x2_db: float) -> float:
    """Benes-style fabric built from 2x2 elements: (2*ceil(log2 k) - 1)
    stages of l2x2_db each."""
    if k < 2:
        raise ValueError(f"switch radix must be >= 2, got {k}")
    stages = 2 * (k - 1).bit_length() - 1  # (k-1).bit_length() == ceil(log2 k)
    return stages * l2x2_db


def path_loss(path: PathDescriptor, p: PhysParams) -> float:
    """Total path loss: alpha*D + per-switch insertion + BSM + N_rep*L_mem.

    Note the whole-path form charges l_bsm_db once; per-segment
    evaluation (segment_loss) charges it per segment since each segment
    heralds through its own BSM.  The two agree at the default 0 dB.
    """
    loss = (p.alpha_db_per_km * path.fiber_km_total + p.l_bsm_db
            + path.repeater_count * p.l_mem_db)
    for k in path.switch_radices:
        loss += switch_insertion_loss(k, p.l2x2_db)
    return loss


def segment_loss(path: PathDescriptor, index: int, p: PhysParams) -> float:
    """Loss of one chain segment, charging L_mem/2 for each of its ends
    that terminates on a repeater QPU (so the chain total telescopes to
    repeater_count * L_mem)."""
    seg = path.segments[index]
    mem_ends = (index > 0) + (index < len(path.segments) - 1)
    return (p.alpha_db_per_km * seg.fiber_km_total
            + switch_insertion_loss(seg.switch_radices[0], p.l2x2_db)
            + p.l_bsm_db + mem_ends * p.l_mem_db / 2)


def transmittance(loss_db: float) -> float:
    """Per-attempt success probability 10^(-L/10)."""
    assert loss_db >= 0
    return 10.0 ** (-loss_db / 10.0)


# ---------------------------------------------------------------------------
# timing


def attempt_duration(path: PathDescriptor, p: PhysParams) -> float:
    """One heralded attempt: source shot + round trip + reset."""
    return p.t_src_s + 2.0 * path.fiber_km_total / p.v_fiber_km_per_s \
        + p.t_reset_s


def expected_epr_latency_switch(path: PathDescriptor, p: PhysParams) -> float:
    """Closed-form E[T_pair] = T_att / T_chan for switch-centric paths."""
    if path.repeater_count != 0:
        raise ValueError("switch-centric latency asked of a repeater chain")
    return attempt_duration(path, p) / transmittance(path_loss(path, p))


def epr_latency_ratio(e_pair_s: float, p: PhysParams) -> float:
    """rho_EPR: expected pair latency over the local gate time."""
    assert p.t_local_s > 0
    return e_pair_s / p.t_local_s


def loss_ratio(k: int, p: PhysParams) -> float:
    """rho_ell: per-hop switch insertion loss over the memory loss."""
    if p.l_mem_db <= 0:
        raise ValueError("loss ratio undefined at zero memory loss")
    return switch_insertion_loss(k, p.l2x2_db) / p.l_mem_db


# ---------------------------------------------------------------------------
# repeater-chain Monte Carlo


def _cutoff_slots(tau_cut_s: float, t_att_s: float) -> int:
    """Number of slots a held pair stays usable, including its birth slot."""
    assert t_att_s > 0, "slotted chain model needs a positive attempt time"
    if tau_cut_s == float("inf"):
        return _INF_SLOTS
    return int(tau_cut_s / t_att_s + 1e-9)


def _parallel_slots(probs: np.ndarray, cutoff_slots: int, trials: int,
                    rng: np.random.Generator) -> np.ndarray:
    """All segments attempt every slot; a held pair survives cutoff_slots
    slots and then its segment resumes; done when all hold at once."""
    n_seg = len(probs)
    valid_thru = np.zeros((trials, n_seg), dtype=np.int64)
    result = np.zeros(trials, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    t = 0
    while active.any():
        t += 1
        draw = rng.random((trials, n_seg))
        success = active[:, None] & (valid_thru < t) & (draw < probs)
        valid_thru[success] = t + cutoff_slots - 1
        done = active & (valid_thru >= t).all(axis=1)
        result[done] = t
        active &= ~done
    return result


def _sequential_slots(probs: np.ndarray, cutoff_slots: int, trials: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Segments attempt one at a time in order; if the oldest held pair
    expires before the chain completes, the whole chain restarts."""
    n_seg = len(probs)
    next_seg = np.zeros(trials, dtype=np.int64)
    oldest_thru = np.zeros(trials, dtype=np.int64)
    result = np.zeros(trials, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    t = 0
    while active.any():
        t += 1
        stale = active & (next_seg > 0) & (oldest_thru < t)
        next_seg[stale] = 0
        draw = rng.random(trials)
        success = active & (draw < probs[np.minimum(next_seg, n_seg - 1)])
        started = success & (next_seg == 0)
        oldest_thru[started] = t + cutoff_slots - 1
        next_seg[success] += 1
        done = active & (next_seg == n_seg)
        result[done] = t
        active &= ~done
    return result


def _chain_slot_mean(probs: tuple[float, ...], cutoff_slots: int,
                     protocol: Protocol, trials: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    p = np.asarray(probs, dtype=float)
    if protocol is Protocol.PARALLEL:
        slots = _parallel_slots(p, cutoff_slots, trials, rng)
    else:
        slots = _sequential_slots(p, cutoff_slots, trials, rng)
    return float(slots.mean())


def repeater_chain_latency(path: PathDescriptor, protocol: Protocol,
                           p: PhysParams, trials: int = DEFAULT_MC_TRIALS,
                           seed: int = 0) -> float:
    """Monte Carlo estimate of the expected chain completion time.

    Slots last the (uniform) segment attempt duration; swaps are
    instantaneous, their loss being folded into the memory term.
    """
    assert path.repeater_count >= 1 and trials >= 1
    durations = [attempt_duration(s, p) for s in path.segments]
    t_att = durations[0]
    assert max(durations) - min(durations) < 1e-12, \
        "chain segments must share one attempt duration"
    probs = tuple(transmittance(segment_loss(path, i, p))
                  for i in range(len(path.segments)))
    if min(probs) == 0.0:
        raise UnreachableEntanglementError(
            "a chain segment can never herald (zero transmittance)")
    if p.tau_cut_s < t_att:
        raise CutoffTooSmallError(
            f"tau_cut {p.tau_cut_s:g}s is shorter than one attempt "
            f"({t_att:g}s); no pair can ever be held")
    cutoff = _cutoff_slots(p.tau_cut_s, t_att)
    if protocol is Protocol.SEQUENTIAL and cutoff < len(path.segments):
        raise CutoffTooSmallError(
            f"sequential chain of {len(path.segments)} segments cannot "
            f"finish within a {cutoff}-slot cutoff")
    return _chain_slot_mean(probs, cutoff, protocol, trials, seed) * t_att


# ---------------------------------------------------------------------------
# cached model used by the scheduler


def _key_seed(key: tuple) -> int:
    """Stable 64-bit seed derived from a cache key; pure function of the
    key so estimates are identical across processes and job counts."""
    digest = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass
class LatencyModel:
    """Expected-latency oracle for path reservations.

    Switch-centric descriptors use the closed form; repeater chains use
    the Monte Carlo estimator with results memoized per (protocol,
    trials, cutoff, segment probabilities) so repeated fabric paths cost
    one estimate."""

    params: PhysParams = field(default_factory=PhysParams)
    protocol: Protocol = Protocol.PARALLEL
    trials: int = DEFAULT_MC_TRIALS
    _slot_means: dict = field(default_factory=dict, repr=False)

    def expected_latency(self, path: PathDescriptor) -> float:
        if path.repeater_count == 0:
            return expected_epr_latency_switch(path, self.params)
        p = self.params
        t_att = attempt_duration(path.segments[0], p)
        probs = tuple(transmittance(segment_loss(path, i, p))
                      for i in range(len(path.segments)))
        if min(probs) == 0.0:
            raise UnreachableEntanglementError(
                "a chain segment can never herald (zero transmittance)")
        if p.tau_cut_s < t_att:
            raise CutoffTooSmallError(
                f"tau_cut {p.tau_cut_s:g}s is shorter than one attempt")
        cutoff = _cutoff_slots(p.tau_cut_s, t_att)
        if self.protocol is Protocol.SEQUENTIAL and cutoff < len(probs):
            raise CutoffTooSmallError(
                f"sequential chain of {len(probs)} segments cannot finish "
                f"within a {cutoff}-slot cutoff")
        key = (self.protocol.value, self.trials, cutoff, probs)
        mean = self._slot_means.get(key)
        if mean is None:
            mean = _chain_slot_mean(probs, cutoff, self.protocol,
                                    self.trials, _key_seed(key))
            self._slot_means[key] = mean
        return mean * t_att
