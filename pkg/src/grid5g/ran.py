"""gNodeB-side radio model: buffer-status collection, round-robin resource-block
grants, and the per-link rate law that turns grants into delivered packets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

from .errors import ConfigError

if TYPE_CHECKING:  # pragma: no cover
    from .engine import DerNode

ADMISSIBLE_QM = (2, 4, 6, 8)
ADMISSIBLE_MU = (0, 1, 2, 3, 4)

# NR slot structure: 14 OFDM symbols per slot, 2**mu slots per millisecond.
SYMBOLS_PER_MS = 14


@dataclass(frozen=True)
class RanConfig:
    """Radio parameters for the scheduler and the link-rate formula.

    Times are seconds, packet_size is bytes, bandwidth/carrier_freq are Hz.
    Defaults are the 2-carrier FR1 setup used by the bundled presets.
    """

    aggregated_carriers: int = 2
    modulation_orders: tuple[int, ...] = ADMISSIBLE_QM
    max_layers: int = 2
    scaling_factor: float = 0.8
    max_code_rate: float = 948 / 1024
    numerology: int = 2
    total_rbs: int = 3
    rbs_per_der: int = 1
    overhead: float = 0.08  # FR1 uplink convention; configurable
    tti: float = 1e-3
    bsr_period: float = 1e-3  # must be an integer multiple of tti
    packet_size: int = 150
    bandwidth: float = 5e6
    carrier_freq: float = 2.63e9

    def bsr_every(self) -> int:
        """BSR rounds happen every this many TTIs."""
        return max(1, round(self.bsr_period / self.tti))

    def validate(self) -> list[str]:
        problems = []
        if self.aggregated_carriers < 1:
            problems.append("aggregated_carriers must be >= 1")
        if not self.modulation_orders:
            problems.append("modulation_orders must be non-empty")
        for qm in self.modulation_orders:
            if qm not in ADMISSIBLE_QM:
                problems.append(f"modulation order {qm} not in {ADMISSIBLE_QM}")
        if self.max_layers < 1:
            problems.append("max_layers must be >= 1")
        if not 0.0 < self.scaling_factor <= 1.0:
            problems.append("scaling_factor must be in (0, 1]")
        if not 0.0 < self.max_code_rate <= 1.0:
            problems.append("max_code_rate must be in (0, 1]")
        if self.numerology not in ADMISSIBLE_MU:
            problems.append(f"numerology must be one of {ADMISSIBLE_MU}")
        if self.total_rbs < 1:
            problems.append("total_rbs must be >= 1")
        if self.rbs_per_der < 1:
            problems.append("rbs_per_der must be >= 1")
        if not 0.0 <= self.overhead < 1.0:
            problems.append("overhead must be in [0, 1)")
        if self.tti <= 0:
            problems.append("tti must be positive")
        if self.bsr_period <= 0:
            problems.append("bsr_period must be positive")
        elif self.tti > 0:
            ratio = self.bsr_period / self.tti
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                problems.append(
                    f"bsr_period ({self.bsr_period}) must be an integer multiple "
                    f"of tti ({self.tti})"
                )
        if self.packet_size <= 0:
            problems.append("packet_size must be positive")
        if self.bandwidth <= 0:
            problems.append("bandwidth must be positive")
        if self.carrier_freq <= 0:
            problems.append("carrier_freq must be positive")
        return problems


@dataclass
class Packet:
    """One state report queued for the air interface.

    dest identifies the receiving DER (0 means the central controller link).
    """

    id: int
    source: int
    dest: int
    size: int
    created_at: float
    payload_value: float
    delivered_at: Optional[float] = None


@dataclass(frozen=True)
class BufferStatus:
    der: int
    pending_packets: int
    reported_at: float


@dataclass(frozen=True)
class Allocation:
    tti_index: int
    grants: dict  # DER id -> RB count


@dataclass(frozen=True)
class RoundRobinState:
    cursor: int = 0


def symbol_time(mu: int) -> float:
    """OFDM symbol duration in seconds: 1 ms split into 14 * 2**mu symbols."""
    if mu not in ADMISSIBLE_MU:
        raise ConfigError(f"numerology must be one of {ADMISSIBLE_MU}, got {mu}")
    return 1e-3 / (SYMBOLS_PER_MS * 2**mu)


def carrier_throughput(cfg: RanConfig, qm: int, n_prb: int) -> float:
    """Bits per second achieved on one component carrier.

    v * Qm * f * R_max * (12 * N_PRB / T_s) * (1 - OH); zero iff n_prb is zero.
    """
    if qm not in cfg.modulation_orders:
        raise ConfigError(f"modulation order {qm} not admissible ({cfg.modulation_orders})")
    if n_prb < 0:
        raise ConfigError("n_prb must be >= 0")
    t_s = symbol_time(cfg.numerology)
    return (
        cfg.max_layers
        * qm
        * cfg.scaling_factor
        * cfg.max_code_rate
        * (12.0 * n_prb / t_s)
        * (1.0 - cfg.overhead)
    )


def aggregate_throughput(cfg: RanConfig, per_carrier_qm: Sequence[int], n_prb: int) -> float:
    """Sum of carrier_throughput over the aggregated carriers, bits per second."""
    if len(per_carrier_qm) != cfg.aggregated_carriers:
        raise ConfigError(
            f"expected {cfg.aggregated_carriers} per-carrier modulation orders, "
            f"got {len(per_carrier_qm)}"
        )
    return sum(carrier_throughput(cfg, qm, n_prb) for qm in per_carrier_qm)


def schedule_round_robin(
    bsrs: Sequence[BufferStatus],
    cfg: RanConfig,
    state: RoundRobinState,
    tti_index: int = 0,
) -> tuple[Allocation, RoundRobinState]:
    """Grant RBs to backlogged DERs in circular order starting at the cursor.

    Each backlogged DER gets at most rbs_per_der RBs per TTI (the last grant
    may be smaller when total_rbs runs out); DERs with empty buffers are
    skipped.  The returned cursor points at the DER after the last one granted.
    """
    n = len(bsrs)
    grants: dict = {}
    if n == 0:
        return Allocation(tti_index, grants), state
    remaining = cfg.total_rbs
    last_granted = None
    for step in range(n):
        if remaining <= 0:
            break
        idx = (state.cursor + step) % n
        status = bsrs[idx]
        if status.pending_packets <= 0:
            continue
        share = min(cfg.rbs_per_der, remaining)
        grants[status.der] = share
        remaining -= share
        last_granted = idx
    if last_granted is None:
        return Allocation(tti_index, grants), state
    return Allocation(tti_index, grants), RoundRobinState((last_granted + 1) % n)


def deliver_packets(
    der: "DerNode",
    granted_rbs: int,
    cfg: RanConfig,
    per_carrier_qm: Sequence[int],
    tti_end: float,
    budget_bits: Optional[float] = None,
) -> list[Packet]:
    """Serve the DER's transmit queue for one TTI.

    The bit budget is throughput * tti; floor(budget / packet bits) packets
    leave the queue FIFO.  Packets are never fragmented, so leftover budget is
    discarded.  Delivered packets are stamped with the end of the current TTI.
    """
    if granted_rbs < 0:
        raise ConfigError("granted_rbs must be >= 0")
    if budget_bits is None:
        budget_bits = aggregate_throughput(cfg, per_carrier_qm, granted_rbs) * cfg.tti
    if math.isinf(budget_bits):
        count = len(der.queue)
    else:
        count = min(len(der.queue), int(budget_bits // (8 * cfg.packet_size)))
    delivered = []
    for _ in range(count):
        packet = der.queue.popleft()
        packet.delivered_at = tti_end
        delivered.append(packet)
    der.delivered += len(delivered)
    return delivered


def report_bsr(der: "DerNode", now: float) -> BufferStatus:
    """Exact queue occupancy; the report channel is lossless and instantaneous."""
    return BufferStatus(der=der.der_id, pending_packets=len(der.queue), reported_at=now)
