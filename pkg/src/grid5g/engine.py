"""Lock-step co-simulation loop.

Both the radio side and the plant side advance through the same TTI-sized time
slices.  Within a TTI the phase order is fixed: due events, state sensing and
packet generation, BSR collection, channel sampling, round-robin scheduling,
packet delivery, the control update, then the plant substeps.  Values
delivered over the radio become usable by controllers at the start of the
following TTI; ideal mode hands them over at the creation instant instead.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .channel import (
    CHANNEL_MODELS,
    ChannelState,
    IID_UNIFORM,
    cqi_to_modulation,
    sample_cqi,
)
from .control import (
    DISTURBANCE,
    EVENT_KINDS,
    LINK_DIRECTIONS,
    EXACT,
    EXPLICIT,
    DerController,
    Event,
    FreqPartition,
    PlantState,
    Topology,
    _advance_lag,
    apply_event,
    frequency_partition,
    modulated_setpoint,
    pcc_aggregate,
    predictive_error,
    tracking_error,
)
from .errors import ScenarioError
from .ran import (
    Allocation,
    BufferStatus,
    Packet,
    RanConfig,
    RoundRobinState,
    deliver_packets,
    report_bsr,
    schedule_round_robin,
)

IDEAL = "ideal"
FIVE_G = "5g"
MODES = (IDEAL, FIVE_G)

# Reserved link id for the central controller in frequency-partition scenarios.
CENTRAL_ID = 0


@dataclass
class SimClock:
    """TTI counter; wall time is always derived, never accumulated."""

    tti: float
    substeps_per_tti: int
    tti_index: int = 0

    @property
    def now(self) -> float:
        return self.tti_index * self.tti


@dataclass(frozen=True)
class DerSpec:
    """Scenario-level description of one DER (controller + plant parameters)."""

    der_id: int
    gain: float = 0.3
    pred_horizon: float = 5e-3
    tau_p: float = 0.02
    x0: float = 0.0
    setpoint0: float = 0.0


@dataclass(frozen=True)
class ChannelConfig:
    model: str = IID_UNIFORM
    markov_stay_prob: float = 0.9
    shared_across_carriers: bool = False
    infinite_budget: bool = False  # diagnostic override: every queue drains each TTI


@dataclass(frozen=True)
class CentralConfig:
    """Frequency-partitioned central/local control (use with zero adjacency).

    The central controller low-passes each DER's reference and ships the low
    part over the RAN; the high part is reconstructed locally every TTI.
    """

    enabled: bool = False
    cutoff_hz: float = 10.0


@dataclass(frozen=True)
class EngineConfig:
    substeps_per_tti: int = 20
    queue_cap: int = 1000
    plant_discretization: str = EXACT


@dataclass
class Scenario:
    """Declarative experiment: everything a run needs, nothing ambient."""

    duration: float
    ders: list
    adjacency: list
    events: list = field(default_factory=list)
    seed: int = 1
    ran: RanConfig = field(default_factory=RanConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    central: CentralConfig = field(default_factory=CentralConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    sample_period: float = 1e-3
    mode: str = FIVE_G
    name: str = ""

    def validate(self) -> list[str]:
        problems = [f"ran: {p}" for p in self.ran.validate()]
        if self.duration <= 0:
            problems.append("duration must be positive")
        elif self.ran.tti > 0:
            ratio = self.duration / self.ran.tti
            if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
                problems.append(
                    f"duration ({self.duration}) must be an integer multiple of "
                    f"tti ({self.ran.tti})"
                )
        if not isinstance(self.seed, int):
            problems.append("seed must be an integer")
        if self.mode not in MODES:
            problems.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.channel.model not in CHANNEL_MODELS:
            problems.append(f"channel model must be one of {CHANNEL_MODELS}")
        if not 0.0 <= self.channel.markov_stay_prob <= 1.0:
            problems.append("channel markov_stay_prob must be in [0, 1]")
        if self.engine.substeps_per_tti < 1:
            problems.append("substeps_per_tti must be >= 1")
        if self.engine.queue_cap < 1:
            problems.append("queue_cap must be >= 1")
        if self.engine.plant_discretization not in (EXACT, EXPLICIT):
            problems.append("plant_discretization must be 'exact' or 'explicit'")
        if self.sample_period <= 0:
            problems.append("sample_period must be positive")
        elif self.ran.tti > 0 and self.engine.substeps_per_tti >= 1:
            substep = self.ran.tti / self.engine.substeps_per_tti
            ratio = self.sample_period / substep
            if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
                problems.append(
                    "sample_period must be a whole number of plant substeps "
                    f"({substep} s)"
                )
        if not self.ders:
            problems.append("at least one DER is required")
        seen = set()
        substep = (
            self.ran.tti / self.engine.substeps_per_tti
            if self.engine.substeps_per_tti >= 1
            else None
        )
        for spec in self.ders:
            if spec.der_id <= 0:
                problems.append(f"DER id {spec.der_id} must be a positive integer")
            if spec.der_id in seen:
                problems.append(f"duplicate DER id {spec.der_id}")
            seen.add(spec.der_id)
            if spec.tau_p <= 0:
                problems.append(f"DER {spec.der_id}: tau_p must be positive")
            elif (
                self.engine.plant_discretization == EXPLICIT
                and substep is not None
                and substep > spec.tau_p / 2
            ):
                problems.append(
                    f"DER {spec.der_id}: explicit plant step {substep} exceeds "
                    f"tau_p/2 ({spec.tau_p / 2})"
                )
        n = len(self.ders)
        if len(self.adjacency) != n:
            problems.append(
                f"adjacency must be {n}x{n} to match the DER list, "
                f"got {len(self.adjacency)} rows"
            )
        else:
            topo = Topology(
                [list(row) for row in self.adjacency],
                der_ids=tuple(s.der_id for s in self.ders),
            )
            problems += [f"topology: {p}" for p in topo.validate()]
            for i in range(n):
                row = self.adjacency[i]
                if len(row) != n:
                    continue
                for j in range(n):
                    if row[j] and not self.adjacency[j][i]:
                        problems.append(
                            f"adjacency[{i}][{j}]=1 but adjacency[{j}][{i}]=0: "
                            "links must be declared in both directions"
                        )
        if self.central.enabled:
            if self.central.cutoff_hz <= 0:
                problems.append("central cutoff_hz must be positive")
            if any(any(row) for row in self.adjacency):
                problems.append(
                    "central (frequency-partition) control requires a zero adjacency"
                )
        ids = {s.der_id for s in self.ders}
        last_t = None
        for idx, ev in enumerate(self.events):
            if ev.kind not in EVENT_KINDS:
                problems.append(f"event {idx}: unknown kind {ev.kind!r}")
            if not ev.ders:
                problems.append(f"event {idx}: must target at least one DER")
            for der in ev.ders:
                if der not in ids:
                    problems.append(f"event {idx}: unknown DER id {der}")
            if not ev.t >= 0:
                problems.append(f"event {idx}: time must be >= 0")
            if ev.t >= self.duration:
                problems.append(
                    f"event {idx}: time {ev.t} is at or past the duration "
                    f"({self.duration}) and would never take effect"
                )
            if not math.isfinite(ev.value):
                problems.append(f"event {idx}: value must be finite")
            if ev.direction not in LINK_DIRECTIONS:
                problems.append(
                    f"event {idx}: direction must be one of {LINK_DIRECTIONS}"
                )
            if last_t is not None and ev.t < last_t:
                problems.append(f"event {idx}: events must be sorted by time")
            last_t = ev.t
        return problems


@dataclass(frozen=True)
class TraceRecord:
    """One sampled row: per-DER tuples follow the scenario's DER order."""

    t: float
    x_sp: tuple
    x_sp_prime: tuple
    x: tuple
    e: tuple
    e_pred: tuple
    queued: tuple
    delivered: tuple
    pcc: float
    cqi: tuple  # per DER, per carrier; zeros in ideal mode


@dataclass(frozen=True)
class DeliveryRecord:
    source: int
    dest: int
    created_at: float
    delivered_at: float
    payload_value: float


@dataclass
class DerNode:
    """Live per-DER state: transmit queue, controller, plant, channel view."""

    der_id: int
    controller: DerController
    plant: PlantState
    queue: deque = field(default_factory=deque)
    cqi: list = field(default_factory=list)
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    delivered_this_tti: int = 0
    next_packet_id: int = 0
    e: float = 0.0
    decay: float = 0.0
    lpf: Optional[FreqPartition] = None
    high: float = 0.0
    received_low: Optional[tuple] = None
    pending_low: Optional[tuple] = None
    pending_neighbors: dict = field(default_factory=dict)


class EndOfSimulation(Exception):
    """step_tti was called after the scenario duration was exhausted."""


class Simulation:
    """Single-advancer simulation instance built from a validated Scenario.

    policy plugs in the RB allocation rule; it must match the signature of
    schedule_round_robin, which is the only policy shipped.
    """

    def __init__(self, scenario: Scenario, policy=schedule_round_robin):
        problems = scenario.validate()
        if problems:
            raise ScenarioError(problems)
        self.policy = policy
        self.scenario = scenario
        cfg = scenario.ran
        self.cfg = cfg
        self.total_ttis = round(scenario.duration / cfg.tti)
        self.substeps = scenario.engine.substeps_per_tti
        self.substep_dt = cfg.tti / self.substeps
        self.sample_substeps = round(scenario.sample_period / self.substep_dt)
        self.clock = SimClock(tti=cfg.tti, substeps_per_tti=self.substeps)
        self.der_ids = tuple(s.der_id for s in scenario.ders)
        self.topology = Topology(
            [list(row) for row in scenario.adjacency], der_ids=self.der_ids
        )
        self.nodes = [self._build_node(spec) for spec in scenario.ders]
        self.node_by_id = {n.der_id: n for n in self.nodes}
        self.index_by_id = {n.der_id: i for i, n in enumerate(self.nodes)}
        self.rr = RoundRobinState(0)
        self.bsr_view = [BufferStatus(d, 0, 0.0) for d in self.der_ids]
        self.chan = ChannelState(
            der_ids=self.der_ids,
            carriers=cfg.aggregated_carriers,
            model=scenario.channel.model,
            seed=scenario.seed,
            markov_stay_prob=scenario.channel.markov_stay_prob,
            shared_across_carriers=scenario.channel.shared_across_carriers,
        )
        self.trace: list[TraceRecord] = []
        self.delivery_log: list[DeliveryRecord] = []
        self.last_allocation: Optional[Allocation] = None
        self._next_event = 0

    def _build_node(self, spec: DerSpec) -> DerNode:
        ctl = DerController(
            setpoint=spec.setpoint0,
            gain=spec.gain,
            pred_horizon=spec.pred_horizon,
            last_error=spec.setpoint0 - spec.x0,
            modulated=spec.setpoint0,
        )
        node = DerNode(
            der_id=spec.der_id,
            controller=ctl,
            plant=PlantState(x=spec.x0, tau_p=spec.tau_p),
            cqi=[0] * self.cfg.aggregated_carriers,
            e=spec.setpoint0 - spec.x0,
            decay=math.exp(-self.substep_dt / spec.tau_p),
        )
        if self.scenario.central.enabled:
            node.lpf = FreqPartition(self.scenario.central.cutoff_hz, spec.setpoint0)
            # Assume the loop ran long before t=0: the low component is settled.
            node.received_low = (spec.setpoint0, 0.0)
        return node

    @property
    def done(self) -> bool:
        return self.clock.tti_index >= self.total_ttis

    def run(self) -> list[TraceRecord]:
        while not self.done:
            self.step_tti()
        return self.trace

    def step_tti(
        self, plant_override: Optional[Callable[[int, list], Sequence[float]]] = None
    ) -> None:
        """Advance exactly one TTI; plant_override replaces the plant substeps
        with externally computed outputs (the bridge attachment point)."""
        if self.done:
            raise EndOfSimulation(f"scenario ends at TTI {self.total_ttis}")
        k = self.clock.tti_index
        tti = self.cfg.tti
        now = k * tti
        five_g = self.scenario.mode == FIVE_G
        central = self.scenario.central.enabled

        # Values delivered at the end of an earlier TTI become usable now.
        for node in self.nodes:
            node.delivered_this_tti = 0
            if node.pending_neighbors:
                node.controller.neighbor_errors.update(node.pending_neighbors)
                node.pending_neighbors.clear()
            if node.pending_low is not None:
                node.received_low = node.pending_low
                node.pending_low = None

        # (1) due events
        events = self.scenario.events
        while self._next_event < len(events) and events[self._next_event].t <= now + 1e-9:
            apply_event(events[self._next_event], self.node_by_id, self.topology)
            self._next_event += 1

        # (2) sense local state, generate this TTI's packets
        for i, node in enumerate(self.nodes):
            ctl = node.controller
            e_now = tracking_error(ctl.setpoint, node.plant.x)
            ctl.pred_error = predictive_error(e_now, ctl.last_error, tti, ctl.pred_horizon)
            ctl.last_error = e_now
            node.e = e_now
            if central:
                low, high, node.lpf = frequency_partition(ctl.setpoint, node.lpf, tti)
                node.high = high
                outgoing = [(node, CENTRAL_ID, node.der_id, low)]
            else:
                outgoing = [
                    (node, node.der_id, self.der_ids[j], ctl.pred_error)
                    for j in self.topology.receivers_of(i)
                ]
            for owner, source, dest, value in outgoing:
                owner.generated += 1
                if five_g:
                    packet = Packet(
                        id=owner.next_packet_id,
                        source=source,
                        dest=dest,
                        size=self.cfg.packet_size,
                        created_at=now,
                        payload_value=value,
                    )
                    owner.next_packet_id += 1
                    if len(owner.queue) >= self.scenario.engine.queue_cap:
                        owner.queue.popleft()  # drop-oldest, surfaced in the counter
                        owner.dropped += 1
                    owner.queue.append(packet)
                else:
                    self._apply_payload(source, dest, value, received_at=now, instant=True)
                    owner.delivered += 1
                    owner.delivered_this_tti += 1
                    self.delivery_log.append(
                        DeliveryRecord(source, dest, now, now, value)
                    )

        if five_g:
            # (3) BSR collection; a DER whose every outbound link is down
            # cannot transmit anything, BSRs included, so the gNodeB simply
            # stops hearing from it.
            if k % self.cfg.bsr_every() == 0:
                for i, node in enumerate(self.nodes):
                    if self.topology.transmit_dead(i):
                        self.bsr_view[i] = BufferStatus(node.der_id, 0, now)
                        continue
                    self.bsr_view[i] = report_bsr(node, now)
            # (4) channel
            reports, self.chan = sample_cqi(self.chan, k)
            for report in reports:
                self.node_by_id[report.der].cqi = list(report.per_carrier_cqi)
            # (5) grants from the configured policy (round robin by default)
            allocation, self.rr = self.policy(
                self.bsr_view, self.cfg, self.rr, tti_index=k
            )
            self.last_allocation = allocation
            # (6) deliveries, visible from the start of the next TTI
            tti_end = (k + 1) * tti
            for node in self.nodes:
                granted = allocation.grants.get(node.der_id, 0)
                if self.scenario.channel.infinite_budget:
                    packets = deliver_packets(
                        node, granted, self.cfg, [], tti_end, budget_bits=math.inf
                    )
                elif granted > 0:
                    qm = [cqi_to_modulation(c) for c in node.cqi]
                    packets = deliver_packets(node, granted, self.cfg, qm, tti_end)
                else:
                    continue
                node.delivered_this_tti += len(packets)
                # (7) hand payloads to their receivers
                for packet in packets:
                    self.delivery_log.append(
                        DeliveryRecord(
                            packet.source,
                            packet.dest,
                            packet.created_at,
                            packet.delivered_at,
                            packet.payload_value,
                        )
                    )
                    self._apply_payload(
                        packet.source,
                        packet.dest,
                        packet.payload_value,
                        received_at=packet.delivered_at,
                        instant=False,
                    )

        # control update: modulated set points applied over the coming substeps
        for i, node in enumerate(self.nodes):
            ctl = node.controller
            reference = None
            if central:
                base = node.received_low[0] if node.received_low is not None else 0.0
                reference = base + node.high
            preds = []
            for j in self.topology.peers_consumed_by(i):
                entry = ctl.neighbor_errors.get(self.der_ids[j])
                preds.append(
                    (entry[0] if entry is not None else None, self.topology.link_up[i][j])
                )
            ctl.modulated = modulated_setpoint(ctl, preds, reference=reference)

        # (8) plant substeps with trace sampling on the substep grid
        explicit = self.scenario.engine.plant_discretization == EXPLICIT
        for s in range(self.substeps):
            g = k * self.substeps + s
            if g % self.sample_substeps == 0:
                self._emit_record(now + s * self.substep_dt)
            if plant_override is None:
                for node in self.nodes:
                    plant = node.plant
                    u = node.controller.modulated
                    if explicit:
                        lag = plant.x - plant.d
                        plant.x = lag + self.substep_dt * (u - lag) / plant.tau_p + plant.d
                    else:
                        plant.x = _advance_lag(plant.x, plant.d, u, node.decay)
        if plant_override is not None:
            outputs = plant_override(k, [n.controller.modulated for n in self.nodes])
            for node, value in zip(self.nodes, outputs):
                node.plant.x = value

        self.clock.tti_index += 1
        if self.done:
            g = self.total_ttis * self.substeps
            if g % self.sample_substeps == 0:
                self._emit_record(self.total_ttis * tti)

    def _apply_payload(
        self, source: int, dest: int, value: float, received_at: float, instant: bool
    ) -> None:
        node = self.node_by_id[dest]
        if source == CENTRAL_ID:
            if instant:
                node.received_low = (value, received_at)
            else:
                node.pending_low = (value, received_at)
            return
        di = self.index_by_id[dest]
        si = self.index_by_id[source]
        if not self.topology.link_up[di][si]:
            return  # the logical link is down; the payload is lost in the air
        if instant:
            node.controller.neighbor_errors[source] = (value, received_at)
        else:
            node.pending_neighbors[source] = (value, received_at)

    def _emit_record(self, t: float) -> None:
        xs = tuple(n.plant.x for n in self.nodes)
        self.trace.append(
            TraceRecord(
                t=t,
                x_sp=tuple(n.controller.setpoint for n in self.nodes),
                x_sp_prime=tuple(n.controller.modulated for n in self.nodes),
                x=xs,
                e=tuple(n.e for n in self.nodes),
                e_pred=tuple(n.controller.pred_error for n in self.nodes),
                queued=tuple(len(n.queue) for n in self.nodes),
                delivered=tuple(n.delivered_this_tti for n in self.nodes),
                pcc=pcc_aggregate(xs),
                cqi=tuple(tuple(n.cqi) for n in self.nodes),
            )
        )


def run(scenario: Scenario) -> list[TraceRecord]:
    """Execute a scenario start to finish and return its trace."""
    return Simulation(scenario).run()
