"""Deterministic co-simulation of a 5G RAN serving distributed grid control loops."""

__version__ = "0.1.0"

from .channel import CqiReport, ChannelState, cqi_to_modulation, sample_cqi
from .control import (
    DerController,
    Event,
    FreqPartition,
    PlantState,
    Topology,
    apply_event,
    frequency_partition,
    modulated_setpoint,
    pcc_aggregate,
    plant_step,
    predictive_error,
    tracking_error,
)
from .engine import (
    CentralConfig,
    ChannelConfig,
    DerSpec,
    EndOfSimulation,
    EngineConfig,
    FIVE_G,
    IDEAL,
    Scenario,
    SimClock,
    Simulation,
    TraceRecord,
    run,
)
from .errors import BridgeProtocolError, ConfigError, ScenarioError
from .metrics import (
    NOT_SETTLED,
    MetricsReport,
    StepSpec,
    build_report,
    overshoot,
    peak_time,
    settling_time,
    stability_flag,
)
from .ran import (
    Allocation,
    BufferStatus,
    Packet,
    RanConfig,
    RoundRobinState,
    aggregate_throughput,
    carrier_throughput,
    deliver_packets,
    report_bsr,
    schedule_round_robin,
    symbol_time,
)
from .scenario import list_presets, load_scenario, parse_scenario
from .trace import TraceData, emit_trace, parse_trace, read_trace, write_trace

__all__ = [name for name in dir() if not name.startswith("_")]
