"""DER-side control: surrogate first-order plants, predictive tracking errors,
coordinated set-point modulation, the low/high frequency split, and the
scenario events that drive all of them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ConfigError

EXACT = "exact"
EXPLICIT = "explicit"

SETPOINT = "setpoint"
LINK_FAIL = "link_fail"
LINK_RESTORE = "link_restore"
DISTURBANCE = "disturbance"
EVENT_KINDS = (SETPOINT, LINK_FAIL, LINK_RESTORE, DISTURBANCE)


def tracking_error(setpoint: float, output: float) -> float:
    """Deviation of the measured output from its set point."""
    return setpoint - output


def predictive_error(e_now: float, e_prev: float, dt: float, horizon: float) -> float:
    """Linear extrapolation of the tracking error ``horizon`` seconds ahead."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return e_now + horizon * (e_now - e_prev) / dt


@dataclass
class DerController:
    """Per-DER modulation state.

    neighbor_errors holds the latest predictive error received from each
    adjacency peer as (value, received_at seconds); peers that never delivered
    simply have no entry and contribute nothing.
    """

    setpoint: float = 0.0
    gain: float = 0.3
    pred_horizon: float = 5e-3
    last_error: float = 0.0
    pred_error: float = 0.0
    modulated: float = 0.0
    neighbor_errors: dict = field(default_factory=dict)


def modulated_setpoint(
    ctl: DerController,
    neighbor_preds: Sequence[tuple[Optional[float], bool]],
    reference: Optional[float] = None,
) -> float:
    """Reference plus gain-weighted own and neighbor predictive errors.

    neighbor_preds carries one (value, link_up) pair per adjacency peer; a
    value of None means nothing has been received from that peer yet.  Terms
    whose link is down or that were never received contribute zero, so the
    self terms survive any communication failure.
    """
    ref = ctl.setpoint if reference is None else reference
    total = ctl.pred_error
    for value, link_up in neighbor_preds:
        if link_up and value is not None:
            total += value
    return ref + ctl.gain * total


@dataclass
class Topology:
    """Communication graph over the DERs plus the live state of each link.

    adjacency is fixed for a scenario; link_up starts equal to it and is
    toggled by failure/restore events.  Entry [i][j] is DER i's link for
    consuming DER j's state.
    """

    adjacency: list
    der_ids: tuple[int, ...] = ()
    link_up: list = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.link_up is None:
            self.link_up = [[bool(v) for v in row] for row in self.adjacency]
        if not self.der_ids:
            self.der_ids = tuple(range(1, len(self.adjacency) + 1))

    def validate(self) -> list[str]:
        problems = []
        n = len(self.adjacency)
        for i, row in enumerate(self.adjacency):
            if len(row) != n:
                problems.append(f"adjacency row {i} has {len(row)} entries, expected {n}")
                continue
            for j, v in enumerate(row):
                if v not in (0, 1):
                    problems.append(f"adjacency[{i}][{j}] must be 0 or 1")
                if i == j and v:
                    problems.append(f"adjacency[{i}][{i}] must be 0 (no self links)")
                if self.link_up[i][j] and not v:
                    problems.append(f"link_up[{i}][{j}] set without an adjacency link")
        return problems

    def _index(self, der_id: int) -> int:
        try:
            return self.der_ids.index(der_id)
        except ValueError:
            raise ConfigError(f"unknown DER id {der_id}") from None

    def peers_consumed_by(self, i: int) -> list[int]:
        """Indices whose state DER i consumes (row i of the adjacency)."""
        return [j for j, v in enumerate(self.adjacency[i]) if v]

    def receivers_of(self, i: int) -> list[int]:
        """Indices that consume DER i's state (column i of the adjacency)."""
        return [j for j in range(len(self.adjacency)) if self.adjacency[j][i]]

    def set_der_links(self, der_id: int, up: bool, direction: str = "both") -> None:
        """Toggle the links touching the DER.

        direction "out" affects only what the DER transmits (the other DERs'
        links for consuming it), "in" only what it receives, "both" all of it.
        """
        i = self._index(der_id)
        n = len(self.adjacency)
        for j in range(n):
            if direction in ("in", "both") and self.adjacency[i][j]:
                self.link_up[i][j] = up
            if direction in ("out", "both") and self.adjacency[j][i]:
                self.link_up[j][i] = up

    def transmit_dead(self, i: int) -> bool:
        """True when the DER has receivers but every outbound link is down;
        such a DER cannot reach the radio network at all."""
        receivers = self.receivers_of(i)
        if not receivers:
            return False
        return all(not self.link_up[j][i] for j in receivers)


@dataclass
class PlantState:
    """Surrogate first-order plant; x is the measured output in per-unit.

    d is an additive output disturbance: the output tracks u + d, and a change
    in d shows up in x immediately (the jump is applied by the event that
    changes d).
    """

    x: float = 0.0
    tau_p: float = 0.02
    d: float = 0.0


def _advance_lag(x: float, d: float, u: float, decay: float) -> float:
    """One exact step of the lag underlying the disturbed output x."""
    lag = x - d
    return u + (lag - u) * decay + d


def plant_step(p: PlantState, u: float, dt: float, method: str = EXACT) -> PlantState:
    """Advance the plant one step toward the applied set point u.

    Exact mode uses the closed-form first-order response and is valid for any
    dt; explicit mode is a forward-Euler step and requires dt <= tau_p / 2.
    For constant u and d the output converges to u + d.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if method == EXACT:
        new_x = _advance_lag(p.x, p.d, u, math.exp(-dt / p.tau_p))
    elif method == EXPLICIT:
        if dt > p.tau_p / 2:
            raise ConfigError(
                f"explicit plant step needs dt <= tau_p/2 ({p.tau_p / 2}), got {dt}"
            )
        lag = p.x - p.d
        new_x = lag + dt * (u - lag) / p.tau_p + p.d
    else:
        raise ConfigError(f"unknown discretization {method!r}")
    return PlantState(x=new_x, tau_p=p.tau_p, d=p.d)


def pcc_aggregate(outputs: Sequence[float]) -> float:
    """Combined response at the point of common coupling: the per-unit mean."""
    if not outputs:
        raise ValueError("cannot aggregate an empty output list")
    return sum(outputs) / len(outputs)


@dataclass
class FreqPartition:
    """First-order low-pass state; the high-pass part is the exact complement."""

    cutoff_hz: float
    lpf_state: float = 0.0


def frequency_partition(
    sample: float, fp: FreqPartition, dt: float
) -> tuple[float, float, FreqPartition]:
    """Split one sample into complementary low/high parts.

    low is a discrete first-order low-pass with alpha = dt / (dt + 1/(2*pi*fc));
    high = sample - low, so low + high reconstructs the input exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if fp.cutoff_hz <= 0:
        raise ValueError("cutoff frequency must be positive")
    alpha = dt / (dt + 1.0 / (2.0 * math.pi * fp.cutoff_hz))
    low = fp.lpf_state + alpha * (sample - fp.lpf_state)
    return low, sample - low, FreqPartition(fp.cutoff_hz, low)


LINK_DIRECTIONS = ("out", "in", "both")


@dataclass(frozen=True)
class Event:
    """One scheduled scenario action.

    kind selects the effect: SETPOINT sets the listed DERs' set points to
    value; DISTURBANCE adds value to their output disturbance; LINK_FAIL and
    LINK_RESTORE toggle the listed DERs' links (all of them by default, or
    only the transmit/receive side via direction "out"/"in").
    """

    t: float
    kind: str
    ders: tuple[int, ...]
    value: float = 0.0
    direction: str = "both"


def apply_event(event: Event, nodes: dict, topology: Topology) -> None:
    """Apply one due event to the controller/plant/link state in place."""
    if event.kind not in EVENT_KINDS:
        raise ConfigError(f"unknown event kind {event.kind!r}")
    for der in event.ders:
        if der not in nodes:
            raise ConfigError(f"event references unknown DER id {der}")
    if event.kind == SETPOINT:
        for der in event.ders:
            nodes[der].controller.setpoint = event.value
    elif event.kind == DISTURBANCE:
        for der in event.ders:
            plant = nodes[der].plant
            plant.d += event.value
            plant.x += event.value  # output disturbances appear instantly
    else:
        up = event.kind == LINK_RESTORE
        for der in event.ders:
            topology.set_der_links(der, up, direction=event.direction)
