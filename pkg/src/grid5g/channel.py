"""Random time-varying channel: per-DER, per-carrier CQI and its mapping to
the modulation order the scheduler can use."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError

CQI_MIN = 1
CQI_MAX = 15

IID_UNIFORM = "iid_uniform"
MARKOV_STEP = "markov_step"
CHANNEL_MODELS = (IID_UNIFORM, MARKOV_STEP)


def cqi_to_modulation(cqi: int) -> int:
    """Map CQI 1..15 onto the admissible modulation orders.

    1-6 -> 2, 7-9 -> 4, 10-12 -> 6, 13-15 -> 8.
    """
    if not CQI_MIN <= cqi <= CQI_MAX:
        raise ValueError(f"CQI must be in [{CQI_MIN}, {CQI_MAX}], got {cqi}")
    if cqi <= 6:
        return 2
    if cqi <= 9:
        return 4
    if cqi <= 12:
        return 6
    return 8


@dataclass(frozen=True)
class CqiReport:
    der: int
    per_carrier_cqi: tuple[int, ...]
    tti_index: int


@dataclass
class ChannelState:
    """Seeded channel evolution; one instance per simulation, advanced in lockstep.

    shared_across_carriers collapses the per-carrier draws into a single CQI
    copied to every carrier (the channel is otherwise independent per carrier).
    """

    der_ids: tuple[int, ...]
    carriers: int
    model: str = IID_UNIFORM
    seed: int = 0
    markov_stay_prob: float = 0.9
    shared_across_carriers: bool = False
    rng: random.Random = field(init=False, repr=False)
    current: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        if self.model not in CHANNEL_MODELS:
            raise ConfigError(f"unknown channel model {self.model!r}")
        if not 0.0 <= self.markov_stay_prob <= 1.0:
            raise ConfigError("markov_stay_prob must be in [0, 1]")
        self.rng = random.Random(self.seed)


def _step_one(state: ChannelState, previous: int | None) -> int:
    if state.model == IID_UNIFORM or previous is None:
        return state.rng.randint(CQI_MIN, CQI_MAX)
    # MARKOV_STEP: hold with probability stay_prob, otherwise move one step
    # in a uniformly random direction, clamped to the CQI range.
    if state.rng.random() < state.markov_stay_prob:
        return previous
    if state.rng.random() < 0.5:
        return max(CQI_MIN, previous - 1)
    return min(CQI_MAX, previous + 1)


def sample_cqi(state: ChannelState, tti_index: int) -> tuple[list[CqiReport], ChannelState]:
    """Draw this TTI's CQI for every DER and carrier; deterministic per seed."""
    reports = []
    for der in state.der_ids:
        previous = state.current.get(der)
        if state.shared_across_carriers:
            prev0 = previous[0] if previous else None
            values = [_step_one(state, prev0)] * state.carriers
        else:
            values = [
                _step_one(state, previous[c] if previous else None)
                for c in range(state.carriers)
            ]
        state.current[der] = values
        reports.append(CqiReport(der=der, per_carrier_cqi=tuple(values), tti_index=tti_index))
    return reports, state


def modulation_orders_for(report: Sequence[int]) -> list[int]:
    """Per-carrier modulation orders for a CQI vector."""
    return [cqi_to_modulation(c) for c in report]
