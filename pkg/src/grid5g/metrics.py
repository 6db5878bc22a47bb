"""Step-response metrics over sampled traces: overshoot percentage, settling
time, peak time, and a boundedness-based stability flag.

All metrics work on the raw samples, no interpolation, so results are
deterministic and the sampling period bounds the measurement error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

#: settling_time returns None when the trace never stays inside the band.
NOT_SETTLED = None

DEFAULT_BAND = 0.02


@dataclass(frozen=True)
class StepSpec:
    """One commanded step: instant, endpoints, and the settling band."""

    t0: float
    y_init: float
    y_final: float
    band: float = DEFAULT_BAND

    def validate(self) -> list[str]:
        problems = []
        if self.y_final == self.y_init:
            problems.append("y_final must differ from y_init")
        if not 0.0 < self.band <= 0.2:
            problems.append("band must be in (0, 0.2]")
        return problems


@dataclass(frozen=True)
class MetricsReport:
    overshoot_pct: float
    settling_time: Optional[float]
    peak_time: float
    stable: bool
    band: float


def _window(t: Sequence[float], y: Sequence[float], spec: StepSpec):
    if len(t) != len(y):
        raise ValueError("time and value sequences differ in length")
    if not t:
        raise ValueError("empty trace")
    bad = spec.validate()
    if bad:
        raise ValueError("; ".join(bad))
    if t[0] > spec.t0:
        raise ValueError(f"trace starts at {t[0]}, after the step at {spec.t0}")
    start = next((i for i, ti in enumerate(t) if ti >= spec.t0), None)
    if start is None:
        raise ValueError(f"trace ends before the step at {spec.t0}")
    return start


def overshoot(t: Sequence[float], y: Sequence[float], spec: StepSpec) -> float:
    """Percent by which the peak excursion beyond y_init exceeds the step size.

    Zero for monotone responses that never pass y_final.
    """
    start = _window(t, y, spec)
    size = abs(spec.y_final - spec.y_init)
    direction = 1.0 if spec.y_final > spec.y_init else -1.0
    peak = max((y[i] - spec.y_init) * direction for i in range(start, len(y)))
    return 100.0 * max(0.0, peak - size) / size


def peak_time(t: Sequence[float], y: Sequence[float], spec: StepSpec) -> float:
    """Time of the first sample attaining the peak excursion."""
    start = _window(t, y, spec)
    direction = 1.0 if spec.y_final > spec.y_init else -1.0
    best = start
    for i in range(start, len(y)):
        if (y[i] - spec.y_init) * direction > (y[best] - spec.y_init) * direction:
            best = i
    return t[best]


def settling_time(t: Sequence[float], y: Sequence[float], spec: StepSpec) -> Optional[float]:
    """Smallest T with |y - y_final| <= band * |step| for all t >= t0 + T.

    Returns NOT_SETTLED (None) when the last sample is still outside the band.
    """
    start = _window(t, y, spec)
    tolerance = spec.band * abs(spec.y_final - spec.y_init)
    last_violation = None
    for i in range(start, len(y)):
        if abs(y[i] - spec.y_final) > tolerance:
            last_violation = i
    if last_violation is None:
        return 0.0
    if last_violation == len(y) - 1:
        return NOT_SETTLED
    return t[last_violation + 1] - spec.t0


def stability_flag(t: Sequence[float], y: Sequence[float], spec: StepSpec) -> bool:
    """Settled and never excursed beyond 10x the commanded step size."""
    start = _window(t, y, spec)
    bound = 10.0 * abs(spec.y_final - spec.y_init)
    bounded = all(abs(y[i] - spec.y_init) <= bound for i in range(start, len(y)))
    return bounded and settling_time(t, y, spec) is not NOT_SETTLED


def build_report(t: Sequence[float], y: Sequence[float], spec: StepSpec) -> MetricsReport:
    """All step metrics for one trace window."""
    return MetricsReport(
        overshoot_pct=overshoot(t, y, spec),
        settling_time=settling_time(t, y, spec),
        peak_time=peak_time(t, y, spec),
        stable=stability_flag(t, y, spec),
        band=spec.band,
    )
