"""Piecewise-linear bias schedules delta(t).

A waveform is an ordered chain of ramp/hold segments with continuous
delta; times are in units of T_gamma, biases in units of gamma. Segment
boundaries return the right-hand slope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WaveformRangeError",
    "Segment",
    "BiasWaveform",
    "hysteresis_protocol",
    "memory_protocol",
    "memory_region_bounds",
]


class WaveformRangeError(ValueError):
    """Evaluation time outside the waveform's domain."""


@dataclass(frozen=True)
class Segment:
    duration: float
    delta_start: float
    delta_end: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"segment duration must be > 0, got {self.duration}")

    @property
    def slope(self) -> float:
        return (self.delta_end - self.delta_start) / self.duration


@dataclass(frozen=True)
class BiasWaveform:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if len(self.segments) == 0:
            raise ValueError("waveform needs at least one segment")
        for prev, nxt in zip(self.segments[:-1], self.segments[1:]):
            if prev.delta_end != nxt.delta_start:
                raise ValueError(
                    f"discontinuous waveform: segment ends at {prev.delta_end}, "
                    f"next starts at {nxt.delta_start}"
                )

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def boundaries(self) -> np.ndarray:
        """Cumulative segment end times, starting at 0."""
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def eval(self, t: float) -> tuple[float, float]:
        """Bias and slope (d delta/dt) at time t.

        At an interior boundary the right-hand segment wins, so the
        returned slope is the right-hand derivative.
        """
        ends = self.boundaries()
        total = ends[-1]
        if t < 0.0 or t > total:
            raise WaveformRangeError(f"t={t} outside [0, {total}]")
        idx = int(np.searchsorted(ends, t, side="right")) - 1
        idx = min(idx, len(self.segments) - 1)
        seg = self.segments[idx]
        local = t - ends[idx]
        return seg.delta_start + seg.slope * local, seg.slope


def hysteresis_protocol(
    delta_min: float, delta_max: float, t_s: float, t_hold: float
) -> BiasWaveform:
    """Up-sweep, equilibration hold at delta_max, down-sweep.

    The hold should be long enough for the cell to settle; 10*T_d is the
    conventional choice. t_hold = 0 gives a plain triangle wave.
    """
    if not t_s > 0:
        raise ValueError("t_s must be > 0")
    if t_hold < 0:
        raise ValueError("t_hold must be >= 0")
    segs = [Segment(t_s, delta_min, delta_max)]
    if t_hold > 0:
        segs.append(Segment(t_hold, delta_max, delta_max))
    segs.append(Segment(t_s, delta_max, delta_min))
    return BiasWaveform(tuple(segs))


def memory_protocol(delta_amp: float, t_s: float, t_hold: float) -> BiasWaveform:
    """Write-and-hold a 1 bit, then a 0 bit.

    Four regions: (I) pulse to +delta_amp and back to zero, (II) hold at
    zero bias, (III) the mirrored pulse to -delta_amp, (IV) hold at zero.
    Retention of the polarization through regions II and IV is the memory
    figure of merit.
    """
    if delta_amp < 0:
        raise ValueError("delta_amp must be >= 0")
    if not (t_s > 0 and t_hold > 0):
        raise ValueError("t_s and t_hold must be > 0")
    a = delta_amp
    return BiasWaveform(
        (
            Segment(t_s, 0.0, a),
            Segment(t_hold, a, a),
            Segment(t_s, a, 0.0),
            Segment(t_hold, 0.0, 0.0),
            Segment(t_s, 0.0, -a),
            Segment(t_hold, -a, -a),
            Segment(t_s, -a, 0.0),
            Segment(t_hold, 0.0, 0.0),
        )
    )


def memory_region_bounds(t_s: float, t_hold: float) -> list[tuple[float, float]]:
    """(start, end) times of regions I-IV of the memory protocol."""
    r1 = 2 * t_s + t_hold
    return [
        (0.0, r1),
        (r1, r1 + t_hold),
        (r1 + t_hold, 2 * r1 + t_hold),
        (2 * r1 + t_hold, 2 * r1 + 2 * t_hold),
    ]
