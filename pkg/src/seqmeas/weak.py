"""Weakly coupled probes inserted between scheduled measurements.

A weak gate register couples with strength gamma instead of pi/2.  The
evolution then splits exactly into two orthogonal branches: with
amplitude factor cos(gamma) the register keeps its initial state and the
run is indistinguishable from one without the extra probe; with factor
sin(gamma) the register fires and records an eigenvalue exactly as a
full-strength probe would.  The observable statistics are therefore an
exact two-component mixture at every strength, whose small-gamma form is
(1 - gamma^2) * undetected + gamma^2 * detected + o(gamma^2).

A weak pointer couples a Gaussian ancilla with strength gamma.
Conditioned on the outcomes of the accurate measurements, its final state
is a superposition of slightly shifted Gaussians weighted by the
sequence amplitudes with each eigenvalue of the probed operator inserted.
The mean reading, in units of gamma, tends to the real part of the ratio
(sum of eigenvalue-weighted amplitudes) / (sum of amplitudes) as the
coupling vanishes; the module returns both the exact finite-coupling mean
and that limiting ratio.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, ZeroDenominator
from .hilbert import Observable
from .paths import (
    ProbabilityTable,
    Schedule,
    elementary_amplitude,
    insert_observable,
    probability_table,
)
from .probes import PointerState

_AMPLITUDE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class WeakGateConfig:
    """One weak gate register: probed observable, insertion time, strength."""

    observable: Observable
    time: float
    strength: float

    def __post_init__(self):
        if not 0.0 < self.strength <= math.pi / 2.0 + 1e-15:
            raise ValidationError(
                f"gate strength {self.strength} outside (0, pi/2]"
            )


@dataclass(frozen=True, eq=False)
class WeakPointerConfig:
    """One weak pointer: probed observable, insertion time, strength, width."""

    observable: Observable
    time: float
    strength: float
    width: float

    def __post_init__(self):
        if self.strength <= 0:
            raise ValidationError("pointer strength must be positive")
        if self.width <= 0:
            raise ValidationError("pointer width must be positive")


@dataclass(eq=False)
class WeakGateSplit:
    """Exact branch decomposition produced by one weak gate."""

    detected: ProbabilityTable
    undetected: ProbabilityTable
    combined_final: dict[int, float]
    combined_sequences: ProbabilityTable
    insert_position: int


@dataclass(frozen=True)
class WeakValueReport:
    """Conditional weak-pointer reading and the amplitude ratio behind it."""

    conditioning: tuple[int, ...]
    mean_reading: float
    amplitude_numerator: complex
    amplitude_denominator: complex
    imag_part: float  # diagnostic only; no contract attaches to it
    exact_mean: float  # finite-coupling mean reading in units of the strength
    strength: float
    width: float


def weak_gate_distribution(schedule: Schedule, config: WeakGateConfig) -> WeakGateSplit:
    """Exact statistics with one weak gate register added to the schedule.

    ``detected`` is the table over augmented outcome sequences (the probe
    fired and recorded an eigenvalue), carrying total weight sin^2(gamma);
    ``undetected`` is the original table scaled by cos^2(gamma).  The
    combined distributions add the detected table with its extra index
    marginalised out.  All three are exact at any strength.
    """
    augmented, pos = insert_observable(schedule, config.observable, config.time)
    base = probability_table(schedule)
    aug = probability_table(augmented)
    c2 = math.cos(config.strength) ** 2
    s2 = math.sin(config.strength) ** 2

    detected = ProbabilityTable(
        {k: s2 * v for k, v in aug.entries.items()}, source="weak-gate-detected"
    )
    undetected = ProbabilityTable(
        {k: c2 * v for k, v in base.entries.items()}, source="weak-gate-undetected"
    )
    aug_collapsed = aug.collapsed(pos)
    combined_entries = {
        k: c2 * base.entries.get(k, 0.0) + s2 * aug_collapsed.entries.get(k, 0.0)
        for k in set(base.entries) | set(aug_collapsed.entries)
    }
    combined = ProbabilityTable(combined_entries, source="weak-gate-combined")
    base_final = base.final_marginal()
    aug_final = aug.final_marginal()
    combined_final = {
        m: c2 * base_final.get(m, 0.0) + s2 * aug_final.get(m, 0.0)
        for m in set(base_final) | set(aug_final)
    }
    return WeakGateSplit(
        detected=detected,
        undetected=undetected,
        combined_final=combined_final,
        combined_sequences=combined,
        insert_position=pos,
    )


def weak_gates_final_distribution(
    schedule: Schedule, configs: list[WeakGateConfig]
) -> dict[int, float]:
    """Exact final-outcome distribution with several weak gates inserted.

    The registers fire independently, so the distribution is the weighted
    sum over all fired/unfired patterns of the correspondingly augmented
    schedules.  Insertion times must be distinct and interior.
    """
    if len({c.time for c in configs}) != len(configs):
        raise ValidationError("weak gate insertion times must be distinct")
    out: dict[int, float] = {}
    for pattern in itertools.product((0, 1), repeat=len(configs)):
        weight = 1.0
        current = schedule
        for fired, cfg in sorted(
            zip(pattern, configs), key=lambda fc: fc[1].time
        ):
            if fired:
                weight *= math.sin(cfg.strength) ** 2
                current, _ = insert_observable(current, cfg.observable, cfg.time)
            else:
                weight *= math.cos(cfg.strength) ** 2
        for m, p in probability_table(current).final_marginal().items():
            out[m] = out.get(m, 0.0) + weight * p
    return out


def weak_pointer_mean(
    schedule: Schedule, config: WeakPointerConfig, conditioning
) -> WeakValueReport:
    """Mean reading of one weak pointer, conditioned on the other outcomes.

    ``conditioning`` is a full outcome sequence of the original schedule;
    its final entry must be a non-degenerate eigenvalue so the conditioned
    final state is a single basis vector.  Raises
    :class:`ZeroDenominator` when the conditional amplitude sum vanishes
    (e.g. conditioning on a zero-probability branch).
    """
    key = tuple(int(m) for m in conditioning)
    augmented, pos = insert_observable(schedule, config.observable, config.time)
    obs_last = schedule.observables[-1]
    if len(key) != schedule.level_count + 1:
        raise ValidationError(
            f"conditioning length {len(key)} != {schedule.level_count + 1}"
        )
    if int(obs_last.multiplicities[key[-1]]) != 1:
        raise ValidationError(
            "conditioning requires a non-degenerate final outcome"
        )
    final_n = int(obs_last.block_columns(key[-1])[0])

    probed = config.observable
    amps = np.empty(probed.block_count, dtype=complex)
    for m_prime in range(probed.block_count):
        aug_key = key[:pos] + (m_prime,) + key[pos:]
        amps[m_prime] = elementary_amplitude(augmented, aug_key, final_n)

    denominator = complex(amps.sum())
    numerator = complex((probed.eigenvalues * amps).sum())
    if abs(denominator) < _AMPLITUDE_FLOOR * max(1.0, float(np.abs(amps).max())):
        raise ZeroDenominator(
            "conditional amplitude sum vanishes; the mean reading is undefined"
        )
    ratio = numerator / denominator

    pointer = PointerState(
        shifts=config.strength * probed.eigenvalues,
        amplitudes=amps,
        width=config.width,
    )
    exact_mean = pointer.mean_position() / config.strength

    return WeakValueReport(
        conditioning=key,
        mean_reading=float(ratio.real),
        amplitude_numerator=numerator,
        amplitude_denominator=denominator,
        imag_part=float(ratio.imag),
        exact_mean=float(exact_mean),
        strength=config.strength,
        width=config.width,
    )
