"""Outcome statistics for sequences of projective measurements.

A `Schedule` fixes the measured observables, the strictly increasing
measurement times, the Hamiltonian driving the system in between, and the
outcome of the preparing (first) measurement.  Each sequence of observed
eigenvalues is assigned a probability by summing complex amplitudes over
everything a record cannot distinguish (the eigenvectors inside a
degenerate intermediate eigenvalue) and summing probabilities over
everything it can: amplitudes ending in orthogonal final states never
interfere, even when the final eigenvalue is degenerate.

Two algebraically equivalent routes are implemented:

* ``sum``: per outcome sequence, accumulate the projected amplitude onto
  every final basis vector and add the squared magnitudes over the final
  eigenvalue block;
* ``chain``: per outcome sequence, apply the Heisenberg-picture projector
  chain to the prepared state and take the squared norm.

Both must agree to near machine precision; tests enforce it.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import BadInterval, ValidationError
from .hilbert import Evolution, Observable

#: Largest number of intermediate virtual paths the exhaustive summation
#: route will enumerate; larger schedules must use the chain route.
PATH_ENUMERATION_CAP = 10**6


@dataclass(frozen=True, eq=False)
class Schedule:
    """Measurement plan: times, observables, driving Hamiltonian, preparation.

    ``observables[0]`` must be non-degenerate: its outcome ``prep_index``
    pins the initial state to a single basis vector, which is what makes
    the amplitude calculus well posed.
    """

    times: tuple[float, ...]
    observables: tuple[Observable, ...]
    evolution: Evolution
    prep_index: int

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "observables", tuple(self.observables))
        if len(times) < 2:
            raise ValidationError("a schedule needs at least two measurement times")
        if len(self.observables) != len(times):
            raise ValidationError(
                f"{len(times)} times require {len(times)} observables, "
                f"got {len(self.observables)}"
            )
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValidationError("measurement times must be strictly increasing")
        dims = {obs.dim for obs in self.observables}
        if len(dims) != 1:
            raise ValidationError(f"observables act on mixed dimensions {sorted(dims)}")
        (dim,) = dims
        if self.evolution.dim != dim:
            raise ValidationError(
                f"evolution dimension {self.evolution.dim} != system dimension {dim}"
            )
        if not self.observables[0].is_nondegenerate:
            raise ValidationError("the preparing observable must be non-degenerate")
        if not 0 <= self.prep_index < dim:
            raise ValidationError(
                f"prep_index {self.prep_index} outside [0, {dim})"
            )

    @property
    def dim(self) -> int:
        return self.observables[0].dim

    @property
    def level_count(self) -> int:
        """Number of intervals L; there are L+1 measurements."""
        return len(self.times) - 1

    @property
    def prep_block(self) -> int:
        """Eigenvalue-block index of the prepared outcome (equals prep_index
        for a non-degenerate first observable in canonical order)."""
        return int(self.observables[0].block_index[self.prep_index])

    @property
    def outcome_shape(self) -> tuple[int, ...]:
        """Number of distinct eigenvalues of each observable."""
        return tuple(obs.block_count for obs in self.observables)

    @property
    def prep_state(self) -> np.ndarray:
        return self.observables[0].basis[:, self.prep_index]

    def interval_propagators(self) -> list[np.ndarray]:
        """U(t_{l+1}, t_l) for each of the L intervals."""
        return [
            self.evolution.propagator(self.times[i], self.times[i + 1])
            for i in range(self.level_count)
        ]

    def outcome_space(self) -> Iterator[tuple[int, ...]]:
        """All outcome sequences with the prepared first entry, in
        lexicographic order."""
        ranges = [range(m) for m in self.outcome_shape[1:]]
        for rest in itertools.product(*ranges):
            yield (self.prep_block, *rest)


@dataclass(eq=False)
class ProbabilityTable:
    """Probabilities keyed by outcome sequence, with a provenance tag."""

    entries: dict[tuple[int, ...], float]
    source: str

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def __getitem__(self, key) -> float:
        return self.entries.get(tuple(key), 0.0)

    def max_abs_diff(self, other: "ProbabilityTable | Mapping") -> float:
        """Largest entry-wise deviation; missing keys count as zero."""
        entries = other.entries if isinstance(other, ProbabilityTable) else other
        keys = set(self.entries) | set(entries)
        return max(
            abs(self.entries.get(k, 0.0) - entries.get(k, 0.0)) for k in keys
        )

    def tv_distance(self, other: "ProbabilityTable | Mapping") -> float:
        """Total variation distance, 0.5 * sum of absolute differences."""
        entries = other.entries if isinstance(other, ProbabilityTable) else other
        keys = set(self.entries) | set(entries)
        return 0.5 * sum(
            abs(self.entries.get(k, 0.0) - entries.get(k, 0.0)) for k in keys
        )

    def collapsed(self, position: int) -> "ProbabilityTable":
        """Marginalise out the outcome at ``position``."""
        out: dict[tuple[int, ...], float] = {}
        for key, p in self.entries.items():
            reduced = key[:position] + key[position + 1 :]
            out[reduced] = out.get(reduced, 0.0) + p
        return ProbabilityTable(out, source=self.source)

    def final_marginal(self) -> dict[int, float]:
        """Distribution of the last outcome in the sequence."""
        out: dict[int, float] = {}
        for key, p in self.entries.items():
            out[key[-1]] = out.get(key[-1], 0.0) + p
        return out


def virtual_amplitude(schedule: Schedule, path: Iterable[int]) -> complex:
    """Amplitude of one eigenvector-level path n_0 ... n_L.

    The product of transition matrix elements of the interval propagators
    between consecutive basis vectors.  Basis-gauge dependent inside
    degenerate blocks; only block-grouped sums of these are observable.
    """
    indices = tuple(int(n) for n in path)
    if len(indices) != schedule.level_count + 1:
        raise ValidationError(
            f"path length {len(indices)} != {schedule.level_count + 1}"
        )
    dim = schedule.dim
    if any(not 0 <= n < dim for n in indices):
        raise ValidationError("path index outside [0, dim)")
    amp = 1.0 + 0.0j
    props = schedule.interval_propagators()
    for level, u in enumerate(props):
        bra = schedule.observables[level + 1].basis[:, indices[level + 1]]
        ket = schedule.observables[level].basis[:, indices[level]]
        amp *= bra.conj() @ u @ ket
    return complex(amp)


def _validate_outcome(schedule: Schedule, outcome) -> tuple[int, ...]:
    key = tuple(int(m) for m in outcome)
    if len(key) != schedule.level_count + 1:
        raise ValidationError(
            f"outcome length {len(key)} != {schedule.level_count + 1}"
        )
    for level, m in enumerate(key):
        if not 0 <= m < schedule.outcome_shape[level]:
            raise ValidationError(
                f"outcome index {m} at position {level} outside "
                f"[0, {schedule.outcome_shape[level]})"
            )
    if key[0] != schedule.prep_block:
        raise ValidationError(
            f"outcome starts at block {key[0]}, schedule prepares {schedule.prep_block}"
        )
    return key


def elementary_amplitude(schedule: Schedule, outcome, final_n: int) -> complex:
    """Amplitude of an outcome sequence ending in final basis vector ``final_n``.

    Intermediate outcomes enter only through their eigen-projectors, so the
    value is independent of any basis choice inside degenerate blocks.  The
    last entry of ``outcome`` must be the block containing ``final_n``.
    """
    key = _validate_outcome(schedule, outcome)
    obs_l = schedule.observables[-1]
    if int(obs_l.block_index[final_n]) != key[-1]:
        raise ValidationError(
            f"final vector {final_n} lies in block {obs_l.block_index[final_n]}, "
            f"outcome says {key[-1]}"
        )
    props = schedule.interval_propagators()
    state = schedule.prep_state
    for level in range(1, schedule.level_count):
        state = props[level - 1] @ state
        state = schedule.observables[level].projectors[key[level]] @ state
    state = props[-1] @ state
    return complex(obs_l.basis[:, final_n].conj() @ state)


def _final_amplitude_map(
    schedule: Schedule,
) -> dict[tuple[int, ...], np.ndarray]:
    """For every intermediate outcome tuple, the amplitudes onto every
    final basis vector (an (N,) array)."""
    obs = schedule.observables
    levels = schedule.level_count
    props = schedule.interval_propagators()
    final_dag = obs[-1].basis.conj().T
    out: dict[tuple[int, ...], np.ndarray] = {}
    mid_ranges = [range(obs[level].block_count) for level in range(1, levels)]
    for mids in itertools.product(*mid_ranges):
        state = schedule.prep_state
        for level, m in enumerate(mids, start=1):
            state = obs[level].projectors[m] @ (props[level - 1] @ state)
        state = props[-1] @ state
        out[mids] = final_dag @ state
    return out


def probability_table(schedule: Schedule, method: str = "auto") -> ProbabilityTable:
    """Probabilities of every outcome sequence of the schedule.

    ``method`` is ``"sum"`` (exhaustive amplitude summation), ``"chain"``
    (Heisenberg projector chain) or ``"auto"``, which picks the summation
    route up to :data:`PATH_ENUMERATION_CAP` intermediate paths and the
    chain route beyond.
    """
    n_paths = schedule.dim ** max(schedule.level_count - 1, 0)
    if method == "auto":
        method = "sum" if n_paths <= PATH_ENUMERATION_CAP else "chain"
    if method == "sum" and n_paths > PATH_ENUMERATION_CAP:
        raise ValidationError(
            f"{n_paths} intermediate paths exceed the enumeration cap "
            f"{PATH_ENUMERATION_CAP}; use the chain route"
        )
    if method == "sum":
        entries = _table_by_summation(schedule)
    elif method == "chain":
        entries = _table_by_chain(schedule)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return ProbabilityTable(entries, source="path-amplitude")


def _table_by_summation(schedule: Schedule) -> dict[tuple[int, ...], float]:
    obs_l = schedule.observables[-1]
    amp_map = _final_amplitude_map(schedule)
    block_cols = [obs_l.block_columns(b) for b in range(obs_l.block_count)]
    entries: dict[tuple[int, ...], float] = {}
    prep = schedule.prep_block
    for mids, amps in amp_map.items():
        weights = np.abs(amps) ** 2
        for b, cols in enumerate(block_cols):
            entries[(prep, *mids, b)] = float(weights[cols].sum())
    return entries


def _table_by_chain(schedule: Schedule) -> dict[tuple[int, ...], float]:
    # Heisenberg-picture projectors referred to the preparation time.
    t0 = schedule.times[0]
    heis: list[list[np.ndarray]] = []
    for level in range(1, schedule.level_count + 1):
        u = schedule.evolution.propagator(t0, schedule.times[level])
        u_dag = u.conj().T
        heis.append([u_dag @ p @ u for p in schedule.observables[level].projectors])
    entries: dict[tuple[int, ...], float] = {}
    for key in schedule.outcome_space():
        vec = schedule.prep_state
        for level, m in enumerate(key[1:]):
            vec = heis[level][m] @ vec
        entries[key] = float(np.vdot(vec, vec).real)
    return entries


def sample_outcomes(
    schedule: Schedule, trials: int, seed: int
) -> dict[tuple[int, ...], float]:
    """Empirical outcome frequencies from ``trials`` i.i.d. draws.

    Sampling is inverse-CDF over the lexicographic ordering of outcome
    sequences, so results are reproducible for a given seed.  Frequencies
    sum to one exactly.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    table = probability_table(schedule)
    keys = sorted(table.entries)
    probs = np.array([table.entries[k] for k in keys])
    cdf = np.cumsum(probs)
    cdf[-1] = max(cdf[-1], 1.0)
    rng = np.random.default_rng(seed)
    draws = np.searchsorted(cdf, rng.random(trials), side="right")
    draws = np.minimum(draws, len(keys) - 1)
    counts = np.bincount(draws, minlength=len(keys))
    return {k: counts[i] / trials for i, k in enumerate(keys)}


def insert_observable(
    schedule: Schedule, observable: Observable, time: float
) -> tuple[Schedule, int]:
    """Schedule with an extra measurement of ``observable`` at ``time``.

    ``time`` must be strictly between the first and last existing times and
    must not collide with any of them.  Returns the new schedule and the
    position of the inserted outcome in its outcome sequences.
    """
    if observable.dim != schedule.dim:
        raise ValidationError(
            f"inserted observable dimension {observable.dim} != {schedule.dim}"
        )
    times = schedule.times
    if not times[0] < time < times[-1]:
        raise BadInterval(
            f"insertion time {time} outside the open span ({times[0]}, {times[-1]})"
        )
    if any(abs(time - t) == 0.0 for t in times):
        raise BadInterval(f"insertion time {time} collides with an existing time")
    pos = bisect.bisect_left(times, time)
    new_times = times[:pos] + (time,) + times[pos:]
    new_obs = schedule.observables[:pos] + (observable,) + schedule.observables[pos:]
    augmented = Schedule(
        times=new_times,
        observables=new_obs,
        evolution=schedule.evolution,
        prep_index=schedule.prep_index,
    )
    return augmented, pos
