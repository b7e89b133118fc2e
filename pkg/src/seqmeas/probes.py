"""Composite system+probe evolution reproducing the path statistics.

Two probe models are implemented.

Discrete gate registers: the probe for a measurement with M distinct
eigenvalues is a register of M two-level cells, all prepared down; the
impulsive coupling flips exactly the cell matching the occupied
eigenspace.  Because each register is written once and only the states
{no flip, flip m} ever occur, the register is stored compressed as an
(M+1)-level system, keeping the composite dimension at N * prod(M_l + 1).

Von Neumann pointers: continuous ancillas prepared in Gaussians of width
``width`` and displaced by the measured eigenvalue.  The joint pointer
state after the whole run is a finite superposition of products of
shifted Gaussians, one packet per outcome sequence, weighted by that
sequence's amplitude; it is kept symbolically as (shift vector,
amplitude) pairs and integrated in closed form.  Reading probabilities
assign each pointer to its nearest eigenvalue (cells bounded by
midpoints), which makes the discretised table sum to one exactly and
converge to the path table as the width shrinks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import DimensionOverflow, ValidationError
from .hilbert import Observable
from .paths import ProbabilityTable, Schedule, _final_amplitude_map

#: Hard cap on the compressed composite dimension for the gate route.
COMPOSITE_DIMENSION_CAP = 2**20


# ---------------------------------------------------------------------------
# Gaussian packet helpers
# ---------------------------------------------------------------------------

def gaussian_profile(x, center: float, width: float) -> np.ndarray:
    """Normalised Gaussian wavefunction (2/(pi w^2))^(1/4) exp(-(x-c)^2/w^2)."""
    x = np.asarray(x, dtype=float)
    norm = (2.0 / (np.pi * width**2)) ** 0.25
    return norm * np.exp(-((x - center) ** 2) / width**2)


def gaussian_overlap(a: float, b: float, width: float) -> float:
    """Inner product of two unit Gaussians centred at a and b."""
    return float(np.exp(-((a - b) ** 2) / (2.0 * width**2)))


def gaussian_cell_overlap(a, b, lo, hi, width: float):
    """Overlap of Gaussians centred at a and b restricted to [lo, hi].

    Closed form: the full-line overlap times the error-function mass of
    the product Gaussian (centred at the midpoint) inside the cell.
    Summed over a partition of the line this reproduces the full overlap.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    s = np.sqrt(2.0) / width
    hi_t = np.where(np.isinf(hi), np.sign(hi), erf(s * (hi - mid)))
    lo_t = np.where(np.isinf(lo), np.sign(lo), erf(s * (lo - mid)))
    return np.exp(-((a - b) ** 2) / (2.0 * width**2)) * 0.5 * (hi_t - lo_t)


@dataclass(frozen=True, eq=False)
class PointerState:
    """Finite superposition of shifted Gaussians of a common width."""

    shifts: np.ndarray
    amplitudes: np.ndarray
    width: float

    def __post_init__(self):
        object.__setattr__(self, "shifts", np.asarray(self.shifts, dtype=float))
        object.__setattr__(
            self, "amplitudes", np.asarray(self.amplitudes, dtype=complex)
        )
        if self.width <= 0:
            raise ValidationError("pointer width must be positive")
        if self.shifts.shape != self.amplitudes.shape or self.shifts.ndim != 1:
            raise ValidationError("shifts and amplitudes must be equal-length 1-d")

    def overlap_matrix(self) -> np.ndarray:
        d = self.shifts[:, None] - self.shifts[None, :]
        return np.exp(-(d**2) / (2.0 * self.width**2))

    def norm_squared(self) -> float:
        g = self.overlap_matrix()
        return float(np.real(self.amplitudes.conj() @ g @ self.amplitudes))

    def mean_position(self) -> float:
        """<f> of the (unnormalised) packet superposition."""
        g = self.overlap_matrix()
        mid = 0.5 * (self.shifts[:, None] + self.shifts[None, :])
        num = np.real(self.amplitudes.conj() @ (g * mid) @ self.amplitudes)
        den = np.real(self.amplitudes.conj() @ g @ self.amplitudes)
        return float(num / den)

    def profile(self, x) -> np.ndarray:
        """Position wavefunction on the given grid."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=complex)
        for shift, amp in zip(self.shifts, self.amplitudes):
            out += amp * gaussian_profile(x, shift, self.width)
        return out


# ---------------------------------------------------------------------------
# Discrete gate probes
# ---------------------------------------------------------------------------

def gate_coupling_unitary(observable: Observable) -> np.ndarray:
    """Impulsive coupling of a compressed gate register to the system.

    Acts on system (x) register, with the register in its compressed
    (M+1)-level form: level 0 means "no cell flipped", level m+1 means
    "cell m flipped".  The operator is 1j * sum_m P_m (x) S_m with S_m the
    swap of levels 0 and m+1; applied to any system state with the
    register at level 0 it writes the occupied block into the register.
    """
    m_count = observable.block_count
    dim = observable.dim
    probe_dim = m_count + 1
    total = dim * probe_dim
    out = np.zeros((total, total), dtype=complex)
    for m in range(m_count):
        swap = np.eye(probe_dim, dtype=complex)
        swap[0, 0] = swap[m + 1, m + 1] = 0.0
        swap[0, m + 1] = swap[m + 1, 0] = 1.0
        out += np.kron(observable.projectors[m], swap)
    return 1j * out


def _apply_system_operator(psi: np.ndarray, op: np.ndarray) -> np.ndarray:
    return np.tensordot(op, psi, axes=([1], [0]))


def _apply_coupling(psi: np.ndarray, coupling: np.ndarray, probe_axis: int) -> np.ndarray:
    dim = psi.shape[0]
    probe_dim = psi.shape[probe_axis]
    u4 = coupling.reshape(dim, probe_dim, dim, probe_dim)
    moved = np.moveaxis(psi, probe_axis, 1)
    res = np.tensordot(u4, moved, axes=([2, 3], [0, 1]))
    return np.moveaxis(res, 1, probe_axis)


def run_composite_gates(schedule: Schedule) -> ProbabilityTable:
    """Record statistics from the unbroken unitary evolution with gate probes.

    One register per measurement is coupled at its time; in between, only
    the system evolves.  At the end the registers are read in their flip
    basis and the final system state is summed over.  The resulting table
    matches the path-amplitude table entry for entry.
    """
    obs = schedule.observables
    dims = [schedule.dim] + [o.block_count + 1 for o in obs]
    total = int(np.prod(dims, dtype=np.int64))
    if total > COMPOSITE_DIMENSION_CAP:
        raise DimensionOverflow(
            f"composite dimension {total} exceeds cap {COMPOSITE_DIMENSION_CAP}"
        )

    psi = np.zeros(dims, dtype=complex)
    prep_slot = (slice(None),) + (0,) * (schedule.level_count + 1)
    psi[prep_slot] = schedule.prep_state

    couplings = [gate_coupling_unitary(o) for o in obs]
    psi = _apply_coupling(psi, couplings[0], probe_axis=1)
    props = schedule.interval_propagators()
    for level in range(1, schedule.level_count + 1):
        psi = _apply_system_operator(psi, props[level - 1])
        psi = _apply_coupling(psi, couplings[level], probe_axis=level + 1)

    weights = np.abs(psi) ** 2
    record_probs = weights.sum(axis=0)
    entries: dict[tuple[int, ...], float] = {}
    for record in itertools.product(*[range(1, d) for d in dims[1:]]):
        entries[tuple(k - 1 for k in record)] = float(record_probs[record])
    return ProbabilityTable(entries, source="composite-gate")


# ---------------------------------------------------------------------------
# Von Neumann pointers
# ---------------------------------------------------------------------------

def _broadcast_widths(schedule: Schedule, widths) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(widths, dtype=float))
    if arr.size == 1:
        arr = np.full(schedule.level_count + 1, arr[0])
    if arr.size != schedule.level_count + 1:
        raise ValidationError(
            f"need one width per measurement ({schedule.level_count + 1}), got {arr.size}"
        )
    if np.any(arr <= 0):
        raise ValidationError("pointer widths must be positive")
    return arr


def _pointer_packets(schedule: Schedule):
    """Packets of the joint pointer state, grouped by final basis vector.

    Returns (block_arrays, amp_arrays): for every final basis vector n, an
    integer array (P, L+1) of eigenvalue-block labels (the packet's shift
    is the corresponding eigenvalue per pointer) and the (P,) complex
    amplitudes.  Packets with different n belong to orthogonal system
    states and never interfere.  Within one n, packets are already binned:
    a block-label tuple appears exactly once.
    """
    obs = schedule.observables
    amp_map = _final_amplitude_map(schedule)
    mids_list = list(amp_map.keys())
    amp_matrix = np.array([amp_map[m] for m in mids_list])  # (P, N)
    prep = schedule.prep_block
    final_blocks = obs[-1].block_index
    blocks = np.array(
        [(prep, *mids) for mids in mids_list], dtype=int
    )  # (P, L) without final column
    per_final = []
    for n in range(schedule.dim):
        cols = np.concatenate(
            [blocks, np.full((len(mids_list), 1), final_blocks[n], dtype=int)],
            axis=1,
        )
        per_final.append((cols, amp_matrix[:, n]))
    return per_final


def pointer_kick_decomposition(schedule: Schedule, widths) -> ProbabilityTable:
    """Discretised reading statistics of impulsive Gaussian pointers.

    ``widths`` is a scalar or one width per measurement.  Every pointer is
    read and decoded to the nearest eigenvalue of its observable; the cell
    integrals are evaluated in closed form, so the table sums to one
    exactly.  Narrow pointers reproduce the path table; wide ones leak
    probability across cells and preserve interference between sequences.
    """
    w = _broadcast_widths(schedule, widths)
    obs = schedule.observables
    n_meas = schedule.level_count + 1

    # Per measurement: cell factor tables F[b, b', cell].
    factors = []
    for level in range(n_meas):
        vals = obs[level].eigenvalues
        edges = np.concatenate([[-np.inf], 0.5 * (vals[1:] + vals[:-1]), [np.inf]])
        m = len(vals)
        f = np.empty((m, m, m))
        for c in range(m):
            f[:, :, c] = gaussian_cell_overlap(
                vals[:, None], vals[None, :], edges[c], edges[c + 1], w[level]
            )
        factors.append(f)

    entries: dict[tuple[int, ...], float] = {}
    outcome_ranges = [range(o.block_count) for o in obs]
    for cols, amps in _pointer_packets(schedule):
        if not len(amps):
            continue
        pair = np.outer(amps.conj(), amps)  # (P, P)
        # Pull the per-measurement factor matrices down to packet pairs.
        per_level = [
            factors[level][np.ix_(cols[:, level], cols[:, level])]
            for level in range(n_meas)
        ]
        for key in itertools.product(*outcome_ranges):
            weight = pair.copy()
            for level in range(n_meas):
                weight *= per_level[level][:, :, key[level]]
            p = float(np.real(weight.sum()))
            entries[key] = entries.get(key, 0.0) + p
    return ProbabilityTable(entries, source="composite-pointer")


def pointer_final_state_marginal(schedule: Schedule, widths) -> dict[int, float]:
    """Distribution of the final system outcome under pointer coupling.

    Obtained from the composite state by projecting the system alone (no
    pointer readout), so it shows the kick-induced perturbation: for very
    wide pointers the intermediate couplings do not disturb the system and
    the distribution tends to the no-intermediate-measurement one.
    """
    w = _broadcast_widths(schedule, widths)
    obs = schedule.observables
    final_blocks = obs[-1].block_index
    out = {b: 0.0 for b in range(obs[-1].block_count)}
    for n, (cols, amps) in enumerate(_pointer_packets(schedule)):
        if not len(amps):
            continue
        g = np.ones((len(amps), len(amps)))
        for level in range(schedule.level_count + 1):
            vals = obs[level].eigenvalues[cols[:, level]]
            d = vals[:, None] - vals[None, :]
            g *= np.exp(-(d**2) / (2.0 * w[level] ** 2))
        p = float(np.real(amps.conj() @ g @ amps))
        out[int(final_blocks[n])] += p
    return out
