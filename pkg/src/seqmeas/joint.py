"""Overlapping measurements of two non-commuting qubit observables.

Both measurements last one unit of time; the signed parameter ``beta``
in [-1, 1] sets how much they overlap: at beta = 1 the first observable
is measured strictly before the second, at beta = -1 strictly after, and
at beta = 0 the couplings coincide.  The evolution factorises into three
segments (first meter alone, both together, second meter alone) whose
weights are |beta|, 1 - |beta|, |beta|, so either endpoint reproduces two
sequential impulsive measurements.

Two meter models are provided.  Two-level gate meters flip conditionally
on the "2" eigenspace of their observable; the three segment exponentials
are evaluated exactly by expanding the meters in the flip-operator
eigenbasis, where each sector reduces to a 2x2 system exponential.
Gaussian-pointer meters displace a continuous reading by the eigenvalue
(+1 or -1); the overlapping segment is evolved as a two-pointer quantum
walk on a shift lattice (a Trotter product with an even number of steps),
while the non-overlapping segments are single exact shifts.

For fully overlapping pointer meters the post-selected reading amplitude
also has a closed form: a Hankel-type radial integral damped by the
Gaussian width, with the reading density singular on the unit circle in
the accurate limit.  The implementation carries an angular factor
sqrt(2) * cos(theta - pi/4) multiplying the J1 term; this was re-derived
from the momentum-representation integral and validated against the walk
route, which is the behaviour the distribution actually shows (readings
biased toward the (+, +) corner).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import j0, j1

from .errors import (
    PostSelectionImpossible,
    QuadratureNotConverged,
    ValidationError,
)
from .hilbert import expi_hermitian

_PROJECTOR_TOL = 1e-10


def _unit_qubit_state(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    if v.shape != (2,):
        raise ValidationError("joint setups are qubit-only: states must have dim 2")
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-10:
        raise ValidationError(f"state norm {n} != 1")
    return v


def _projector_pair(pair) -> np.ndarray:
    arr = np.asarray(pair, dtype=complex)
    if arr.shape != (2, 2, 2):
        raise ValidationError("a projector pair must be two 2x2 matrices")
    eye = np.eye(2)
    if np.linalg.norm(arr[0] + arr[1] - eye) > _PROJECTOR_TOL:
        raise ValidationError("projector pair is not complete")
    for p in arr:
        if np.linalg.norm(p @ p - p) > _PROJECTOR_TOL or np.linalg.norm(
            p - p.conj().T
        ) > _PROJECTOR_TOL:
            raise ValidationError("entries must be orthogonal projectors")
    if np.linalg.norm(arr[0] @ arr[1]) > _PROJECTOR_TOL:
        raise ValidationError("projector pair is not orthogonal")
    return arr


@dataclass(frozen=True, eq=False)
class JointGateSetup:
    """Two gate meters on one qubit: preparation, post-selection, overlap.

    ``projectors_first`` belongs to the meter that acts alone at the start
    for beta > 0 (canonically the preparation basis), ``projectors_second``
    to the other one.  Index 0 of each pair is the outcome labelled 1.
    """

    prep: np.ndarray
    post: np.ndarray
    projectors_first: np.ndarray
    projectors_second: np.ndarray
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "prep", _unit_qubit_state(self.prep))
        object.__setattr__(self, "post", _unit_qubit_state(self.post))
        object.__setattr__(
            self, "projectors_first", _projector_pair(self.projectors_first)
        )
        object.__setattr__(
            self, "projectors_second", _projector_pair(self.projectors_second)
        )
        if not -1.0 <= self.beta <= 1.0:
            raise ValidationError(f"beta {self.beta} outside [-1, 1]")

    @classmethod
    def from_pre_post(cls, prep, post, beta: float) -> "JointGateSetup":
        """Canonical setup: meter one checks the preparation basis, meter
        two the post-selection basis."""
        prep = _unit_qubit_state(prep)
        post = _unit_qubit_state(post)
        eye = np.eye(2)
        p1 = np.outer(prep, prep.conj())
        q1 = np.outer(post, post.conj())
        return cls(
            prep=prep,
            post=post,
            projectors_first=np.array([p1, eye - p1]),
            projectors_second=np.array([q1, eye - q1]),
            beta=float(beta),
        )

    def operator_first(self) -> np.ndarray:
        """The +/-1-valued observable measured by meter one."""
        return self.projectors_first[0] - self.projectors_first[1]

    def operator_second(self) -> np.ndarray:
        return self.projectors_second[0] - self.projectors_second[1]


@dataclass(frozen=True, eq=False)
class JointPointerSetup(JointGateSetup):
    """Gate setup plus the pointer width and the walk step count."""

    width: float = 0.05
    steps: int = 64

    def __post_init__(self):
        super().__post_init__()
        if self.width <= 0:
            raise ValidationError("pointer width must be positive")
        if self.steps < 2 or self.steps % 2 != 0:
            raise ValidationError("steps must be an even positive integer")

    @classmethod
    def from_pre_post(
        cls, prep, post, beta: float, *, width: float = 0.05, steps: int = 64
    ) -> "JointPointerSetup":
        base = JointGateSetup.from_pre_post(prep, post, beta)
        return cls(
            prep=base.prep,
            post=base.post,
            projectors_first=base.projectors_first,
            projectors_second=base.projectors_second,
            beta=beta,
            width=width,
            steps=steps,
        )


# ---------------------------------------------------------------------------
# Gate meters
# ---------------------------------------------------------------------------

def gate_joint_probabilities(setup: JointGateSetup) -> np.ndarray:
    """The four post-selected outcome probabilities P[i, j], i, j in {0, 1}.

    Index 0 means the meter stayed in its initial state (outcome 1), index
    1 that it flipped (outcome 2).  Probabilities are renormalised over
    the post-selected branch and sum to one; if every branch amplitude
    vanishes, post-selection is impossible and an error is raised.
    """
    t = abs(setup.beta)
    w = 1.0 - t
    p2_first = setup.projectors_first[1]
    p2_second = setup.projectors_second[1]

    amps = np.zeros((2, 2), dtype=complex)
    for lam_f, lam_s in itertools.product((1.0, -1.0), repeat=2):
        solo_first = expi_hermitian(p2_first, math.pi * lam_f * t / 2.0)
        solo_second = expi_hermitian(p2_second, math.pi * lam_s * t / 2.0)
        joint = expi_hermitian(
            lam_f * p2_first + lam_s * p2_second, math.pi * w / 2.0
        )
        if setup.beta >= 0:
            m = solo_second @ joint @ solo_first
        else:
            m = solo_first @ joint @ solo_second
        u = setup.post.conj() @ m @ setup.prep
        # Meter eigenstates (|1> + lam |2>)/sqrt(2): outcome overlap is
        # 1/sqrt(2) for "stay", lam/sqrt(2) for "flip"; initial expansion
        # contributes another 1/2.
        for i, j in itertools.product(range(2), repeat=2):
            amps[i, j] += 0.25 * u * (lam_f**i) * (lam_s**j)

    probs = np.abs(amps) ** 2
    total = probs.sum()
    if total <= 1e-20:
        raise PostSelectionImpossible(
            "all four post-selected branch amplitudes vanish"
        )
    return probs / total


# ---------------------------------------------------------------------------
# Pointer meters: shift-lattice walk
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PacketGrid:
    """Amplitudes on a rectangular lattice of pointer shifts."""

    first_shifts: np.ndarray
    second_shifts: np.ndarray
    amplitudes: np.ndarray


def _eigbasis(projector_pair):
    """Basis columns [minus, plus] and values (-1, +1) of P1 - P2."""
    op = projector_pair[0] - projector_pair[1]
    _, vecs = np.linalg.eigh(op)
    return vecs  # column 0: eigenvalue -1, column 1: +1


def _walk(spinor0: np.ndarray, steps: int, basis_a, basis_b) -> np.ndarray:
    """Alternating two-pointer walk; returns (steps+1, steps+1, 2) spinors.

    Axis 0 counts the +1 sub-steps of the first pointer, axis 1 of the
    second; after S steps the shift along an axis with count i is
    (2 i - S) sub-step lengths.  The state is carried in the eigenbasis of
    whichever observable acts next, so each sub-step is a pure lattice
    shift of the +1 component followed by one 2x2 change of basis.
    """
    if steps == 0:
        state = np.zeros((1, 1, 2), dtype=complex)
        state[0, 0] = spinor0
        return state
    to_b = basis_a.T @ basis_b.conj()  # a-components -> b-components
    to_a = to_b.conj().T
    cur = spinor0 @ basis_a.conj()  # a-components, extent 1x1
    cur = cur.reshape(1, 1, 2)
    for t in range(steps):
        n = t + 2
        new = np.zeros((n, n, 2), dtype=complex)
        new[:-1, :-1, 0] = cur[..., 0]  # -1 branch keeps its count
        new[1:, :-1, 1] = cur[..., 1]  # +1 branch advances along axis 0
        cur = new @ to_b
        new = np.zeros_like(cur)
        new[:, :, 0] = cur[..., 0]
        new[:, 1:, 1] = cur[:, :-1, 1]
        cur = new @ to_a
    state = cur @ basis_a.T  # back to the computational basis
    return state


def pointer_joint_packets(setup: JointPointerSetup) -> list[PacketGrid]:
    """Post-selected reading amplitudes before Gaussian smearing.

    The overlap segment runs the walk for steps - floor(|beta| * steps)
    sub-steps; the solo segments are single exact shifts of the remaining
    weight.  Each returned grid holds the complex amplitude for the
    readings (first_shifts[i], second_shifts[j]).
    """
    k_total = setup.steps
    solo_steps = int(math.floor(abs(setup.beta) * k_total + 1e-12))
    walk_steps = k_total - solo_steps
    h = 1.0 / k_total
    solo_shift = solo_steps * h

    basis_first = _eigbasis(setup.projectors_first)
    basis_second = _eigbasis(setup.projectors_second)
    values = (-1.0, +1.0)

    if setup.beta >= 0:
        pre_basis, pre_axis = basis_first, 0
        post_basis, post_axis = basis_second, 1
    else:
        pre_basis, pre_axis = basis_second, 1
        post_basis, post_axis = basis_first, 0

    # Pre-segment: exact shift of the pre meter, splitting the state.
    branches: list[tuple[float, np.ndarray]] = []
    if solo_steps == 0:
        branches.append((0.0, setup.prep))
    else:
        for k in (0, 1):
            coef = pre_basis[:, k].conj() @ setup.prep
            if abs(coef) == 0.0:
                continue
            branches.append((values[k] * solo_shift, coef * pre_basis[:, k]))

    packets: list[PacketGrid] = []
    lattice = (2.0 * np.arange(walk_steps + 1) - walk_steps) * h
    for pre_offset, spinor in branches:
        state = _walk(spinor, walk_steps, basis_first, basis_second)
        # Post-segment: exact shift of the post meter, then post-selection.
        post_splits: list[tuple[float, np.ndarray]] = []
        if solo_steps == 0:
            post_splits.append((0.0, state @ setup.post.conj()))
        else:
            for k in (0, 1):
                weight = setup.post.conj() @ post_basis[:, k]
                if abs(weight) == 0.0:
                    continue
                comp = state @ post_basis[:, k].conj()
                post_splits.append((values[k] * solo_shift, weight * comp))
        for post_offset, amp in post_splits:
            offsets = [0.0, 0.0]
            offsets[pre_axis] += pre_offset
            offsets[post_axis] += post_offset
            packets.append(
                PacketGrid(
                    first_shifts=lattice + offsets[0],
                    second_shifts=lattice + offsets[1],
                    amplitudes=amp,
                )
            )
    return packets


def pointer_joint_amplitude(
    setup: JointPointerSetup, first_readings, second_readings
) -> np.ndarray:
    """Post-selected joint reading amplitude on a rectangular grid."""
    f1 = np.asarray(first_readings, dtype=float)
    f2 = np.asarray(second_readings, dtype=float)
    psi = np.zeros((f1.size, f2.size), dtype=complex)
    for packet in pointer_joint_packets(setup):
        g1 = _profile_matrix(f1, packet.first_shifts, setup.width)
        g2 = _profile_matrix(f2, packet.second_shifts, setup.width)
        psi += g1 @ packet.amplitudes @ g2.T
    return psi


def _profile_matrix(points, centers, width) -> np.ndarray:
    norm = (2.0 / (np.pi * width**2)) ** 0.25
    diff = points[:, None] - np.asarray(centers)[None, :]
    return norm * np.exp(-(diff**2) / width**2)


def pointer_joint_distribution(
    setup: JointPointerSetup, first_readings, second_readings
) -> np.ndarray:
    """|amplitude|^2 of the post-selected readings on the grid.

    Unnormalised: its scale carries the post-selection probability.
    """
    psi = pointer_joint_amplitude(setup, first_readings, second_readings)
    return np.abs(psi) ** 2


# ---------------------------------------------------------------------------
# Closed-form amplitude for full overlap
# ---------------------------------------------------------------------------

def _quad(fn, lo, hi, rel_tol, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(
                fn, lo, hi, epsabs=1e-12, epsrel=rel_tol, limit=limit
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureNotConverged(str(exc)) from exc
    if abserr > 10.0 * max(1e-10, rel_tol * abs(value)):
        raise QuadratureNotConverged(
            f"estimated error {abserr:.2e} too large for value {value:.6e}"
        )
    return value


def bessel_amplitude(
    setup: JointPointerSetup,
    first_reading: float,
    second_reading: float,
    *,
    rel_tol: float = 1e-8,
    cutoff_scale: float = 12.0,
    limit: int = 4000,
) -> complex:
    """Closed-form fully-overlapping reading amplitude at one grid point.

    Valid for beta = 0 with the preparation an eigenstate of the first
    observable, the post-selection an eigenstate of the second, and the
    two observables anticommuting (orthogonal Bloch axes).  The radial
    integral is cut off at ``cutoff_scale / width``, beyond which the
    Gaussian damping makes the integrand negligible, and is evaluated by
    adaptive Gauss-Kronrod quadrature at relative tolerance ``rel_tol``.
    """
    if setup.beta != 0.0:
        raise ValidationError("the closed form requires beta = 0")
    overlap = complex(setup.post.conj() @ setup.prep)
    if abs(overlap) < 1e-14:
        return 0.0 + 0.0j

    op_a = setup.operator_first()
    op_b = setup.operator_second()
    if np.linalg.norm(op_a @ setup.prep - setup.prep) > 1e-10:
        raise ValidationError("preparation must be the +1 eigenstate of meter one")
    if np.linalg.norm(op_b @ setup.post - setup.post) > 1e-10:
        raise ValidationError("post-selection must be the +1 eigenstate of meter two")
    if np.linalg.norm(op_a @ op_b + op_b @ op_a) > 1e-10:
        raise ValidationError("the closed form requires anticommuting observables")

    width = setup.width
    radius = math.hypot(first_reading, second_reading)
    theta = math.atan2(second_reading, first_reading)
    lam_max = cutoff_scale / width

    def damped(lam):
        return lam * math.exp(-lam * lam * width * width / 4.0)

    radial_even = _quad(
        lambda lam: damped(lam) * math.cos(lam) * j0(lam * radius),
        0.0,
        lam_max,
        rel_tol,
        limit,
    )
    radial_odd = _quad(
        lambda lam: damped(lam) * math.sin(lam) * j1(lam * radius),
        0.0,
        lam_max,
        rel_tol,
        limit,
    )
    prefactor = width / math.sqrt(2.0 * math.pi) * overlap
    angular = math.sqrt(2.0) * math.cos(theta - math.pi / 4.0)
    return complex(prefactor * (radial_even + angular * radial_odd))


def bessel_distribution(
    setup: JointPointerSetup, first_readings, second_readings, **quad_kwargs
) -> np.ndarray:
    """|closed-form amplitude|^2 over a rectangular reading grid."""
    f1 = np.asarray(first_readings, dtype=float)
    f2 = np.asarray(second_readings, dtype=float)
    out = np.empty((f1.size, f2.size))
    for i, a in enumerate(f1):
        for j, b in enumerate(f2):
            out[i, j] = abs(bessel_amplitude(setup, a, b, **quad_kwargs)) ** 2
    return out
