"""Quantities measurable between two scheduled measurements without effect.

Between consecutive measurements at t_l and t_{l+1} there are exactly two
families of observables whose extra measurement at an interior time t'
leaves every sequence probability unchanged: the earlier observable
conjugated forward to t' by the system propagator, and the later one
conjugated backward from t_{l+1} to t'.  Their outcomes are then fixed
with certainty by the neighbouring records.  The two generally do not
commute, so the two certainties cannot be cashed in simultaneously; this
module builds the pair and verifies both the invariance and the
certainty, reporting the deviations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadInterval, ValidationError
from .hilbert import Observable, spectral_decompose
from .paths import ProbabilityTable, Schedule, insert_observable, probability_table

#: Branch probabilities below this are not conditioned on (reported as skipped).
_CONDITION_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class RealityPair:
    """The two insertion-invariant observables at one interior time."""

    q_minus: Observable
    q_plus: Observable
    t_prime: float
    bracket_norm: float


@dataclass(eq=False)
class CrInsertionReport:
    """Outcome of one insertion-invariance verification."""

    original: ProbabilityTable
    augmented: ProbabilityTable
    max_deviation: float
    min_certainty: float
    skipped_branches: int


def _segment_of(schedule: Schedule, ell: int, t_prime: float) -> None:
    if not 0 <= ell < schedule.level_count:
        raise ValidationError(
            f"segment {ell} outside [0, {schedule.level_count})"
        )
    lo, hi = schedule.times[ell], schedule.times[ell + 1]
    if not lo < t_prime < hi:
        raise BadInterval(
            f"t'={t_prime} not strictly inside ({lo}, {hi})"
        )


def make_reality_pair(
    schedule: Schedule, ell: int, t_prime: float
) -> RealityPair:
    """Both insertion-invariant observables for the interval (t_l, t_{l+1}).

    The backward member carries the spectrum of observable l, the forward
    member that of observable l+1; both are spectrally re-decomposed so
    that their block structure is canonical.
    """
    _segment_of(schedule, ell, t_prime)
    u_back = schedule.evolution.propagator(schedule.times[ell], t_prime)
    u_fwd = schedule.evolution.propagator(t_prime, schedule.times[ell + 1])
    q_l = schedule.observables[ell].matrix
    q_next = schedule.observables[ell + 1].matrix
    minus_mat = u_back @ q_l @ u_back.conj().T
    plus_mat = u_fwd.conj().T @ q_next @ u_fwd
    q_minus = spectral_decompose(minus_mat)
    q_plus = spectral_decompose(plus_mat)
    bracket = q_minus.matrix @ q_plus.matrix - q_plus.matrix @ q_minus.matrix
    return RealityPair(
        q_minus=q_minus,
        q_plus=q_plus,
        t_prime=float(t_prime),
        bracket_norm=float(np.linalg.norm(bracket, 2)),
    )


def verify_cr_insertion(
    schedule: Schedule, ell: int, t_prime: float, which: str
) -> CrInsertionReport:
    """Insert one member of the reality pair and verify it changes nothing.

    Checks two things: marginalising the inserted outcome out of the
    augmented table reproduces the original table (``max_deviation``), and
    the inserted outcome is pinned by its anchor record (the outcome at l
    for the backward member, at l+1 for the forward one) with conditional
    probability one (``min_certainty``).  Branches whose probability is
    below the conditioning floor are skipped and counted.
    """
    return verify_cr_insertions(schedule, [(ell, t_prime, which)])


def verify_cr_insertions(
    schedule: Schedule, insertions: list[tuple[int, float, str]]
) -> CrInsertionReport:
    """Insert several reality-pair members and verify the joint effect.

    ``insertions`` is a list of (segment, time, which) triples, each
    referring to a segment of the *original* schedule; times must be
    distinct.  With every backward member measured before its forward
    partner the statistics are provably unchanged; other orderings
    generically break them, which is what ``max_deviation`` then shows.
    ``min_certainty`` is the worst-case conditional probability that all
    inserted outcomes simultaneously equal their anchor records.
    """
    if not insertions:
        raise ValidationError("need at least one insertion")
    if len({t for _, t, _ in insertions}) != len(insertions):
        raise ValidationError("insertion times must be distinct")

    anchors: list[tuple[float, int]] = []  # (time, anchor index in original key)
    observables = []
    for ell, t_prime, which in insertions:
        if which not in ("minus", "plus"):
            raise ValidationError(f"which must be 'minus' or 'plus', got {which!r}")
        pair = make_reality_pair(schedule, ell, t_prime)
        observables.append(pair.q_minus if which == "minus" else pair.q_plus)
        anchors.append((float(t_prime), ell if which == "minus" else ell + 1))

    augmented = schedule
    for i in sorted(range(len(insertions)), key=lambda i: anchors[i][0]):
        augmented, _ = insert_observable(augmented, observables[i], anchors[i][0])

    # Merge original and insertion times to locate every entry of the
    # augmented outcome keys.
    tagged = [("orig", i, t) for i, t in enumerate(schedule.times)]
    tagged += [("ins", i, anchors[i][0]) for i in range(len(insertions))]
    tagged.sort(key=lambda item: item[2])
    orig_pos = {i: p for p, (kind, i, _) in enumerate(tagged) if kind == "orig"}
    ins_pos = {i: p for p, (kind, i, _) in enumerate(tagged) if kind == "ins"}

    original = probability_table(schedule)
    aug_table = probability_table(augmented)

    collapsed = aug_table
    for pos in sorted(ins_pos.values(), reverse=True):
        collapsed = collapsed.collapsed(pos)
    max_dev = original.max_abs_diff(collapsed)

    min_certainty = 1.0
    skipped = 0
    for key, p in original.entries.items():
        if p < _CONDITION_FLOOR:
            skipped += 1
            continue
        expected = [0] * len(tagged)
        for i, m in enumerate(key):
            expected[orig_pos[i]] = m
        for i, (_, anchor) in enumerate(anchors):
            expected[ins_pos[i]] = key[anchor]
        joint = aug_table.entries.get(tuple(expected), 0.0)
        min_certainty = min(min_certainty, joint / p)
    return CrInsertionReport(
        original=original,
        augmented=aug_table,
        max_deviation=float(max_dev),
        min_certainty=float(min_certainty),
        skipped_branches=skipped,
    )
