"""Path amplitudes, outcome tables, route agreement, and sampling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import seqmeas as sm
from seqmeas import paths
from seqmeas.generators import random_observable, random_schedule

from oracles import SX, SY, brute_force_table


def test_constant_path_for_identical_observables(pauli):
    s = sm.Schedule(
        times=(0.0, 1.0, 2.0),
        observables=(pauli["x"], pauli["x"], pauli["x"]),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )
    assert sm.virtual_amplitude(s, (1, 1, 1)) == pytest.approx(1.0)
    assert sm.virtual_amplitude(s, (1, 0, 1)) == pytest.approx(0.0)
    assert sm.virtual_amplitude(s, (1, 1, 0)) == pytest.approx(0.0)


def test_virtual_amplitude_mutually_unbiased(qubit_xy_schedule):
    s = qubit_xy_schedule
    amp = sm.virtual_amplitude(s, (1, 1))
    # equals the direct inner product of the stored basis vectors, and its
    # magnitude squared is the unbiased 1/2
    direct = (
        s.observables[1].basis[:, 1].conj() @ s.observables[0].basis[:, 1]
    )
    assert amp == pytest.approx(direct)
    assert abs(amp) ** 2 == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_virtual_amplitude_bounded(seed):
    rng = np.random.default_rng(seed)
    s = random_schedule(rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)))
    path = tuple(int(rng.integers(0, s.dim)) for _ in range(s.level_count + 1))
    assert abs(sm.virtual_amplitude(s, path)) <= 1.0 + 1e-12


def test_elementary_amplitude_fully_degenerate_intermediates():
    rng = np.random.default_rng(2)
    prep_obs = random_observable(rng, 3, nondegenerate=True)
    ident = sm.spectral_decompose(np.eye(3))
    final_obs = random_observable(rng, 3, nondegenerate=True)
    ham = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    ev = sm.Evolution(0.5 * (ham + ham.conj().T))
    s = sm.Schedule((0.0, 0.7, 1.9), (prep_obs, ident, final_obs), ev, prep_index=2)
    for n in range(3):
        amp = sm.elementary_amplitude(s, (2, 0, n), n)
        direct = final_obs.basis[:, n].conj() @ ev.propagator(0.0, 1.9) @ s.prep_state
        assert amp == pytest.approx(direct, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_elementary_amplitude_equals_virtual_path_sum(seed):
    """Degeneracy-grouped amplitudes against exhaustive eigenvector paths."""
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 5))
    levels = int(rng.integers(2, 4))
    s = random_schedule(rng, dim, levels)
    obs = s.observables
    mids = tuple(int(rng.integers(0, obs[lv].block_count)) for lv in range(1, levels))
    final_n = int(rng.integers(0, dim))
    outcome = (s.prep_block, *mids, int(obs[-1].block_index[final_n]))
    engine = sm.elementary_amplitude(s, outcome, final_n)
    total = 0.0 + 0.0j
    import itertools

    for path in itertools.product(range(dim), repeat=levels - 1):
        blocks = tuple(int(obs[lv + 1].block_index[n]) for lv, n in enumerate(path))
        if blocks != mids:
            continue
        total += sm.virtual_amplitude(s, (s.prep_index, *path, final_n))
    assert engine == pytest.approx(total, abs=1e-12)


def test_rank_two_block_sums_two_virtual_paths():
    """Three levels, middle eigenvalue doubly degenerate."""
    rng = np.random.default_rng(8)
    prep_obs = random_observable(rng, 3, nondegenerate=True)
    mid_mat = np.zeros((3, 3), dtype=complex)
    basis = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    # eigenvalue 1 on a two-dimensional block, eigenvalue 2 on the rest
    mid_mat = basis @ np.diag([1.0, 1.0, 2.0]) @ basis.conj().T
    mid_obs = sm.spectral_decompose(mid_mat)
    assert list(mid_obs.multiplicities) == [2, 1]
    final_obs = random_observable(rng, 3, nondegenerate=True)
    ev = sm.Evolution(np.diag([0.3, -0.1, 0.9]))
    s = sm.Schedule((0.0, 1.0, 2.0), (prep_obs, mid_obs, final_obs), ev, prep_index=0)
    amp = sm.elementary_amplitude(s, (0, 0, 2), 2)
    contributions = [
        sm.virtual_amplitude(s, (0, n, 2)) for n in mid_obs.block_columns(0)
    ]
    assert amp == pytest.approx(sum(contributions), abs=1e-12)


def test_outcome_validation():
    pauli_x = sm.spectral_decompose(SX)
    pauli_y = sm.spectral_decompose(SY)
    s = sm.Schedule((0.0, 1.0), (pauli_x, pauli_y), sm.Evolution.zero(2), 1)
    with pytest.raises(sm.ValidationError):
        sm.elementary_amplitude(s, (0, 1), 1)  # wrong preparation block
    with pytest.raises(sm.ValidationError):
        sm.elementary_amplitude(s, (1, 0), 1)  # final vector not in block 0
    with pytest.raises(sm.ValidationError):
        sm.virtual_amplitude(s, (1, 1, 1))  # wrong length


def test_qubit_unbiased_table(qubit_xy_schedule):
    table = sm.probability_table(qubit_xy_schedule)
    assert table[(1, 0)] == pytest.approx(0.5)
    assert table[(1, 1)] == pytest.approx(0.5)


def test_repeated_pair_collapses_to_single_transition(pauli):
    """Measuring prep axis then final axis twice each, in order, changes
    nothing relative to the plain two-measurement run."""
    s = sm.Schedule(
        times=(0.0, 0.4, 0.8, 1.2),
        observables=(pauli["x"], pauli["x"], pauli["y"], pauli["y"]),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )
    table = sm.probability_table(s)
    # the doubled records must repeat their partners with certainty
    assert table[(1, 1, 0, 0)] == pytest.approx(0.5)
    assert table[(1, 1, 1, 1)] == pytest.approx(0.5)
    assert table[(1, 1, 0, 1)] == pytest.approx(0.0, abs=1e-14)
    assert table[(1, 0, 1, 1)] == pytest.approx(0.0, abs=1e-14)


def test_reordered_chain_breaks_equality(pauli, sigma_third):
    """Final-axis observable measured before the prep axis one: the summed
    four-path probability differs from the direct transition."""
    direct = sm.probability_table(
        sm.Schedule((0.0, 1.0), (pauli["x"], sigma_third), sm.Evolution.zero(2), 1)
    )
    p_direct = direct[(1, 1)]
    assert p_direct == pytest.approx(0.75)
    s = sm.Schedule(
        times=(0.0, 0.4, 0.8, 1.2),
        observables=(pauli["x"], sigma_third, pauli["x"], sigma_third),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )
    table = sm.probability_table(s)
    summed = sum(
        table[(1, j, i, 1)] for i in range(2) for j in range(2)
    )
    assert summed == pytest.approx(9.0 / 16.0, abs=1e-12)
    assert abs(summed - p_direct) > 1e-3
    # brute-force oracle agrees entry for entry
    oracle = brute_force_table(s)
    assert table.max_abs_diff(oracle) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_normalization_and_route_equivalence(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 5))
    levels = int(rng.integers(1, 5))
    s = random_schedule(rng, dim, levels)
    t_sum = sm.probability_table(s, method="sum")
    t_chain = sm.probability_table(s, method="chain")
    assert abs(t_sum.total() - 1.0) < 1e-10
    assert t_sum.max_abs_diff(t_chain) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_table_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    s = random_schedule(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)))
    assert sm.probability_table(s).max_abs_diff(brute_force_table(s)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_gauge_invariance_under_relabeling(seed):
    """Strictly increasing eigenvalue relabeling leaves the table identical."""
    rng = np.random.default_rng(seed)
    s = random_schedule(rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)))
    relabeled = sm.Schedule(
        times=s.times,
        observables=tuple(o.relabeled(lambda q: 3.0 * q + 11.0) for o in s.observables),
        evolution=s.evolution,
        prep_index=s.prep_index,
    )
    base = sm.probability_table(s)
    other = sm.probability_table(relabeled)
    assert base.max_abs_diff(other) == 0.0  # bit-identical amplitudes


def test_gauge_invariance_through_fresh_decomposition(pauli):
    """Relabeling via a rebuilt matrix (fresh eigh) stays within tolerance."""
    rng = np.random.default_rng(17)
    s = random_schedule(rng, 3, 2)
    rebuilt = []
    for o in s.observables:
        m = np.tensordot(2.0 * o.eigenvalues + 7.0, o.projectors, axes=(0, 0))
        rebuilt.append(sm.spectral_decompose(m))
    s2 = sm.Schedule(s.times, tuple(rebuilt), s.evolution, s.prep_index)
    assert sm.probability_table(s).max_abs_diff(sm.probability_table(s2)) < 1e-10


def _split_middle_block(schedule, eps=0.5):
    """Replace the middle observable by one with its first degenerate block
    split into distinct eigenvalues, using the stored basis."""
    mid = schedule.observables[1]
    block = int(np.flatnonzero(mid.multiplicities >= 2)[0])
    cols = mid.block_columns(block)
    assert len(cols) >= 2
    diag = mid.eigenvalues[mid.block_index].astype(float).copy()
    diag[cols[0]] += eps
    split_mat = (mid.basis * diag) @ mid.basis.conj().T
    split = sm.spectral_decompose(split_mat)
    return sm.Schedule(
        schedule.times,
        (schedule.observables[0], split, *schedule.observables[2:]),
        schedule.evolution,
        schedule.prep_index,
    )


def test_degenerate_merge_consistency():
    rng = np.random.default_rng(4)
    # L = 2: splitting an intermediate degenerate eigenvalue changes the
    # table because the split destroys interference inside the block
    while True:
        s = random_schedule(rng, 3, 2, force_degenerate=True)
        if int(s.observables[1].multiplicities.max()) >= 2:
            break
    split_s = _split_middle_block(s)
    merged = sm.probability_table(s)
    split_table = sm.probability_table(split_s)
    mid = s.observables[1]
    split_mid = split_s.observables[1]

    def parent_block(split_block: int) -> int:
        # the merged block whose projector contains the split eigenspace
        overlaps = [
            float(np.trace(p @ split_mid.projectors[split_block]).real)
            for p in mid.projectors
        ]
        return int(np.argmax(overlaps))

    resummed = {}
    for key, p in split_table.entries.items():
        new_key = (key[0], parent_block(key[1]), *key[2:])
        resummed[new_key] = resummed.get(new_key, 0.0) + p
    dev = merged.max_abs_diff(resummed)
    assert dev > 1e-3  # interference was destroyed

    # L = 1: no intermediate interference, so the same surgery on the final
    # observable is exactly neutral
    s1 = sm.Schedule(s.times[:2], s.observables[:2], s.evolution, s.prep_index)
    split_s1 = sm.Schedule(
        s1.times, (s1.observables[0], split_s.observables[1]), s1.evolution, s1.prep_index
    )
    merged1 = sm.probability_table(s1)
    split1 = sm.probability_table(split_s1)
    resummed1 = {}
    for key, p in split1.entries.items():
        new_key = (key[0], parent_block(key[1]))
        resummed1[new_key] = resummed1.get(new_key, 0.0) + p
    assert merged1.max_abs_diff(resummed1) < 1e-12


def test_enumeration_cap_switches_to_chain(monkeypatch, qubit_xy_schedule, pauli):
    s3 = sm.Schedule(
        times=(0.0, 1.0, 2.0, 3.0),
        observables=(pauli["x"], pauli["y"], pauli["x"], pauli["y"]),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )
    monkeypatch.setattr(paths, "PATH_ENUMERATION_CAP", 2)
    with pytest.raises(sm.ValidationError):
        sm.probability_table(s3, method="sum")
    auto = sm.probability_table(s3, method="auto")  # falls back to the chain
    explicit = sm.probability_table(s3, method="chain")
    assert auto.max_abs_diff(explicit) == 0.0


def test_sampling_single_trial(qubit_xy_schedule):
    freq = sm.sample_outcomes(qubit_xy_schedule, 1, seed=9)
    assert sum(freq.values()) == pytest.approx(1.0)
    drawn = [k for k, v in freq.items() if v > 0]
    assert len(drawn) == 1
    assert sm.probability_table(qubit_xy_schedule)[drawn[0]] > 0


def test_sampling_concentrates(qubit_xy_schedule):
    freq = sm.sample_outcomes(qubit_xy_schedule, 10**5, seed=1234)
    assert sum(freq.values()) == pytest.approx(1.0)
    assert abs(freq[(1, 1)] - 0.5) < 0.01
    # deterministic given the seed
    again = sm.sample_outcomes(qubit_xy_schedule, 10**5, seed=1234)
    assert freq == again


def test_schedule_validation(pauli):
    with pytest.raises(sm.ValidationError):
        sm.Schedule((0.0,), (pauli["x"],), sm.Evolution.zero(2), 0)
    with pytest.raises(sm.ValidationError):
        sm.Schedule((0.0, 0.0), (pauli["x"], pauli["y"]), sm.Evolution.zero(2), 0)
    with pytest.raises(sm.ValidationError):
        sm.Schedule((0.0, 1.0), (pauli["x"],), sm.Evolution.zero(2), 0)
    ident = sm.spectral_decompose(np.eye(2))
    with pytest.raises(sm.ValidationError):
        sm.Schedule((0.0, 1.0), (ident, pauli["y"]), sm.Evolution.zero(2), 0)
    with pytest.raises(sm.ValidationError):
        sm.Schedule((0.0, 1.0), (pauli["x"], pauli["y"]), sm.Evolution.zero(2), 5)
    with pytest.raises(sm.ValidationError):
        sm.Schedule((0.0, 1.0), (pauli["x"], pauli["y"]), sm.Evolution.zero(3), 0)


def test_insert_observable_bounds(qubit_xy_schedule, pauli):
    with pytest.raises(sm.BadInterval):
        sm.insert_observable(qubit_xy_schedule, pauli["z"], 0.0)
    with pytest.raises(sm.BadInterval):
        sm.insert_observable(qubit_xy_schedule, pauli["z"], 1.5)
    augmented, pos = sm.insert_observable(qubit_xy_schedule, pauli["z"], 0.25)
    assert pos == 1
    assert augmented.level_count == 2
    assert augmented.times == (0.0, 0.25, 1.0)
