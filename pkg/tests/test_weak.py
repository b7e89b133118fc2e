"""Weak gate registers and weak pointers."""

import numpy as np
import pytest

import seqmeas as sm
from seqmeas.weak import (
    WeakGateConfig,
    WeakPointerConfig,
    weak_gate_distribution,
    weak_gates_final_distribution,
    weak_pointer_mean,
)

from oracles import SZ


@pytest.fixture(scope="module")
def projector_up_z():
    return sm.spectral_decompose(np.diag([1.0, 0.0]))


def test_full_strength_equals_projective_insertion(qubit_third_schedule, pauli):
    cfg = WeakGateConfig(pauli["z"], time=0.5, strength=np.pi / 2.0)
    split = weak_gate_distribution(qubit_third_schedule, cfg)
    augmented, _ = sm.insert_observable(qubit_third_schedule, pauli["z"], 0.5)
    projective = sm.probability_table(augmented).final_marginal()
    for m, p in projective.items():
        assert split.combined_final[m] == pytest.approx(p, abs=1e-12)
    assert sum(split.undetected.entries.values()) < 1e-30


def test_vanishing_strength_equals_no_insertion(qubit_third_schedule, pauli):
    cfg = WeakGateConfig(pauli["z"], time=0.5, strength=1e-8)
    split = weak_gate_distribution(qubit_third_schedule, cfg)
    base = sm.probability_table(qubit_third_schedule).final_marginal()
    for m, p in base.items():
        assert split.combined_final[m] == pytest.approx(p, abs=1e-12)


def test_branch_weights_and_undetected_shape(qubit_third_schedule, pauli):
    gamma = 0.3
    cfg = WeakGateConfig(pauli["z"], time=0.5, strength=gamma)
    split = weak_gate_distribution(qubit_third_schedule, cfg)
    assert sum(split.detected.entries.values()) == pytest.approx(
        np.sin(gamma) ** 2, abs=1e-12
    )
    assert sum(split.undetected.entries.values()) == pytest.approx(
        np.cos(gamma) ** 2, abs=1e-12
    )
    # the undetected branch is the original table, scaled outcome by outcome
    base = sm.probability_table(qubit_third_schedule)
    for key, p in base.entries.items():
        assert split.undetected.entries[key] == pytest.approx(
            np.cos(gamma) ** 2 * p, abs=1e-14
        )


def test_mixture_residual_shrinks_as_fourth_power(qubit_third_schedule, pauli):
    base = sm.probability_table(qubit_third_schedule).final_marginal()
    known = weak_gate_distribution(
        qubit_third_schedule, WeakGateConfig(pauli["z"], 0.5, np.pi / 2.0)
    ).combined_final

    def residual(gamma):
        split = weak_gate_distribution(
            qubit_third_schedule, WeakGateConfig(pauli["z"], 0.5, gamma)
        )
        return max(
            abs(
                split.combined_final[m]
                - ((1.0 - gamma**2) * base[m] + gamma**2 * known[m])
            )
            for m in base
        )

    for gamma in (0.2, 0.1, 0.05):
        assert residual(gamma) > 0
        assert residual(gamma / 2) / residual(gamma) < 0.35


def test_strength_validation(pauli):
    with pytest.raises(sm.ValidationError):
        WeakGateConfig(pauli["z"], 0.5, strength=0.0)
    with pytest.raises(sm.ValidationError):
        WeakGateConfig(pauli["z"], 0.5, strength=2.0)
    with pytest.raises(sm.ValidationError):
        WeakPointerConfig(pauli["z"], 0.5, strength=0.01, width=0.0)


def test_two_weak_gates_act_independently(qubit_third_schedule, pauli):
    """First-order corrections from two weak gates add; the residual
    against the additive prediction scales like the single-gate ones."""
    base = sm.probability_table(qubit_third_schedule).final_marginal()

    def cfg_a(g):
        return WeakGateConfig(pauli["z"], 0.3, g)

    def cfg_b(g):
        return WeakGateConfig(pauli["y"], 0.7, g)

    def residual(gamma):
        both = weak_gates_final_distribution(
            qubit_third_schedule, [cfg_a(gamma), cfg_b(gamma)]
        )
        single_a = weak_gate_distribution(qubit_third_schedule, cfg_a(gamma)).combined_final
        single_b = weak_gate_distribution(qubit_third_schedule, cfg_b(gamma)).combined_final
        additive = {
            m: single_a[m] + single_b[m] - base[m] for m in base
        }
        return max(abs(both[m] - additive[m]) for m in base)

    assert sum(
        weak_gates_final_distribution(
            qubit_third_schedule, [cfg_a(0.2), cfg_b(0.2)]
        ).values()
    ) == pytest.approx(1.0, abs=1e-12)
    r = [residual(g) for g in (0.2, 0.1, 0.05)]
    assert r[1] / r[0] < 0.35 and r[2] / r[1] < 0.35


def test_weak_value_for_up_z_projector(qubit_xy_schedule, projector_up_z):
    cfg = WeakPointerConfig(projector_up_z, time=0.5, strength=0.01, width=1.0)
    report = weak_pointer_mean(qubit_xy_schedule, cfg, (1, 1))
    ratio = report.amplitude_numerator / report.amplitude_denominator
    assert ratio == pytest.approx(0.5 + 0.5j, abs=1e-12)
    assert report.mean_reading == pytest.approx(0.5, abs=1e-12)
    assert report.imag_part == pytest.approx(0.5, abs=1e-12)
    assert abs(report.exact_mean - 0.5) < 0.01


def test_weak_pointer_exact_mean_convergence(pauli):
    """With an off-equator post-selection the branch amplitudes have
    unequal weights, so the finite-coupling mean approaches the ratio
    value from a measurable distance, at order >= 1."""
    tilted = sm.spectral_decompose(
        (np.sqrt(3.0) / 2.0) * pauli["x"].matrix + 0.5 * SZ
    )
    s = sm.Schedule(
        times=(0.0, 1.0),
        observables=(pauli["x"], tilted),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )
    proj = sm.spectral_decompose(np.diag([1.0, 0.0]))
    errors = []
    for gamma in (0.8, 0.4, 0.2, 0.1):
        rep = weak_pointer_mean(
            s, WeakPointerConfig(proj, 0.5, gamma, width=0.3), (1, 1)
        )
        errors.append(abs(rep.exact_mean - rep.mean_reading))
    assert errors[0] > 1e-3  # genuinely finite at strong coupling
    for coarse, fine in zip(errors, errors[1:]):
        assert fine < coarse / 2.0  # observed order above one


def test_weak_pointer_rescaling_equivalence(pauli):
    """Reducing the coupling at fixed width is the same measurement as
    unit coupling with a proportionally widened pointer: the mean reading
    in coupling units depends only on the strength-to-width ratio."""
    tilted = sm.spectral_decompose(
        (np.sqrt(3.0) / 2.0) * pauli["x"].matrix + 0.5 * SZ
    )
    s = sm.Schedule(
        times=(0.0, 1.0),
        observables=(pauli["x"], tilted),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )
    proj = sm.spectral_decompose(np.diag([1.0, 0.0]))
    for gamma, width in [(0.3, 0.7), (0.05, 1.3)]:
        weak = weak_pointer_mean(
            s, WeakPointerConfig(proj, 0.5, gamma, width), (1, 1)
        )
        widened = weak_pointer_mean(
            s, WeakPointerConfig(proj, 0.5, 1.0, width / gamma), (1, 1)
        )
        assert weak.exact_mean == pytest.approx(widened.exact_mean, abs=1e-12)


def test_projector_on_prepared_state_reads_one(qubit_xy_schedule, pauli):
    prep_proj = sm.spectral_decompose(np.asarray(pauli["x"].projectors[1]))
    cfg = WeakPointerConfig(prep_proj, time=0.5, strength=0.05, width=1.0)
    report = weak_pointer_mean(qubit_xy_schedule, cfg, (1, 1))
    assert report.mean_reading == pytest.approx(1.0, abs=1e-12)
    assert report.exact_mean == pytest.approx(1.0, abs=1e-12)


def test_identity_probe_is_unperturbing(qubit_xy_schedule):
    ident = sm.spectral_decompose(np.eye(2))
    for gamma in (0.01, 0.3, 1.0):
        cfg = WeakPointerConfig(ident, time=0.5, strength=gamma, width=1.0)
        report = weak_pointer_mean(qubit_xy_schedule, cfg, (1, 1))
        assert report.mean_reading == pytest.approx(1.0, abs=1e-12)
        assert report.exact_mean == pytest.approx(1.0, abs=1e-12)
    # inserting the identity leaves the table untouched at any strength
    augmented, _ = sm.insert_observable(qubit_xy_schedule, ident, 0.5)
    base = sm.probability_table(qubit_xy_schedule)
    collapsed = sm.probability_table(augmented).collapsed(1)
    assert base.max_abs_diff(collapsed) < 1e-14


def test_zero_denominator(pauli):
    s = sm.Schedule(
        times=(0.0, 1.0),
        observables=(pauli["x"], pauli["x"]),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )
    ident = sm.spectral_decompose(np.eye(2))
    cfg = WeakPointerConfig(ident, time=0.5, strength=0.05, width=1.0)
    with pytest.raises(sm.ZeroDenominator):
        weak_pointer_mean(s, cfg, (1, 0))


def test_degenerate_final_conditioning_rejected(pauli):
    rng = np.random.default_rng(3)
    from seqmeas.generators import random_observable

    final = random_observable(rng, 3, force_degenerate=True)
    while final.is_nondegenerate or int(final.multiplicities[0]) == 1:
        final = random_observable(rng, 3, force_degenerate=True)
    prep = random_observable(rng, 3, nondegenerate=True)
    s = sm.Schedule((0.0, 1.0), (prep, final), sm.Evolution.zero(3), 0)
    ident = sm.spectral_decompose(np.eye(3))
    cfg = WeakPointerConfig(ident, time=0.5, strength=0.05, width=1.0)
    with pytest.raises(sm.ValidationError):
        weak_pointer_mean(s, cfg, (0, 0))
