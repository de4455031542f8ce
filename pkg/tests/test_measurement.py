"""Collapse semantics and screen densities for the three illumination regimes."""

import numpy as np
import pytest

from slitlab.measurement import (
    ConditionalState,
    IlluminationConfig,
    IlluminationMode,
    MeasurementOutcome,
    OutcomeTag,
    apply_measurement,
    coherent_initial_state,
    conditional_density,
    ensemble_density,
    outcome_probabilities,
)
from slitlab.optics import (
    Hole,
    RealDensity,
    SlitGeometry,
    default_geometry,
    single_hole_amplitude,
    visibility,
)
from slitlab.stats import GriddedCdf, chi_square_gof, filter_positions, histogram, PositionSample

GEOM = default_geometry()

OFF = IlluminationConfig(IlluminationMode.OFF)
BOTH = IlluminationConfig(IlluminationMode.BOTH_HOLES, window_complete=True)
A_COMPLETE = IlluminationConfig(IlluminationMode.HOLE_A_ONLY, window_complete=True)
A_EARLY_OFF = IlluminationConfig(IlluminationMode.HOLE_A_ONLY, window_complete=False)


class TestConfigAndState:
    def test_off_mode_normalizes_window_flag(self):
        config = IlluminationConfig(IlluminationMode.OFF, window_complete=True)
        assert config.window_complete is False

    def test_efficiency_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            IlluminationConfig(IlluminationMode.BOTH_HOLES, detection_efficiency=1.2)

    def test_branch_weights_must_sum_to_one(self):
        psi = single_hole_amplitude(GEOM, Hole.A).renormalized(1.0)
        with pytest.raises(ValueError, match="sum"):
            ConditionalState(branches=((psi, 0.7),))

    def test_coherent_state_is_single_branch(self):
        psi = single_hole_amplitude(GEOM, Hole.A).renormalized(1.0)
        with pytest.raises(ValueError, match="coherent"):
            ConditionalState(branches=((psi, 0.5), (psi, 0.5)), coherent=True)

    def test_initial_state_is_coherent_unit_weight(self):
        state = coherent_initial_state(GEOM)
        assert state.coherent
        assert len(state.branches) == 1
        assert state.branches[0][1] == 1.0


class TestApplyMeasurement:
    def test_light_off_changes_nothing(self):
        initial = coherent_initial_state(GEOM)
        outcome, state = apply_measurement(initial, OFF, np.random.default_rng(0))
        assert outcome.tag is OutcomeTag.NOT_SEEN
        assert state is initial

    def test_requires_coherent_initial_state(self):
        psi = single_hole_amplitude(GEOM, Hole.A).renormalized(1.0)
        collapsed = ConditionalState(branches=((psi, 1.0),), coherent=False)
        with pytest.raises(ValueError, match="coherent"):
            apply_measurement(collapsed, BOTH, np.random.default_rng(0))

    def test_sighting_frequency_matches_branch_weight(self):
        # Symmetric holes, hole A lit, complete window: half are sighted.
        initial = coherent_initial_state(GEOM)
        rng = np.random.default_rng(2024)
        n = 20_000
        seen = sum(
            apply_measurement(initial, A_COMPLETE, rng)[0].tag is OutcomeTag.SEEN_AT_A
            for _ in range(n)
        )
        assert abs(seen / n - 0.5) < 3 * np.sqrt(0.25 / n)

    def test_unequal_holes_split_two_to_one(self):
        geom = SlitGeometry(
            hole_separation=5e-6,
            hole_width_a=1.0e-6,
            hole_width_b=0.5e-6,
            wall_to_backstop=1.0,
            de_broglie_wavelength=50e-9,
            grid_min=-0.2,
            grid_max=0.2,
            grid_points=8192,
        )
        initial = coherent_initial_state(geom)
        rng = np.random.default_rng(99)
        n = 100_000
        seen_a = sum(
            apply_measurement(initial, BOTH, rng)[0].tag is OutcomeTag.SEEN_AT_A
            for _ in range(n)
        )
        p = 2 / 3
        assert abs(seen_a / n - p) < 3 * np.sqrt(p * (1 - p) / n)

    def test_sighting_collapses_to_that_hole(self):
        initial = coherent_initial_state(GEOM)
        rng = np.random.default_rng(5)
        psi_a = single_hole_amplitude(GEOM, Hole.A).renormalized(1.0)
        psi_b = single_hole_amplitude(GEOM, Hole.B).renormalized(1.0)
        for _ in range(50):
            outcome, state = apply_measurement(initial, BOTH, rng)
            assert not state.coherent
            amp, weight = state.branches[0]
            assert weight == 1.0
            assert amp.weight == pytest.approx(1.0, rel=1e-12)
            target = psi_a if outcome.tag is OutcomeTag.SEEN_AT_A else psi_b
            np.testing.assert_allclose(amp.values, target.values, atol=1e-12)

    def test_null_observation_collapses_to_unlit_hole(self):
        initial = coherent_initial_state(GEOM)
        rng = np.random.default_rng(6)
        psi_b = single_hole_amplitude(GEOM, Hole.B).renormalized(1.0)
        saw_null = False
        for _ in range(50):
            outcome, state = apply_measurement(initial, A_COMPLETE, rng)
            if outcome.tag is OutcomeTag.NOT_SEEN:
                saw_null = True
                assert not state.coherent
                np.testing.assert_allclose(state.branches[0][0].values, psi_b.values, atol=1e-12)
        assert saw_null

    def test_early_light_off_preserves_coherence(self):
        initial = coherent_initial_state(GEOM)
        rng = np.random.default_rng(7)
        for _ in range(50):
            outcome, state = apply_measurement(initial, A_EARLY_OFF, rng)
            assert outcome.tag is OutcomeTag.NOT_SEEN
            assert outcome.window_complete_at_decision is False
            assert state is initial

    def test_seeded_outcome_sequence_is_reproducible(self):
        initial = coherent_initial_state(GEOM)

        def sequence():
            rng = np.random.default_rng(31415)
            return [apply_measurement(initial, BOTH, rng)[0].tag for _ in range(200)]

        assert sequence() == sequence()


class TestEnsembleDensity:
    def test_off_density_shows_full_contrast_fringes(self):
        dens = ensemble_density(OFF, GEOM)
        assert dens.total == pytest.approx(1.0, abs=1e-9)
        period = GEOM.fringe_period
        assert visibility(dens, (-period, period)) > 0.99

    def test_both_holes_is_pointwise_incoherent_sum(self):
        dens = ensemble_density(BOTH, GEOM)
        p1 = np.abs(single_hole_amplitude(GEOM, Hole.A).values) ** 2
        p2 = np.abs(single_hole_amplitude(GEOM, Hole.B).values) ** 2
        expected = (p1 + p2) / np.trapezoid(p1 + p2, GEOM.grid)
        assert np.max(np.abs(dens.values - expected)) < 1e-12

    def test_one_lit_hole_equals_both_lit(self):
        both = ensemble_density(BOTH, GEOM)
        one = ensemble_density(A_COMPLETE, GEOM)
        assert np.max(np.abs(both.values - one.values)) < 1e-12

    def test_early_light_off_restores_interference(self):
        off = ensemble_density(OFF, GEOM)
        early = ensemble_density(A_EARLY_OFF, GEOM)
        assert np.max(np.abs(off.values - early.values)) < 1e-12

    def test_partial_efficiency_unsupported(self):
        config = IlluminationConfig(IlluminationMode.BOTH_HOLES, detection_efficiency=0.5)
        with pytest.raises(ValueError, match="efficiency"):
            ensemble_density(config, GEOM)


class TestConditionalDensity:
    def test_null_branch_is_exactly_the_unlit_hole_density(self):
        dens = conditional_density(A_COMPLETE, OutcomeTag.NOT_SEEN, GEOM)
        psi_b = single_hole_amplitude(GEOM, Hole.B)
        expected = np.abs(psi_b.values) ** 2 / psi_b.weight
        expected /= np.trapezoid(expected, GEOM.grid)
        assert np.max(np.abs(dens.values - expected)) < 1e-12
        # The closed-form branch envelope is centered on the axis, so the
        # collapsed branch has no lateral displacement at the backstop.
        first_moment = np.trapezoid(GEOM.grid * dens.values, GEOM.grid)
        assert abs(first_moment) < 1e-12

    def test_null_branch_mirrors_the_sighted_branch(self):
        null = conditional_density(A_COMPLETE, OutcomeTag.NOT_SEEN, GEOM)
        seen = conditional_density(A_COMPLETE, OutcomeTag.SEEN_AT_A, GEOM)
        assert np.max(np.abs(null.values - seen.values[::-1])) < 1e-12

    def test_sighted_branch_has_no_fringes(self):
        dens = conditional_density(BOTH, OutcomeTag.SEEN_AT_A, GEOM)
        period = GEOM.fringe_period
        assert visibility(dens, (-period, period)) <= 0.05

    def test_unconditioned_case_equals_ensemble(self):
        cond = conditional_density(OFF, OutcomeTag.NOT_SEEN, GEOM)
        ens = ensemble_density(OFF, GEOM)
        np.testing.assert_array_equal(cond.values, ens.values)

    def test_inconsistent_pairs_rejected(self):
        with pytest.raises(ValueError):
            conditional_density(OFF, OutcomeTag.SEEN_AT_A, GEOM)
        with pytest.raises(ValueError):
            conditional_density(A_COMPLETE, OutcomeTag.SEEN_AT_B, GEOM)
        with pytest.raises(ValueError):
            conditional_density(BOTH, OutcomeTag.NOT_SEEN, GEOM)
        with pytest.raises(ValueError):
            conditional_density(A_EARLY_OFF, OutcomeTag.SEEN_AT_A, GEOM)
        with pytest.raises(ValueError, match="window"):
            conditional_density(
                A_COMPLETE, MeasurementOutcome(OutcomeTag.NOT_SEEN, False), GEOM
            )


class TestTotalProbability:
    @pytest.mark.parametrize("config", [OFF, BOTH, A_COMPLETE, A_EARLY_OFF])
    def test_outcome_mixture_reconstructs_ensemble(self, config):
        probs = outcome_probabilities(config, GEOM)
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-9)
        mixture = np.zeros(GEOM.grid_points)
        for tag, p in probs.items():
            if p == 0.0:
                continue
            mixture += p * conditional_density(config, tag, GEOM).values
        ens = ensemble_density(config, GEOM)
        assert np.max(np.abs(mixture - ens.values)) < 1e-9


FIVE_REGIMES = [
    (OFF, OutcomeTag.NOT_SEEN),
    (BOTH, OutcomeTag.SEEN_AT_A),
    (BOTH, OutcomeTag.SEEN_AT_B),
    (A_COMPLETE, OutcomeTag.SEEN_AT_A),
    (A_COMPLETE, OutcomeTag.NOT_SEEN),
]


class TestSampledVersusAnalytic:
    def test_collapse_then_born_sampling_matches_conditionals(self):
        # Positions generated through the measurement op itself: draw the
        # outcome per electron, then sample that electron's post-state
        # density; the per-regime piles must fit their conditionals.
        initial = coherent_initial_state(GEOM)
        rng = np.random.default_rng(8462)
        n = 20_000
        half = 6 * GEOM.fringe_period

        for config in (OFF, BOTH, A_COMPLETE):
            tags = []
            states = []
            for _ in range(n):
                outcome, state = apply_measurement(initial, config, rng)
                tags.append(outcome.tag)
                states.append(state)
            u = rng.random(n)
            # Collapse targets are shared instances, so the post-state
            # densities can be built once per distinct amplitude.
            groups: dict[int, list[int]] = {}
            amplitudes = {}
            for i, state in enumerate(states):
                amp = state.branches[0][0]
                amplitudes[id(amp)] = amp
                groups.setdefault(id(amp), []).append(i)
            positions = np.empty(n)
            for key, idx in groups.items():
                amp = amplitudes[key]
                values = np.abs(amp.values) ** 2 / amp.weight
                dens = RealDensity(GEOM, values, float(np.trapezoid(values, GEOM.grid)))
                positions[idx] = GriddedCdf(dens).ppf(u[idx])
            tags = np.array([t.value for t in tags])
            for (regime_config, tag) in FIVE_REGIMES:
                if regime_config is not config:
                    continue
                pile = positions[tags == tag.value]
                if pile.size == 0:
                    continue
                expected = conditional_density(config, tag, GEOM).restrict(-half, half)
                sample = PositionSample(pile, GEOM)
                conditioned = filter_positions(sample, expected.x[0], expected.x[-1])
                hist = histogram(conditioned, 48, (expected.x[0], expected.x[-1]))
                result = chi_square_gof(hist, expected)
                assert result.p_value >= 0.01, (config.mode, tag, result)
