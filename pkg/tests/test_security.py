"""Security experiments: uniqueness, games, noise, CRP store."""

import numpy as np
import pytest

from qpufsim.circuits import compile_descriptor, qgen
from qpufsim.design import Ensemble, haar_ensemble, haar_moment_operator, moment_operator
from qpufsim.errors import DimensionError, FormatError
from qpufsim.metrics import diamond_distance_unitary
from qpufsim.qmath import (
    DensityMatrix,
    PureState,
    UnitaryMatrix,
    fidelity,
    haar_pure_state,
    haar_unitary,
)
from qpufsim.security import (
    ExactCloneForger,
    HelstromDistinguisher,
    IdentityForger,
    RandomGuessDistinguisher,
    RandomUnitaryForger,
    UnitaryNoiseModel,
    apply_noise,
    collision_check,
    crp_record,
    forgery_game,
    haar_jitter_pair,
    noise_strength,
    noise_theorem_check,
    qgen_ensemble,
    qgen_jitter_pair,
    read_crp_records,
    robustness_check,
    uniqueness_experiment,
    unknownness_game,
    write_crp_records,
)


def nearby_pair(d, angle, rng):
    """Two pure states with overlap cos(angle)."""
    psi = haar_pure_state(d, rng)
    # rotate within the span of psi and an orthogonal direction
    raw = haar_pure_state(d, rng).amplitudes
    raw = raw - (psi.amplitudes.conj() @ raw) * psi.amplitudes
    perp = raw / np.linalg.norm(raw)
    phi = PureState(np.cos(angle) * psi.amplitudes + np.sin(angle) * perp)
    return psi.density(), phi.density()


# ---------------------------------------------------------------------------
# uniqueness


class TestUniqueness:
    def test_deterministic(self):
        a = uniqueness_experiment(3, 2, 8, seed=42)
        b = uniqueness_experiment(3, 2, 8, seed=42)
        assert a.distances == b.distances

    def test_report_statistics(self):
        rep = uniqueness_experiment(4, 1, 10, seed=5)
        assert rep.runs == len(rep.distances) == 10
        assert all(0.0 <= x <= 2.0 for x in rep.distances)
        assert rep.min <= rep.mean <= 2.0

    def test_threads_match_sequential(self):
        a = uniqueness_experiment(3, 1, 6, seed=2)
        b = uniqueness_experiment(3, 1, 6, seed=2, threads=3)
        assert a.distances == b.distances

    def test_distances_concentrate_near_two(self):
        rep = uniqueness_experiment(5, 2, 12, seed=3)
        assert rep.mean > 1.8

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            uniqueness_experiment(9, 1, 5, seed=0)
        with pytest.raises(ValueError):
            uniqueness_experiment(4, 0, 5, seed=0)
        with pytest.raises(ValueError):
            uniqueness_experiment(4, 1, 0, seed=0)


# ---------------------------------------------------------------------------
# robustness / collision


class TestPairChecks:
    def test_identical_pair_passes_any_threshold(self):
        u = compile_descriptor(qgen(2, 2, 1))
        rho = haar_pure_state(4, np.random.default_rng(0)).density()
        for delta_r in (0.0, 1e-6, 0.01, 0.5):
            rep = robustness_check(u, [(rho, rho)], delta_r=delta_r)
            assert rep.all_pass
        assert robustness_check(u, [(rho, rho)], delta_r=0.01).records[0].applicable

    def test_hundred_near_pairs(self):
        rng = np.random.default_rng(1)
        u = compile_descriptor(qgen(3, 3, 2))
        pairs = [nearby_pair(8, 0.05, rng) for _ in range(100)]
        rep = robustness_check(u, pairs, delta_r=0.01)
        assert rep.all_pass
        assert rep.applicable_count == 100  # cos(0.05) ~ 0.9988 >= 0.99

    def test_inapplicable_pairs_recorded_not_asserted(self):
        rng = np.random.default_rng(2)
        u = compile_descriptor(qgen(2, 1, 3))
        far = nearby_pair(4, np.pi / 2, rng)  # orthogonal
        rep = robustness_check(u, [far], delta_r=0.01)
        assert rep.all_pass
        assert rep.applicable_count == 0

    def test_collision_orthogonal_in_orthogonal_out(self):
        u = compile_descriptor(qgen(2, 2, 4))
        z = PureState.basis(4, 0).density()
        o = PureState.basis(4, 1).density()
        rep = collision_check(u, [(z, o)], delta_c=1.0)
        assert rep.all_pass and rep.records[0].applicable
        assert rep.records[0].output_fidelity <= 1e-9

    def test_collision_hundred_far_pairs(self):
        rng = np.random.default_rng(5)
        u = compile_descriptor(qgen(3, 2, 6))
        pairs = [nearby_pair(8, 1.3, rng) for _ in range(100)]  # fidelity ~ 0.27
        rep = collision_check(u, pairs, delta_c=0.5)
        assert rep.all_pass
        assert rep.applicable_count == 100

    def test_mixed_applicability(self):
        rng = np.random.default_rng(6)
        u = compile_descriptor(qgen(2, 1, 7))
        pairs = [nearby_pair(4, 0.02, rng), nearby_pair(4, 1.5, rng)]
        rep = collision_check(u, pairs, delta_c=0.5)
        assert rep.applicable_count == 1
        assert rep.all_pass

    def test_dimension_mismatch(self):
        u = compile_descriptor(qgen(2, 1, 8))
        rho = PureState.basis(8, 0).density()
        with pytest.raises(DimensionError):
            robustness_check(u, [(rho, rho)], delta_r=0.1)


# ---------------------------------------------------------------------------
# unknownness game


class TestUnknownnessGame:
    def test_haar_vs_haar_is_a_coin_flip(self):
        sampler = haar_ensemble(4, 128, 31)
        res = unknownness_game(sampler, 1, 600, RandomGuessDistinguisher(), seed=32)
        sigma = np.sqrt(0.25 / 600)
        assert abs(res.success_rate - 0.5) <= 3 * sigma

    def test_singleton_helstrom_attains_exact_value(self):
        u = haar_unitary(4, np.random.default_rng(33))
        sampler = Ensemble.explicit([(1.0, u)])
        adversary = HelstromDistinguisher(moment_operator(sampler, 1), haar_moment_operator(4, 1))
        res = unknownness_game(sampler, 1, 1500, adversary, seed=34)
        sigma = np.sqrt(res.bound * (1 - res.bound) / res.trials)
        assert abs(res.success_rate - res.bound) <= 3 * sigma

    @pytest.mark.parametrize("m", [1, 2])
    def test_success_never_beats_bound(self, m):
        sampler = qgen_ensemble(2, 2, budget=256, seed=35)
        adversaries = [
            RandomGuessDistinguisher(),
            HelstromDistinguisher(
                moment_operator(sampler, m), haar_moment_operator(4, m)
            ),
        ]
        for adv in adversaries:
            res = unknownness_game(sampler, m, 500, adv, seed=36)
            sigma = np.sqrt(0.25 / res.trials)
            assert res.success_rate <= res.bound + 3 * sigma

    def test_bound_at_least_half(self):
        sampler = haar_ensemble(4, 64, 37)
        res = unknownness_game(sampler, 1, 50, RandomGuessDistinguisher(), seed=38)
        assert res.bound >= 0.5

    def test_copy_guard(self):
        sampler = haar_ensemble(64, 8, 39)
        with pytest.raises(DimensionError):
            unknownness_game(sampler, 2, 10, RandomGuessDistinguisher(), seed=40)

    def test_result_accounting(self):
        sampler = haar_ensemble(4, 32, 41)
        res = unknownness_game(sampler, 1, 77, RandomGuessDistinguisher(), seed=42)
        assert res.trials == 77
        assert res.success_rate == res.successes / 77


# ---------------------------------------------------------------------------
# forgery game


class TestForgeryGame:
    def test_exact_clone_ceiling(self):
        desc = qgen(3, 4, 50)
        res = forgery_game(desc, 0, 300, ExactCloneForger(desc), seed=51)
        assert res.mean_squared_fidelity >= 1.0 - 1e-9
        assert res.success_rate == 1.0

    def test_identity_matches_haar_average_overlap(self):
        # analytic oracle: E_phi |<phi|U|phi>|^2 = (d + |Tr U|^2) / (d (d+1))
        desc = qgen(3, 4, 52)
        u = compile_descriptor(desc).entries
        expected = (8 + abs(np.trace(u)) ** 2) / (8 * 9)
        res = forgery_game(desc, 0, 2000, IdentityForger(), seed=53)
        assert abs(res.mean_squared_fidelity - expected) <= 3 * res.fidelity_std_error

    def test_identity_ignores_crps(self):
        desc = qgen(3, 2, 54)
        a = forgery_game(desc, 0, 400, IdentityForger(), seed=55)
        b = forgery_game(desc, 10, 400, IdentityForger(), seed=56)
        pooled = np.sqrt(a.fidelity_std_error**2 + b.fidelity_std_error**2)
        assert abs(a.mean_squared_fidelity - b.mean_squared_fidelity) <= 3 * pooled

    def test_random_unitary_forger_is_weak(self):
        desc = qgen(3, 3, 57)
        res = forgery_game(desc, 0, 500, RandomUnitaryForger(), seed=58)
        assert res.mean_squared_fidelity < 0.5
        assert res.success_rate < 0.05

    def test_deterministic(self):
        desc = qgen(2, 2, 59)
        a = forgery_game(desc, 2, 50, IdentityForger(), seed=60)
        b = forgery_game(desc, 2, 50, IdentityForger(), seed=60)
        assert a.mean_squared_fidelity == b.mean_squared_fidelity


# ---------------------------------------------------------------------------
# noise model


class TestApplyNoise:
    def test_zero_sigma_is_identity(self):
        desc = qgen(4, 3, 70)
        assert apply_noise(desc, UnitaryNoiseModel(0.0), np.random.default_rng(1)) == desc

    def test_small_sigma_perturbs_but_keeps_unitary(self):
        desc = qgen(4, 2, 71)
        noisy = apply_noise(desc, UnitaryNoiseModel(0.01), np.random.default_rng(2))
        dd = diamond_distance_unitary(compile_descriptor(desc), compile_descriptor(noisy))
        assert 0.0 < dd < 2.0

    def test_bits_untouched(self):
        desc = qgen(3, 3, 72)
        noisy = apply_noise(desc, UnitaryNoiseModel(0.5), np.random.default_rng(3))
        for la, lb in zip(desc.layers, noisy.layers):
            assert la.parity == lb.parity
            for ba, bb in zip(la.blocks, lb.blocks):
                assert ba.bits == bb.bits
                assert ba.angles != bb.angles

    def test_not_idempotent(self):
        desc = qgen(3, 2, 73)
        model = UnitaryNoiseModel(0.05)
        once = apply_noise(desc, model, np.random.default_rng(4))
        twice = apply_noise(once, model, np.random.default_rng(5))
        assert once != twice


class TestNoiseStrength:
    def test_zero_for_equal(self):
        u = compile_descriptor(qgen(3, 2, 80))
        for t in (1, 2, 3):
            assert noise_strength(u, u, t) == pytest.approx(0.0, abs=1e-9)

    def test_zero_for_global_phase(self):
        u = compile_descriptor(qgen(2, 2, 81))
        v = UnitaryMatrix(np.exp(0.7j) * u.entries)
        assert noise_strength(u, v, 3) <= 1e-9

    def test_matches_direct_tensor_power_eigensolve(self):
        # oracle: build (U†U')^(x3) as a dense 8x8 matrix and rerun the
        # closed form on its directly computed eigenphases
        rng = np.random.default_rng(82)
        u, v = haar_unitary(2, rng), haar_unitary(2, rng)
        rel = u.entries.conj().T @ v.entries
        big = np.kron(np.kron(rel, rel), rel)
        from qpufsim.metrics import diamond_distance_from_angles
        from qpufsim.qmath import unitary_eigensystem

        angles, _ = unitary_eigensystem(UnitaryMatrix(big))
        oracle = diamond_distance_from_angles(angles)
        assert noise_strength(u, v, 3) == pytest.approx(oracle, abs=1e-9)

    def test_nondecreasing_in_t(self):
        desc = qgen(2, 2, 83)
        model = UnitaryNoiseModel(0.02)
        noisy = apply_noise(desc, model, np.random.default_rng(6))
        u, v = compile_descriptor(desc), compile_descriptor(noisy)
        values = [noise_strength(u, v, t) for t in range(1, 6)]
        for a, b in zip(values, values[1:]):
            assert b >= a - 1e-12

    def test_guard(self):
        u = compile_descriptor(qgen(4, 1, 84))
        with pytest.raises(DimensionError):
            noise_strength(u, u, 4)  # 16^4 = 65536 > 4096


class TestNoiseTheorem:
    def test_zero_sigma_exact_equality(self):
        pair = qgen_jitter_pair(2, 2, UnitaryNoiseModel(0.0), budget=64, seed=90)
        rep = noise_theorem_check(pair, 1)
        assert rep.epsilon_prime == rep.epsilon
        assert rep.epsilon_t == 0.0
        assert rep.holds

    def test_holds_across_seeds_qgen(self):
        model = UnitaryNoiseModel(0.05)
        for s in range(8):
            pair = qgen_jitter_pair(2, 2, model, budget=96, seed=100 + s)
            rep = noise_theorem_check(pair, 1)
            assert rep.holds, f"seed {s}: {rep}"

    def test_holds_for_haar_with_jitter(self):
        model = UnitaryNoiseModel(0.02)
        for t in (1, 2):
            pair = haar_jitter_pair(2, model, budget=96, seed=110 + t)
            rep = noise_theorem_check(pair, t)
            assert rep.holds

    def test_adversarial_sigma_flagged_not_meaningful(self):
        pair = qgen_jitter_pair(2, 1, UnitaryNoiseModel(np.pi), budget=48, seed=120)
        rep = noise_theorem_check(pair, 2)
        assert rep.holds  # the inequality is unconditional
        assert not rep.meaningful


# ---------------------------------------------------------------------------
# CRP store


class TestCrpStore:
    def test_round_trip_pure(self, tmp_path):
        rng = np.random.default_rng(7)
        path = tmp_path / "store.jsonl"
        recs = []
        for _ in range(3):
            c, r = haar_pure_state(4, rng), haar_pure_state(4, rng)
            recs.append(crp_record(c, r, 2))
        write_crp_records(path, recs, append=False)
        out = read_crp_records(path)
        assert len(out) == 3
        for (c, r, n), rec in zip(out, recs):
            assert n == 2
            assert np.allclose(c.amplitudes, [complex(a, b) for a, b in rec["challenge"]])
            assert isinstance(r, PureState)

    def test_round_trip_density_response(self, tmp_path):
        rng = np.random.default_rng(8)
        path = tmp_path / "store.jsonl"
        c = haar_pure_state(4, rng)
        dm = DensityMatrix(np.eye(4) / 4)
        write_crp_records(path, [crp_record(c, dm, 2)], append=False)
        (c2, r2, n2) = read_crp_records(path)[0]
        assert isinstance(r2, DensityMatrix)
        assert np.allclose(r2.entries, dm.entries)

    def test_append_semantics(self, tmp_path):
        rng = np.random.default_rng(9)
        path = tmp_path / "store.jsonl"
        rec = crp_record(haar_pure_state(2, rng), haar_pure_state(2, rng), 1)
        write_crp_records(path, [rec])
        write_crp_records(path, [rec])
        assert len(read_crp_records(path)) == 2

    def test_malformed_record_rejected(self, tmp_path):
        path = tmp_path / "store.jsonl"
        path.write_text('{"challenge": [[1.0, 0.0]], "n_qubits": 1}\n')
        with pytest.raises(FormatError):
            read_crp_records(path)
