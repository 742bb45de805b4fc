"""QPUF construction: gates, blocks, layers, generation, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpufsim.circuits import (
    BlockParams,
    LayerDescriptor,
    QpufDescriptor,
    SecurityParams,
    block_unitary,
    blocks_per_layer,
    compile_descriptor,
    cz,
    deserialize,
    pair_starts,
    qeval,
    qgen,
    rot_x,
    rot_z,
    serialize,
)
from qpufsim.errors import DimensionError, FormatError, UnknownVersionError, ValidationError
from qpufsim.qmath import DensityMatrix, PureState, UnitaryMatrix, fidelity, haar_pure_state
from qpufsim.seeding import child_rng

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _oracle_rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _oracle_rz(theta):
    return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])


# ---------------------------------------------------------------------------
# gates


class TestGates:
    def test_zero_angle_rotations(self):
        assert np.allclose(rot_x(0.0).entries, np.eye(2), atol=1e-15)
        assert np.allclose(rot_z(0.0).entries, np.eye(2), atol=1e-15)

    def test_cz_matrix(self):
        assert np.array_equal(cz().entries, np.diag([1.0, 1.0, 1.0, -1.0]))

    def test_pi_shift_is_pauli_byproduct(self):
        # rot_x(theta + pi) == -i X rot_x(theta), by direct 2x2 multiplication
        theta = 1.234
        lhs = rot_x(theta + np.pi).entries
        rhs = -1j * PAULI_X @ rot_x(theta).entries
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


class TestBlockUnitary:
    def test_all_zero_params_collapse_to_cz(self):
        block = block_unitary(BlockParams(0, 0, 0, 0, 0, 0, 0, 0))
        assert np.allclose(block.entries, cz().entries, atol=1e-15)

    def test_bit_flip_changes_matrix_but_stays_unitary(self):
        base = BlockParams(0.3, 1.1, 2.2, 4.0, 0, 1, 0, 1)
        flipped = BlockParams(0.3, 1.1, 2.2, 4.0, 1, 1, 0, 1)
        a, b = block_unitary(base), block_unitary(flipped)
        assert not np.allclose(a.entries, b.entries, atol=1e-6)
        assert isinstance(b, UnitaryMatrix)

    def test_matches_gate_by_gate_oracle(self):
        p = BlockParams(0.7, 2.9, 5.5, 1.3, 1, 0, 1, 1)
        top = _oracle_rx(p.alpha + np.pi) @ _oracle_rz(p.beta)
        bottom = _oracle_rx(p.gamma + np.pi) @ _oracle_rz(p.delta + np.pi)
        oracle = np.diag([1.0, 1.0, 1.0, -1.0]) @ np.kron(top, bottom)
        assert np.max(np.abs(block_unitary(p).entries - oracle)) <= 1e-12

    def test_param_validation(self):
        with pytest.raises(ValidationError):
            BlockParams(-0.1, 0, 0, 0, 0, 0, 0, 0)
        with pytest.raises(ValidationError):
            BlockParams(0, 0, 0, 0, 2, 0, 0, 0)


# ---------------------------------------------------------------------------
# pairings / generation


class TestPairings:
    @pytest.mark.parametrize(
        "n,parity,expected",
        [
            (2, "even", (0,)),
            (2, "odd", ()),
            (3, "even", (0,)),
            (3, "odd", (1,)),
            (4, "even", (0, 2)),
            (4, "odd", (1,)),
            (5, "even", (0, 2)),
            (5, "odd", (1, 3)),
            (6, "even", (0, 2, 4)),
            (6, "odd", (1, 3)),
        ],
    )
    def test_pair_starts(self, n, parity, expected):
        assert pair_starts(n, parity) == expected


class TestQgen:
    def test_zero_layers(self):
        desc = qgen(3, 0, 1)
        assert desc.layers == ()
        assert desc.n_blocks == 0

    def test_n5_layer_layout(self):
        desc = qgen(5, 3, 42)
        assert len(desc.layers) == 3
        for layer in desc.layers:
            assert len(layer.blocks) == blocks_per_layer(5, layer.parity) == 2

    def test_determinism_and_seed_sensitivity(self):
        a, b, c = qgen(4, 2, 7), qgen(4, 2, 7), qgen(4, 2, 8)
        assert a == b
        diff = any(
            la.parity != lb.parity or la.blocks != lb.blocks
            for la, lb in zip(a.layers, c.layers)
        )
        assert diff

    def test_rejects_single_qubit(self):
        with pytest.raises(ValueError):
            qgen(1, 2, 0)

    def test_marginals(self):
        # angle means near pi and bit frequencies near 1/2, both within 3 sigma
        angles, bits = [], []
        rng = child_rng(123)
        while len(angles) < 2000 * 4:
            desc = qgen(6, 4, rng)
            for layer in desc.layers:
                for blk in layer.blocks:
                    angles.extend(blk.angles)
                    bits.extend(blk.bits)
        angles = np.array(angles)
        bits = np.array(bits, dtype=float)
        angle_se = (2 * np.pi / np.sqrt(12)) / np.sqrt(angles.size)
        assert abs(angles.mean() - np.pi) <= 3 * angle_se
        assert abs(bits.mean() - 0.5) <= 3 * 0.5 / np.sqrt(bits.size)

    def test_parity_coin_is_fair(self):
        rng = child_rng(9)
        parities = [layer.parity for _ in range(300) for layer in qgen(4, 4, rng).layers]
        frac = np.mean([p == "even" for p in parities])
        assert abs(frac - 0.5) <= 3 * 0.5 / np.sqrt(len(parities))


# ---------------------------------------------------------------------------
# compilation


def _embed_oracle(n, layer):
    """Independent layer embedding: place each 4x4 block by explicit index maps."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    starts = pair_starts(n, layer.parity)
    blocks = [block_unitary(b).entries for b in layer.blocks]
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        vec = np.zeros(dim, dtype=complex)
        vec[col] = 1.0
        amp = {tuple(bits): 1.0 + 0j}
        for start, blk in zip(starts, blocks):
            new_amp = {}
            for state, a in amp.items():
                sub = state[start] * 2 + state[start + 1]
                for sub_out in range(4):
                    coef = blk[sub_out, sub]
                    if coef == 0:
                        continue
                    ns = list(state)
                    ns[start], ns[start + 1] = sub_out >> 1, sub_out & 1
                    key = tuple(ns)
                    new_amp[key] = new_amp.get(key, 0.0) + a * coef
            amp = new_amp
        for state, a in amp.items():
            row = int("".join(map(str, state)), 2)
            out[row, col] += a
    return out


class TestCompile:
    def test_zero_layers_identity(self):
        desc = qgen(3, 0, 5)
        assert np.array_equal(compile_descriptor(desc).entries, np.eye(8))

    def test_single_even_layer_on_two_qubits_is_the_block(self):
        p = BlockParams(1.0, 2.0, 3.0, 4.0, 1, 0, 0, 1)
        desc = QpufDescriptor(1, 2, 1, (LayerDescriptor("even", (p,)),), 0)
        assert np.allclose(compile_descriptor(desc).entries, block_unitary(p).entries, atol=1e-15)

    def test_odd_layer_on_two_qubits_is_identity(self):
        desc = QpufDescriptor(1, 2, 1, (LayerDescriptor("odd", ()),), 0)
        assert np.array_equal(compile_descriptor(desc).entries, np.eye(4))

    def test_against_embedding_oracle(self):
        desc = qgen(4, 2, 99)
        oracle = np.eye(16, dtype=complex)
        for layer in desc.layers:
            oracle = _embed_oracle(4, layer) @ oracle
        assert np.max(np.abs(compile_descriptor(desc).entries - oracle)) <= 1e-11

    def test_pure_function_of_descriptor(self):
        desc = qgen(5, 3, 1234)
        a = compile_descriptor(desc).entries
        b = compile_descriptor(desc).entries
        assert np.array_equal(a, b)

    @settings(deadline=None, max_examples=15)
    @given(st.integers(2, 8), st.integers(0, 6), st.integers(0, 10_000))
    def test_compiled_always_unitary(self, n, k, seed):
        u = compile_descriptor(qgen(n, k, seed))
        defect = np.max(np.abs(u.entries.conj().T @ u.entries - np.eye(u.dim)))
        assert defect <= 1e-10

    def test_dimension_guard(self):
        desc = qgen(12, 0, 0)
        compile_descriptor(desc)  # 4096 is allowed
        with pytest.raises(ValueError):
            qgen(1, 0, 0)


class TestQeval:
    def test_maximally_mixed_fixed_point(self):
        u = compile_descriptor(qgen(3, 2, 3))
        rho = DensityMatrix(np.eye(8) / 8)
        out = qeval(u, rho)
        assert np.max(np.abs(out.entries - rho.entries)) <= 1e-12

    def test_purity_preserved(self):
        rng = np.random.default_rng(8)
        u = compile_descriptor(qgen(3, 2, 4))
        rho = haar_pure_state(8, rng).density()
        out = qeval(u, rho)
        assert abs(out.purity() - rho.purity()) <= 1e-10

    def test_fidelity_invariance(self):
        rng = np.random.default_rng(9)
        u = compile_descriptor(qgen(2, 3, 5))
        rho = haar_pure_state(4, rng).density()
        sigma = haar_pure_state(4, rng).density()
        assert abs(fidelity(qeval(u, rho), qeval(u, sigma)) - fidelity(rho, sigma)) <= 1e-9

    def test_dimension_mismatch(self):
        u = compile_descriptor(qgen(2, 1, 0))
        with pytest.raises(DimensionError):
            qeval(u, DensityMatrix(np.eye(8) / 8))


# ---------------------------------------------------------------------------
# serialization


class TestSerialization:
    def test_round_trip_exact(self):
        desc = qgen(5, 4, 321)
        assert deserialize(serialize(desc)) == desc

    def test_field_order_and_schema(self):
        import json

        desc = qgen(3, 1, 11)
        doc = json.loads(serialize(desc))
        assert list(doc.keys()) == ["version", "n_qubits", "n_blocks", "master_seed", "layers"]
        layer = doc["layers"][0]
        assert list(layer.keys()) == ["parity", "blocks"]
        if layer["blocks"]:
            assert list(layer["blocks"][0].keys()) == ["alpha", "beta", "gamma", "delta", "m"]

    def test_float_precision_round_trips(self):
        desc = qgen(4, 3, 55)
        rebuilt = deserialize(serialize(desc))
        for la, lb in zip(desc.layers, rebuilt.layers):
            for ba, bb in zip(la.blocks, lb.blocks):
                assert ba.angles == bb.angles  # exact, not approximate

    def test_truncated_payload(self):
        payload = serialize(qgen(3, 2, 0))
        with pytest.raises(FormatError):
            deserialize(payload[: len(payload) // 2])

    def test_unknown_version(self):
        payload = serialize(qgen(2, 1, 0)).replace(b'"version":1', b'"version":9')
        with pytest.raises(UnknownVersionError):
            deserialize(payload)

    def test_wrong_block_count_rejected(self):
        payload = serialize(qgen(4, 1, 3)).replace(b'"n_qubits":4', b'"n_qubits":6')
        with pytest.raises(FormatError):
            deserialize(payload)

    @settings(deadline=None, max_examples=30)
    @given(st.integers(2, 7), st.integers(0, 5), st.integers(0, 2**32))
    def test_round_trip_property(self, n, k, seed):
        desc = qgen(n, k, seed)
        assert deserialize(serialize(desc)) == desc


# ---------------------------------------------------------------------------
# security parameters


class TestSecurityParams:
    def test_valid(self):
        p = SecurityParams(delta_r=0.05, delta_c=0.3, delta_u=1.5, epsilon=0.1, t=3)
        assert p.t == 3

    def test_constraint_violation(self):
        with pytest.raises(ValidationError):
            SecurityParams(delta_r=0.5, delta_c=0.3, delta_u=1.5, epsilon=0.1, t=1)
        with pytest.raises(ValidationError):
            SecurityParams(delta_r=0.5, delta_c=0.6, delta_u=0.3, epsilon=0.1, t=1)

    def test_epsilon_range(self):
        with pytest.raises(ValidationError):
            SecurityParams(delta_r=0.1, delta_c=0.2, delta_u=0.2, epsilon=1.0, t=1)
