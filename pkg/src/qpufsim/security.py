"""Security properties as executable, seeded experiments.

Covers the uniqueness experiment behind the distance-vs-runs figures,
exact robustness/collision checks, the bounded-query distinguishing game
with its Helstrom ceiling, the selective-forgery game, the per-gate
unitary noise model, and the additive noise-accumulation inequality for
noisy ensembles.

Experiments take integer master seeds; trial ``i`` derives its generator
from the child stream ``(seed, i)``, so reports merge associatively and
extending the trial count never changes earlier trials.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuits import (
    BlockParams,
    LayerDescriptor,
    QpufDescriptor,
    compile_descriptor,
    qgen,
    rot_x,
    rot_z,
)
from .design import Ensemble, MomentOperator, design_error, haar_moment_operator, moment_operator
from .errors import DimensionError, FormatError, ValidationError
from .metrics import diamond_distance_from_angles, diamond_distance_unitary, helstrom_measurement, p_distinguish
from .qmath import (
    TWO_PI,
    DensityMatrix,
    PureState,
    UnitaryMatrix,
    fidelity,
    haar_pure_state,
    haar_unitary,
    kron,
    unitary_eigensystem,
)
from .seeding import child_rng

__all__ = [
    "UniquenessReport",
    "UnitaryNoiseModel",
    "GameResult",
    "ForgeryResult",
    "PairCheckRecord",
    "PairCheckReport",
    "NoiseTheoremReport",
    "NoisyEnsemblePair",
    "RandomGuessDistinguisher",
    "HelstromDistinguisher",
    "IdentityForger",
    "RandomUnitaryForger",
    "ExactCloneForger",
    "uniqueness_experiment",
    "robustness_check",
    "collision_check",
    "unknownness_game",
    "forgery_game",
    "apply_noise",
    "noise_strength",
    "noise_theorem_check",
    "qgen_ensemble",
    "haar_jitter_pair",
    "qgen_jitter_pair",
    "crp_record",
    "write_crp_records",
    "read_crp_records",
]

MAX_TENSOR_DIM = 4096


# ---------------------------------------------------------------------------
# uniqueness


@dataclass(frozen=True)
class UniquenessReport:
    """Diamond distances between independently generated QPUF pairs."""

    n: int
    k: int
    runs: int
    seed: int
    distances: tuple
    min: float
    mean: float
    stddev: float


def uniqueness_experiment(n: int, k: int, runs: int, seed: int, threads: int = 1) -> UniquenessReport:
    """Per run, generate two independent QPUFs and record their diamond distance.

    Runs are independent (child stream per run index), so they may execute
    on a worker pool; results are ordered by run index either way.
    """
    n, k, runs = int(n), int(k), int(runs)
    if not (2 <= n <= 8):
        raise ValueError("uniqueness experiment supports n in [2, 8]")
    if k < 1:
        raise ValueError("need k >= 1 layers")
    if runs < 1:
        raise ValueError("need runs >= 1")

    def one_run(i: int) -> float:
        rng = child_rng(seed, i)
        u0 = compile_descriptor(qgen(n, k, rng))
        u1 = compile_descriptor(qgen(n, k, rng))
        return diamond_distance_unitary(u0, u1)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            distances = list(pool.map(one_run, range(runs)))
    else:
        distances = [one_run(i) for i in range(runs)]
    arr = np.array(distances)
    return UniquenessReport(
        n=n,
        k=k,
        runs=runs,
        seed=int(seed),
        distances=tuple(distances),
        min=float(arr.min()),
        mean=float(arr.mean()),
        stddev=float(arr.std()),
    )


# ---------------------------------------------------------------------------
# robustness / collision


@dataclass(frozen=True)
class PairCheckRecord:
    input_fidelity: float
    output_fidelity: float
    applicable: bool
    passed: bool


@dataclass(frozen=True)
class PairCheckReport:
    kind: str  # "robustness" | "collision"
    threshold: float
    records: tuple
    all_pass: bool

    @property
    def applicable_count(self) -> int:
        return sum(1 for r in self.records if r.applicable)


_FIDELITY_SLACK = 1e-9


def _pair_check(u: UnitaryMatrix, pairs, threshold: float, kind: str) -> PairCheckReport:
    records = []
    for rho, sigma in pairs:
        if u.dim != rho.dim or u.dim != sigma.dim:
            raise DimensionError("state pair dimension does not match the unitary")
        f_in = fidelity(rho, sigma)
        f_out = fidelity(
            DensityMatrix(u.entries @ rho.entries @ u.entries.conj().T),
            DensityMatrix(u.entries @ sigma.entries @ u.entries.conj().T),
        )
        if kind == "robustness":
            applicable = f_in >= 1.0 - threshold
            passed = (not applicable) or f_out >= 1.0 - threshold - _FIDELITY_SLACK
        else:
            applicable = f_in <= 1.0 - threshold
            passed = (not applicable) or f_out <= 1.0 - threshold + _FIDELITY_SLACK
        records.append(PairCheckRecord(f_in, f_out, applicable, passed))
    return PairCheckReport(
        kind=kind,
        threshold=float(threshold),
        records=tuple(records),
        all_pass=all(r.passed for r in records),
    )


def robustness_check(u: UnitaryMatrix, pairs, delta_r: float) -> PairCheckReport:
    """Close inputs must map to equally close outputs (exact for unitaries)."""
    return _pair_check(u, pairs, delta_r, "robustness")


def collision_check(u: UnitaryMatrix, pairs, delta_c: float) -> PairCheckReport:
    """Far inputs must map to equally far outputs (exact for unitaries)."""
    return _pair_check(u, pairs, delta_c, "collision")


# ---------------------------------------------------------------------------
# adversaries


class RandomGuessDistinguisher:
    """Baseline distinguisher: ignores everything and flips a coin."""

    name = "random-guess"

    def decide(self, copies: PureState, challenge: PureState, rng: np.random.Generator) -> int:
        return int(rng.integers(2))


class HelstromDistinguisher:
    """Measures the optimal projector between the two modeled hypothesis states.

    Knows the moment operators of both hypotheses (ensemble-side and
    Haar-side); per trial it forms the two m-copy mixed states for the
    disclosed challenge, takes the positive eigenspace of their difference,
    and simulates that two-outcome measurement on the copies it was handed.
    """

    name = "helstrom"

    def __init__(self, model_ensemble: MomentOperator, model_haar: MomentOperator):
        self.model_ensemble = model_ensemble
        self.model_haar = model_haar

    def decide(self, copies: PureState, challenge: PureState, rng: np.random.Generator) -> int:
        rho0, rho1 = _hypothesis_states(self.model_ensemble, self.model_haar, challenge)
        projector = helstrom_measurement(rho0, rho1).projector.entries
        psi = copies.amplitudes
        p_click = float(np.real(psi.conj() @ projector @ psi))
        return 0 if rng.random() < min(max(p_click, 0.0), 1.0) else 1


class IdentityForger:
    """Replays the challenge unchanged; ignores observed CRPs."""

    name = "identity"

    def respond(self, crps, challenge: PureState, rng: np.random.Generator) -> PureState:
        return challenge


class RandomUnitaryForger:
    """Applies a fresh Haar unitary to the challenge each trial."""

    name = "random-unitary"

    def respond(self, crps, challenge: PureState, rng: np.random.Generator) -> PureState:
        u = haar_unitary(challenge.dim, rng)
        return PureState(u.entries @ challenge.amplitudes)


class ExactCloneForger:
    """Calibration ceiling: holds the descriptor and applies the true unitary."""

    name = "exact-clone"

    def __init__(self, desc: QpufDescriptor):
        self._unitary = compile_descriptor(desc)

    def respond(self, crps, challenge: PureState, rng: np.random.Generator) -> PureState:
        return PureState(self._unitary.entries @ challenge.amplitudes)


# ---------------------------------------------------------------------------
# unknownness game


@dataclass(frozen=True)
class GameResult:
    trials: int
    successes: int
    success_rate: float
    bound: float
    seed: int


@dataclass(frozen=True)
class ForgeryResult:
    trials: int
    successes: int
    success_rate: float
    bound: float
    seed: int
    mean_squared_fidelity: float
    fidelity_std_error: float
    success_threshold: float


def _tensor_power_state(psi: np.ndarray, m: int) -> np.ndarray:
    out = psi
    for _ in range(m - 1):
        out = np.kron(out, psi)
    return out


def _hypothesis_states(model_e: MomentOperator, model_h: MomentOperator, challenge: PureState):
    phi = challenge.amplitudes
    phi_m = _tensor_power_state(phi, model_e.t)
    y = np.outer(phi_m, phi_m.conj())
    return DensityMatrix(model_e.apply(y)), DensityMatrix(model_h.apply(y))


def unknownness_game(
    sampler: Ensemble,
    m: int,
    trials: int,
    adversary,
    seed: int,
    haar_budget: int = 4096,
) -> GameResult:
    """Distinguish ensemble draws from Haar draws after m queries on one challenge.

    Per trial: flip a fair coin, hand the adversary m copies of U|phi> for a
    fresh disclosed Haar challenge |phi>, and score the guess.  The ``bound``
    field is the trial-averaged Helstrom ceiling computed on the two modeled
    m-copy mixed states; it equals 1/2 + eps_hat/4 where eps_hat is the mean
    trace distance between the hypothesis states, so it doubles as the
    design-accuracy ceiling 1/2 (1 + eps_hat/2).
    """
    m, trials = int(m), int(trials)
    d = sampler.dim
    if d**m > MAX_TENSOR_DIM:
        raise DimensionError(f"d^m = {d**m} exceeds guard {MAX_TENSOR_DIM}")
    if trials < 1:
        raise ValueError("need at least one trial")
    model_e = moment_operator(sampler, m)
    if m <= 2:
        model_h = haar_moment_operator(d, m)
    else:
        model_h = haar_moment_operator(d, m, mode="monte-carlo", budget=haar_budget, seed=int(seed) + 1)
    successes = 0
    bound_total = 0.0
    for i in range(trials):
        rng = child_rng(seed, i)
        b = int(rng.integers(2))
        challenge = haar_pure_state(d, rng)
        u = sampler.draw(rng) if b == 0 else haar_unitary(d, rng)
        copies = PureState(_tensor_power_state(u.entries @ challenge.amplitudes, m))
        guess = int(adversary.decide(copies, challenge, rng))
        if guess == b:
            successes += 1
        rho0, rho1 = _hypothesis_states(model_e, model_h, challenge)
        bound_total += p_distinguish(rho0, rho1)
    return GameResult(
        trials=trials,
        successes=successes,
        success_rate=successes / trials,
        bound=bound_total / trials,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# forgery game


def forgery_game(
    desc: QpufDescriptor,
    num_crps: int,
    trials: int,
    adversary,
    seed: int,
    success_threshold: float = 0.9,
) -> ForgeryResult:
    """Score an adversary's responses to fresh Haar challenges.

    Each trial hands the adversary ``num_crps`` observed challenge/response
    pairs, then a fresh challenge it did not choose; the score is the
    squared fidelity |<response|true>|^2.  A trial counts as a successful
    forgery when the score reaches ``success_threshold``.
    """
    num_crps, trials = int(num_crps), int(trials)
    if num_crps < 0:
        raise ValueError("num_crps must be >= 0")
    if trials < 1:
        raise ValueError("need at least one trial")
    u = compile_descriptor(desc)
    d = u.dim
    scores = np.empty(trials)
    successes = 0
    for i in range(trials):
        rng = child_rng(seed, i)
        crps = []
        for _ in range(num_crps):
            phi = haar_pure_state(d, rng)
            crps.append((phi, PureState(u.entries @ phi.amplitudes)))
        challenge = haar_pure_state(d, rng)
        response = adversary.respond(crps, challenge, rng)
        truth = u.entries @ challenge.amplitudes
        score = float(np.abs(np.vdot(response.amplitudes, truth)) ** 2)
        scores[i] = score
        if score >= success_threshold:
            successes += 1
    return ForgeryResult(
        trials=trials,
        successes=successes,
        success_rate=successes / trials,
        bound=1.0,
        seed=int(seed),
        mean_squared_fidelity=float(scores.mean()),
        fidelity_std_error=float(scores.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0,
        success_threshold=float(success_threshold),
    )


# ---------------------------------------------------------------------------
# unitary noise


@dataclass(frozen=True)
class UnitaryNoiseModel:
    """Gaussian jitter of standard deviation sigma on every gate angle."""

    sigma: float
    kind: str = "angle-jitter"

    def __post_init__(self) -> None:
        if self.kind != "angle-jitter":
            raise ValidationError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0.0:
            raise ValidationError("sigma must be >= 0")


def apply_noise(desc: QpufDescriptor, model: UnitaryNoiseModel, rng) -> QpufDescriptor:
    """Jitter every block angle by N(0, sigma^2) mod 2*pi; bits stay fixed."""
    gen = rng if isinstance(rng, np.random.Generator) else child_rng(int(rng))
    layers = []
    for layer in desc.layers:
        blocks = []
        for b in layer.blocks:
            jitter = gen.normal(0.0, model.sigma, size=4)
            a, be, g, de = (np.mod(x + j, TWO_PI) for x, j in zip(b.angles, jitter))
            blocks.append(BlockParams(a, be, g, de, b.m1, b.m2, b.m3, b.m4))
        layers.append(LayerDescriptor(layer.parity, tuple(blocks)))
    return QpufDescriptor(
        version=desc.version,
        n_qubits=desc.n_qubits,
        n_blocks=desc.n_blocks,
        layers=tuple(layers),
        master_seed=desc.master_seed,
    )


def noise_strength(u: UnitaryMatrix, u_noisy: UnitaryMatrix, t: int) -> float:
    """Diamond distance between the t-fold channels of U and its noisy twin.

    Both t-fold channels are unitary, so the closed form applies on d^t;
    the eigenphases of (U†U')^{(x)t} are t-fold sums of the base phases,
    which avoids any d^t-sized eigensolve.
    """
    t = int(t)
    if u.dim != u_noisy.dim:
        raise DimensionError(f"dimension mismatch: {u.dim} vs {u_noisy.dim}")
    if u.dim**t > MAX_TENSOR_DIM:
        raise DimensionError(f"d^t = {u.dim**t} exceeds guard {MAX_TENSOR_DIM}")
    rel = UnitaryMatrix(u.entries.conj().T @ u_noisy.entries)
    base, _ = unitary_eigensystem(rel)
    angles = base
    for _ in range(t - 1):
        angles = np.mod(angles[:, None] + base[None, :], TWO_PI).reshape(-1)
    return diamond_distance_from_angles(angles)


# ---------------------------------------------------------------------------
# noise-accumulation theorem


@dataclass(frozen=True)
class NoisyEnsemblePair:
    """Clean ensemble and its noise-twin sharing draw indices.

    Both sides consume the same child stream per draw (the noise jitter is
    drawn after the clean parameters), so sigma = 0 reproduces the clean
    draws bit-exactly and the Monte Carlo error estimates stay correlated.
    """

    clean: Ensemble
    noisy: Ensemble
    model: UnitaryNoiseModel

    def pair_at(self, index: int):
        return self.clean.draw_at(index), self.noisy.draw_at(index)


def qgen_ensemble(n: int, k: int, budget: int, seed: int, model: UnitaryNoiseModel | None = None) -> Ensemble:
    """Generative ensemble of compiled parallel-random-circuit unitaries."""
    n, k = int(n), int(k)

    if model is None:
        sampler = lambda rng: compile_descriptor(qgen(n, k, rng))
    else:
        sampler = lambda rng: compile_descriptor(apply_noise(qgen(n, k, rng), model, rng))
    return Ensemble.generative(sampler, 2**n, budget, seed)


def qgen_jitter_pair(n: int, k: int, model: UnitaryNoiseModel, budget: int, seed: int) -> NoisyEnsemblePair:
    return NoisyEnsemblePair(
        clean=qgen_ensemble(n, k, budget, seed),
        noisy=qgen_ensemble(n, k, budget, seed, model=model),
        model=model,
    )


def _jitter_layer(n: int, model: UnitaryNoiseModel, rng: np.random.Generator) -> UnitaryMatrix:
    """Per-qubit X,Z rotation errors, the jitter analog for gateless draws."""
    out = None
    for _ in range(n):
        ex, ez = rng.normal(0.0, model.sigma, size=2)
        factor = rot_x(ex) @ rot_z(ez)
        out = factor if out is None else kron(out, factor)
    return out


def haar_jitter_pair(n: int, model: UnitaryNoiseModel, budget: int, seed: int) -> NoisyEnsemblePair:
    """Haar ensemble with per-qubit rotation jitter applied after each draw.

    Haar draws carry no gate angles, so the angle-jitter model acts through
    an extra layer of per-qubit X,Z errors; sigma = 0 makes that layer the
    exact identity.
    """
    n = int(n)
    d = 2**n
    clean = Ensemble.generative(lambda rng: haar_unitary(d, rng), d, budget, seed)

    def noisy_sampler(rng):
        u = haar_unitary(d, rng)
        return UnitaryMatrix(_jitter_layer(n, model, rng).entries @ u.entries)

    noisy = Ensemble.generative(noisy_sampler, d, budget, seed)
    return NoisyEnsemblePair(clean=clean, noisy=noisy, model=model)


@dataclass(frozen=True)
class NoiseTheoremReport:
    t: int
    epsilon: float
    epsilon_t: float
    epsilon_prime: float
    tolerance: float
    holds: bool
    meaningful: bool  # epsilon + epsilon_t <= 1, else the accuracy claim is vacuous


def noise_theorem_check(
    pair: NoisyEnsemblePair,
    t: int,
    tolerance: float = 0.02,
    strength_samples: int = 16,
) -> NoiseTheoremReport:
    """Check the additive noise bound: noisy design error <= eps + eps_t.

    eps and eps' are the entangled-probe trace-distance proxies of the clean
    and noisy ensembles; eps_t is the largest t-fold noise strength over
    draw-aligned member pairs.
    """
    t = int(t)
    eps = design_error(pair.clean, t).probe_trace
    eps_prime = design_error(pair.noisy, t).probe_trace
    count = min(int(strength_samples), pair.clean.budget or strength_samples)
    eps_t = 0.0
    for i in range(count):
        u, v = pair.pair_at(i)
        eps_t = max(eps_t, noise_strength(u, v, t))
    holds = eps_prime <= eps + eps_t + tolerance
    return NoiseTheoremReport(
        t=t,
        epsilon=float(eps),
        epsilon_t=float(eps_t),
        epsilon_prime=float(eps_prime),
        tolerance=float(tolerance),
        holds=bool(holds),
        meaningful=bool(eps + eps_t <= 1.0),
    )


# ---------------------------------------------------------------------------
# CRP store (JSON-lines)


def _complex_pairs(vec: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in vec]


def _matrix_pairs(mat: np.ndarray) -> list:
    return [_complex_pairs(row) for row in mat]


def crp_record(challenge: PureState, response, n_qubits: int) -> dict:
    """One CRP store record; pure responses use 'response', mixed 'response_dm'."""
    rec = {"challenge": _complex_pairs(challenge.amplitudes)}
    if isinstance(response, PureState):
        rec["response"] = _complex_pairs(response.amplitudes)
    elif isinstance(response, DensityMatrix):
        rec["response_dm"] = _matrix_pairs(response.entries)
    else:
        raise ValidationError("response must be a PureState or DensityMatrix")
    rec["n_qubits"] = int(n_qubits)
    return rec


def write_crp_records(path, records, append: bool = True) -> None:
    mode = "a" if append else "w"
    with open(path, mode, encoding="ascii") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def _parse_complex_vector(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs])


def read_crp_records(path):
    """Parse a CRP store: yields (challenge, response, n_qubits) tuples."""
    out = []
    with open(path, encoding="ascii") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                challenge = PureState(_parse_complex_vector(doc["challenge"]))
                if "response" in doc:
                    response = PureState(_parse_complex_vector(doc["response"]))
                elif "response_dm" in doc:
                    response = DensityMatrix(
                        np.array([_parse_complex_vector(row) for row in doc["response_dm"]])
                    )
                else:
                    raise KeyError("response")
                out.append((challenge, response, int(doc["n_qubits"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as exc:
                raise FormatError(f"bad CRP record at line {line_no}: {exc}") from exc
    return out
