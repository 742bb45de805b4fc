"""Parallel-random-circuit QPUF construction.

A QPUF instance is described by a :class:`QpufDescriptor`: ``k`` brick
layers, each one a fair-coin choice between the two nearest-neighbour
pairings, with every acted-on pair carrying an independently random
two-qubit block ``CZ . (X(a+m1*pi) Z(b+m2*pi) (x) X(g+m3*pi) Z(d+m4*pi))``.
The descriptor fully determines the compiled unitary; compilation,
evaluation and a canonical JSON serialization live here too.

Conventions: rotations are ``exp(-i*theta*P/2)``; qubit 1 is the most
significant tensor factor; layer 1 is applied first (rightmost in the
matrix product).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError, UnknownVersionError, ValidationError
from .qmath import TWO_PI, DensityMatrix, UnitaryMatrix, kron
from .seeding import as_rng

__all__ = [
    "BlockParams",
    "LayerDescriptor",
    "QpufDescriptor",
    "SecurityParams",
    "DESCRIPTOR_VERSION",
    "MAX_QUBITS",
    "rot_x",
    "rot_z",
    "cz",
    "block_unitary",
    "pair_starts",
    "blocks_per_layer",
    "qgen",
    "compile_descriptor",
    "qeval",
    "serialize",
    "deserialize",
]

DESCRIPTOR_VERSION = 1
MAX_QUBITS = 12  # 2^12 = 4096 keeps dense compilation within the dimension guard

_PARITIES = ("even", "odd")


@dataclass(frozen=True)
class BlockParams:
    """Continuous angles and byproduct bits of one two-qubit block."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    m1: int
    m2: int
    m3: int
    m4: int

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "delta"):
            val = float(getattr(self, name))
            if not (0.0 <= val < TWO_PI):
                raise ValidationError(f"{name}={val} outside [0, 2*pi)")
            object.__setattr__(self, name, val)
        for name in ("m1", "m2", "m3", "m4"):
            bit = getattr(self, name)
            if bit not in (0, 1):
                raise ValidationError(f"{name}={bit} is not a bit")
            object.__setattr__(self, name, int(bit))

    @property
    def bits(self) -> tuple:
        return (self.m1, self.m2, self.m3, self.m4)

    @property
    def angles(self) -> tuple:
        return (self.alpha, self.beta, self.gamma, self.delta)


@dataclass(frozen=True)
class LayerDescriptor:
    """One brick layer: a pairing choice plus one block per acted-on pair."""

    parity: str
    blocks: tuple

    def __post_init__(self) -> None:
        if self.parity not in _PARITIES:
            raise ValidationError(f"unknown parity {self.parity!r}")
        object.__setattr__(self, "blocks", tuple(self.blocks))
        for b in self.blocks:
            if not isinstance(b, BlockParams):
                raise ValidationError("layer blocks must be BlockParams")


def pair_starts(n: int, parity: str) -> tuple:
    """0-indexed first qubits of the pairs acted on by a layer.

    Even pairing couples (1,2),(3,4),...; odd pairing couples (2,3),(4,5),...
    (1-indexed), for both even and odd ``n``.  An odd-pairing layer on n=2
    acts on no pair at all.
    """
    if parity not in _PARITIES:
        raise ValidationError(f"unknown parity {parity!r}")
    first = 0 if parity == "even" else 1
    return tuple(range(first, int(n) - 1, 2))


def blocks_per_layer(n: int, parity: str) -> int:
    return len(pair_starts(n, parity))


@dataclass(frozen=True)
class QpufDescriptor:
    """Complete identifier of one generated QPUF instance."""

    version: int
    n_qubits: int
    n_blocks: int
    layers: tuple
    master_seed: int  # provenance only; compilation ignores it

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.version != DESCRIPTOR_VERSION:
            raise UnknownVersionError(f"descriptor version {self.version} not supported")
        if self.n_qubits < 2:
            raise ValidationError("n_qubits must be >= 2")
        if self.n_blocks < 0:
            raise ValidationError("n_blocks must be >= 0")
        if len(self.layers) != self.n_blocks:
            raise ValidationError(
                f"descriptor lists {len(self.layers)} layers but n_blocks={self.n_blocks}"
            )
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValidationError("master_seed must fit in 64 bits")
        for layer in self.layers:
            if not isinstance(layer, LayerDescriptor):
                raise ValidationError("layers must be LayerDescriptor instances")
            want = blocks_per_layer(self.n_qubits, layer.parity)
            if len(layer.blocks) != want:
                raise ValidationError(
                    f"{layer.parity}-pairing layer on {self.n_qubits} qubits "
                    f"needs {want} blocks, got {len(layer.blocks)}"
                )

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


@dataclass(frozen=True)
class SecurityParams:
    """Threshold bundle (robustness / collision / uniqueness / design accuracy)."""

    delta_r: float
    delta_c: float
    delta_u: float
    epsilon: float
    t: int

    def __post_init__(self) -> None:
        for name in ("delta_r", "delta_c", "delta_u"):
            val = float(getattr(self, name))
            if not (0.0 <= val <= 2.0):
                raise ValidationError(f"{name}={val} outside [0, 2]")
            object.__setattr__(self, name, val)
        if not (0.0 < self.epsilon < 1.0):
            raise ValidationError("epsilon must lie in (0, 1)")
        if int(self.t) < 1:
            raise ValidationError("t must be a positive integer")
        object.__setattr__(self, "t", int(self.t))
        # The source text's constraint sentence is garbled; we enforce the
        # evidently intended delta_r <= delta_c alongside delta_r <= delta_u.
        if self.delta_r > self.delta_c or self.delta_r > self.delta_u:
            raise ValidationError("require delta_r <= delta_c and delta_r <= delta_u")


def rot_x(theta: float) -> UnitaryMatrix:
    """X rotation exp(-i*theta*X/2)."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return UnitaryMatrix([[c, -1j * s], [-1j * s, c]])


def rot_z(theta: float) -> UnitaryMatrix:
    """Z rotation exp(-i*theta*Z/2)."""
    return UnitaryMatrix(np.diag([np.exp(-1j * theta / 2.0), np.exp(1j * theta / 2.0)]))


def cz() -> UnitaryMatrix:
    """Controlled-Z on two qubits."""
    return UnitaryMatrix(np.diag([1.0, 1.0, 1.0, -1.0]))


def block_unitary(p: BlockParams) -> UnitaryMatrix:
    """Compile one two-qubit block: CZ after per-qubit X,Z rotations."""
    top = rot_x(p.alpha + p.m1 * np.pi) @ rot_z(p.beta + p.m2 * np.pi)
    bottom = rot_x(p.gamma + p.m3 * np.pi) @ rot_z(p.delta + p.m4 * np.pi)
    return cz() @ kron(top, bottom)


def qgen(n: int, k: int, rng, master_seed: int | None = None) -> QpufDescriptor:
    """Generate a QPUF descriptor: ``k`` layers of the parallel random circuit.

    Each layer's pairing is an independent fair coin; each block draws four
    angles i.i.d. uniform on [0, 2*pi) and four fair bits.  ``rng`` may be a
    Generator or an int seed; an int seed is also recorded as provenance
    unless ``master_seed`` overrides it.
    """
    n, k = int(n), int(k)
    if n < 2:
        raise ValueError("qgen requires n >= 2 qubits")
    if k < 0:
        raise ValueError("qgen requires k >= 0 layers")
    if master_seed is None:
        master_seed = rng if isinstance(rng, (int, np.integer)) else 0
    gen = as_rng(rng)
    layers = []
    for _ in range(k):
        parity = _PARITIES[int(gen.integers(2))]
        blocks = []
        for _ in pair_starts(n, parity):
            a, b, g, d = gen.uniform(0.0, TWO_PI, size=4)
            m1, m2, m3, m4 = (int(x) for x in gen.integers(0, 2, size=4))
            blocks.append(BlockParams(a, b, g, d, m1, m2, m3, m4))
        layers.append(LayerDescriptor(parity, tuple(blocks)))
    return QpufDescriptor(
        version=DESCRIPTOR_VERSION,
        n_qubits=n,
        n_blocks=k,
        layers=tuple(layers),
        master_seed=int(master_seed),
    )


def _layer_unitary(n: int, layer: LayerDescriptor) -> UnitaryMatrix:
    starts = set(pair_starts(n, layer.parity))
    factors = []
    block_iter = iter(layer.blocks)
    q = 0
    while q < n:
        if q in starts:
            factors.append(block_unitary(next(block_iter)))
            q += 2
        else:
            factors.append(UnitaryMatrix.identity(2))
            q += 1
    out = factors[0]
    for f in factors[1:]:
        out = kron(out, f)
    return out


def compile_descriptor(desc: QpufDescriptor) -> UnitaryMatrix:
    """Compile a descriptor to its dense 2^n x 2^n unitary.

    The result is a pure function of the descriptor: identical descriptors
    compile to bit-identical matrices.
    """
    if desc.n_qubits > MAX_QUBITS:
        raise DimensionError(f"compilation limited to {MAX_QUBITS} qubits, got {desc.n_qubits}")
    total = np.eye(desc.dim, dtype=complex)
    for layer in desc.layers:
        total = _layer_unitary(desc.n_qubits, layer).entries @ total
    return UnitaryMatrix(total)


def qeval(u: UnitaryMatrix, rho_in: DensityMatrix) -> DensityMatrix:
    """Evaluate the QPUF channel: rho -> U rho U†."""
    if u.dim != rho_in.dim:
        raise DimensionError(f"unitary dim {u.dim} vs state dim {rho_in.dim}")
    return DensityMatrix(u.entries @ rho_in.entries @ u.entries.conj().T)


def _fmt_float(x: float) -> str:
    # 17 significant digits guarantee exact float round-trip.
    return format(float(x), ".17g")


def serialize(desc: QpufDescriptor) -> bytes:
    """Canonical JSON encoding: fixed field order, 17-significant-digit floats.

    Byte-identical for equal descriptors, so the output doubles as the
    hashing preimage for content addressing.
    """
    parts = [
        '{"version":%d,"n_qubits":%d,"n_blocks":%d,"master_seed":%d,"layers":['
        % (desc.version, desc.n_qubits, desc.n_blocks, desc.master_seed)
    ]
    layer_chunks = []
    for layer in desc.layers:
        block_chunks = []
        for b in layer.blocks:
            block_chunks.append(
                '{"alpha":%s,"beta":%s,"gamma":%s,"delta":%s,"m":[%d,%d,%d,%d]}'
                % (
                    _fmt_float(b.alpha),
                    _fmt_float(b.beta),
                    _fmt_float(b.gamma),
                    _fmt_float(b.delta),
                    b.m1,
                    b.m2,
                    b.m3,
                    b.m4,
                )
            )
        layer_chunks.append(
            '{"parity":"%s","blocks":[%s]}' % (layer.parity, ",".join(block_chunks))
        )
    parts.append(",".join(layer_chunks))
    parts.append("]}")
    return "".join(parts).encode("ascii")


def deserialize(payload: bytes) -> QpufDescriptor:
    """Parse a serialized descriptor, validating structure and version."""
    try:
        doc = json.loads(payload)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed descriptor payload: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("descriptor payload must be a JSON object")
    version = doc.get("version")
    if not isinstance(version, int):
        raise FormatError("descriptor missing integer 'version' field")
    if version != DESCRIPTOR_VERSION:
        raise UnknownVersionError(f"descriptor version {version} not supported")
    try:
        layers = []
        for layer_doc in doc["layers"]:
            blocks = tuple(
                BlockParams(
                    float(b["alpha"]),
                    float(b["beta"]),
                    float(b["gamma"]),
                    float(b["delta"]),
                    *(int(m) for m in b["m"]),
                )
                for b in layer_doc["blocks"]
            )
            layers.append(LayerDescriptor(str(layer_doc["parity"]), blocks))
        return QpufDescriptor(
            version=version,
            n_qubits=int(doc["n_qubits"]),
            n_blocks=int(doc["n_blocks"]),
            layers=tuple(layers),
            master_seed=int(doc["master_seed"]),
        )
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise FormatError(f"invalid descriptor structure: {exc}") from exc
