"""Dense statevector simulation for small registers.

Ground truth for everything else: state preparation, gate application,
exact (projected) expectation values and exact Born-rule sampling in
rotated measurement bases. Amplitude index k encodes the bitstring
b_{q-1}..b_0 with qubit 0 as the least significant bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng
from .paulis import PAULI_MATRICES, PauliString, WeightedPauliSum

MAX_QUBITS = 12
NORM_TOLERANCE = 1e-10

H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2)
S = np.array([[1.0, 0.0], [0.0, 1.0j]], dtype=complex)
SDG = S.conj().T
X = PAULI_MATRICES["X"]
Y = PAULI_MATRICES["Y"]
Z = PAULI_MATRICES["Z"]
I2 = PAULI_MATRICES["I"]
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                dtype=complex)
CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

# Basis-change unitaries U applied before a computational-basis measurement,
# chosen so that U^dag Z U is the measured Pauli: H for X, H S^dag for Y.
BASIS_ROTATIONS = {"X": H, "Y": H @ SDG, "Z": I2}


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def phase_gate(phi: float) -> np.ndarray:
    """diag(1, e^{i phi}); the authoritative definition of Q(phi)."""
    return np.diag([1.0, np.exp(1j * phi)])


class EmptySectorError(ValueError):
    """Projection norm too small for a meaningful projected expectation."""


@dataclass(frozen=True)
class Statevector:
    """Normalized amplitude vector over 2**num_qubits basis states."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise ValueError("amplitude count must be a power of two >= 2")
        q = amps.size.bit_length() - 1
        if q > MAX_QUBITS:
            raise ValueError(f"q={q} exceeds the dense ceiling of {MAX_QUBITS}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"state not normalized: |psi| = {norm}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_json(self) -> str:
        return json.dumps([[a.real, a.imag] for a in self.amplitudes])

    @classmethod
    def from_json(cls, text: str) -> "Statevector":
        pairs = json.loads(text)
        return cls(np.array([complex(re, im) for re, im in pairs]))


def prepare_basis_state(num_qubits: int, index: int = 0) -> Statevector:
    amps = np.zeros(2 ** num_qubits, dtype=complex)
    amps[index] = 1.0
    return Statevector(amps)


def prepare_normalized(amplitudes: Sequence[complex]) -> Statevector:
    amps = np.asarray(amplitudes, dtype=complex)
    return Statevector(amps / np.linalg.norm(amps))


def prepare_gaussian(num_qubits: int, mu: float | None = None,
                     sigma: float | None = None,
                     squared: bool = False) -> Statevector:
    """Gaussian-profile amplitudes over the register index k.

    The default exponent is the first power of (k - mu)/sigma; pass
    ``squared=True`` for the conventional squared form. Defaults follow
    mu = (2**q - 1)/2 and sigma = mu/3.
    """
    if mu is None:
        mu = (2 ** num_qubits - 1) / 2
    if sigma is None:
        sigma = mu / 3
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    k = np.arange(2 ** num_qubits, dtype=float)
    arg = (k - mu) / sigma
    if squared:
        arg = arg ** 2
    return prepare_normalized(np.exp(-0.5 * arg))


def prepare_product_state(thetas: Sequence[float]) -> Statevector:
    """Product state ry(theta_j)|0> on each qubit j."""
    amps = np.array([1.0 + 0j])
    for theta in reversed(list(thetas)):
        qubit = np.array([math.cos(theta / 2), math.sin(theta / 2)],
                         dtype=complex)
        amps = np.kron(amps, qubit)
    return Statevector(amps)


def prepare_parity_mixture(num_qubits: int, p_even: float,
                           seed: int = 0) -> Statevector:
    """Pseudo-random state with an exact even-parity probability ``p_even``."""
    if not 0.0 < p_even < 1.0:
        raise ValueError("p_even must be strictly between 0 and 1")
    gen = _rng.stream(seed, 0x5747)
    vec = gen.normal(size=2 ** num_qubits) + 1j * gen.normal(size=2 ** num_qubits)
    ones = np.array([bin(k).count("1") for k in range(2 ** num_qubits)])
    even = vec * (ones % 2 == 0)
    odd = vec * (ones % 2 == 1)
    even /= np.linalg.norm(even)
    odd /= np.linalg.norm(odd)
    return Statevector(math.sqrt(p_even) * even + math.sqrt(1 - p_even) * odd)


def apply_gate(state: Statevector, matrix: np.ndarray,
               targets: int | Sequence[int]) -> Statevector:
    """Apply a k-qubit gate; targets[0] is the gate's most significant index."""
    if isinstance(targets, (int, np.integer)):
        targets = (int(targets),)
    targets = tuple(int(t) for t in targets)
    q = state.num_qubits
    if any(t < 0 or t >= q for t in targets):
        raise IndexError(f"target out of range for q={q}: {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate targets")
    t = len(targets)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2 ** t, 2 ** t):
        raise ValueError(f"gate shape {matrix.shape} does not match targets")
    psi = state.amplitudes.reshape((2,) * q)
    axes = [q - 1 - j for j in targets]
    psi = np.moveaxis(psi, axes, range(t))
    rest = psi.shape[t:]
    psi = (matrix @ psi.reshape(2 ** t, -1)).reshape((2,) * t + rest)
    psi = np.moveaxis(psi, range(t), axes)
    return Statevector(psi.reshape(-1))


def _apply_pauli(amps: np.ndarray, string: PauliString) -> np.ndarray:
    q = string.num_qubits
    psi = amps.reshape((2,) * q)
    for j in string.support():
        axis = q - 1 - j
        psi = np.moveaxis(psi, axis, 0)
        psi = np.tensordot(PAULI_MATRICES[string.letters[j]], psi, axes=(1, 0))
        psi = np.moveaxis(psi, 0, axis)
    return string.phase * psi.reshape(-1)


def exact_expectation(state: Statevector, obs: WeightedPauliSum) -> float:
    """sum_a gamma_a <psi|O_a|psi>; raises if the result is not real."""
    if obs.num_qubits != state.num_qubits:
        raise ValueError("observable and state qubit counts differ")
    total = 0j
    for coeff, string in obs.terms:
        total += coeff * np.vdot(state.amplitudes, _apply_pauli(state.amplitudes, string))
    if abs(total.imag) > 1e-10:
        raise ValueError(f"non-Hermitian expectation: imag = {total.imag}")
    return float(total.real)


def exact_projected_expectation(state: Statevector, obs: WeightedPauliSum,
                                proj: np.ndarray,
                                idem_tol: float = 1e-10
                                ) -> tuple[float, float]:
    """(<psi|P O P|psi>, <psi|P|psi>) for an idempotent Hermitian P."""
    proj = np.asarray(proj, dtype=complex)
    dim = 2 ** state.num_qubits
    if proj.shape != (dim, dim):
        raise ValueError("projector dimension does not match the state")
    if np.max(np.abs(proj @ proj - proj)) > idem_tol:
        raise ValueError("projector is not idempotent within tolerance")
    if np.max(np.abs(proj - proj.conj().T)) > idem_tol:
        raise ValueError("projector is not Hermitian within tolerance")
    phi = proj @ state.amplitudes
    norm = float(np.vdot(state.amplitudes, phi).real)
    if norm < 1e-12:
        raise EmptySectorError(f"projected norm {norm} below 1e-12")
    total = 0j
    for coeff, string in obs.terms:
        total += coeff * np.vdot(phi, _apply_pauli(phi, string))
    if abs(total.imag) > 1e-10:
        raise ValueError(f"non-Hermitian projected expectation: {total.imag}")
    return float(total.real), norm


def exact_projected_linear(state: Statevector, obs: WeightedPauliSum,
                           proj: np.ndarray) -> tuple[float, float]:
    """(Tr[O P rho], Tr[P rho]) with a single projector application.

    This is the quantity the shadow-side projected estimator targets. For an
    exactly idempotent P commuting with O it coincides with
    :func:`exact_projected_expectation`; for a discretized projector it is
    the honest linear functional of that matrix.
    """
    proj = np.asarray(proj, dtype=complex)
    phi = proj @ state.amplitudes
    norm = np.vdot(state.amplitudes, phi).real
    total = 0j
    for coeff, string in obs.terms:
        total += coeff * np.vdot(state.amplitudes, _apply_pauli(phi, string))
    return float(total.real), float(norm)


def rotate_to_bases(state: Statevector, bases: Sequence[str]) -> Statevector:
    """Apply the per-qubit basis-change unitary (H, H S^dag or I)."""
    if len(bases) != state.num_qubits:
        raise ValueError("need one basis letter per qubit")
    out = state
    for j, basis in enumerate(bases):
        if basis == "Z":
            continue
        out = apply_gate(out, BASIS_ROTATIONS[basis], j)
    return out


def sample_bitstrings(state: Statevector, bases: Sequence[str], shots: int,
                      gen: np.random.Generator) -> np.ndarray:
    """(shots, q) array of outcome bits; column j is qubit j."""
    rotated = rotate_to_bases(state, bases)
    probs = rotated.probabilities()
    idx = gen.choice(probs.size, size=shots, p=probs)
    q = state.num_qubits
    return ((idx[:, None] >> np.arange(q)) & 1).astype(np.uint8)


def bits_to_string(bits: Sequence[int]) -> str:
    """Render per-qubit bits as b_{q-1}..b_0, most significant leftmost."""
    return "".join(str(int(b)) for b in reversed(list(bits)))


def string_to_bits(text: str) -> tuple[int, ...]:
    return tuple(int(c) for c in reversed(text.strip()))


def sample_in_bases(state: Statevector, bases: Sequence[str],
                    rng_seed: int | np.random.Generator) -> str:
    """One Born-rule outcome measured after rotating into ``bases``."""
    gen = (rng_seed if isinstance(rng_seed, np.random.Generator)
           else _rng.stream(int(rng_seed)))
    bits = sample_bitstrings(state, bases, 1, gen)[0]
    return bits_to_string(bits)
