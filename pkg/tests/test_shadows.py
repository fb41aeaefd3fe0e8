import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowproj.paulis import PauliString, WeightedPauliSum
from shadowproj.shadows import (ClassicalShadow, Snapshot, acquire_shadow,
                                estimate, iter_snapshot_distribution,
                                load_shadow, qubit_trace_factor,
                                reconstruct_density, save_shadow,
                                snapshot_density)
from shadowproj.statevector import (H, Statevector, apply_gate,
                                    exact_expectation, prepare_basis_state)


def random_state(q, seed=0):
    gen = np.random.default_rng(seed)
    v = gen.normal(size=2 ** q) + 1j * gen.normal(size=2 ** q)
    return Statevector(v / np.linalg.norm(v))


def fig2_state():
    state = prepare_basis_state(2)
    for j in range(2):
        state = apply_gate(state, H, j)
    return state


def single(letter, q=1, qubit=0):
    return WeightedPauliSum(q, ((1.0, PauliString.single(q, qubit, letter)),))


# --- Table-1 kernel ---------------------------------------------------------

def test_trace_factor_full_table():
    """All 12 cells of the per-qubit outcome table, both outcome states."""
    expected = {
        ("X", "I"): (1, 1), ("X", "X"): (3, -3),
        ("X", "Y"): (0, 0), ("X", "Z"): (0, 0),
        ("Y", "I"): (1, 1), ("Y", "X"): (0, 0),
        ("Y", "Y"): (3, -3), ("Y", "Z"): (0, 0),
        ("Z", "I"): (1, 1), ("Z", "X"): (0, 0),
        ("Z", "Y"): (0, 0), ("Z", "Z"): (3, -3),
    }
    for (basis, p), (on_zero, on_one) in expected.items():
        assert qubit_trace_factor(basis, 0, p) == on_zero
        assert qubit_trace_factor(basis, 1, p) == on_one


def test_trace_factor_matches_dense_trace():
    from shadowproj.paulis import PAULI_MATRICES
    from shadowproj.statevector import BASIS_ROTATIONS
    for basis in "XYZ":
        u = BASIS_ROTATIONS[basis]
        for bit in (0, 1):
            v = u.conj().T[:, bit]
            r = np.outer(v, v.conj())
            for p in "IXYZ":
                dense = np.trace(PAULI_MATRICES[p] @ (3 * r - np.eye(2)))
                assert qubit_trace_factor(basis, bit, p) == pytest.approx(
                    dense.real, abs=1e-12)
                assert abs(dense.imag) < 1e-12


# --- acquisition ------------------------------------------------------------

def test_acquire_prescribed_all_z_on_zero_state():
    state = prepare_basis_state(1)
    shadow = acquire_shadow(state, 3, seed=0, bases=[["Z"]] * 3)
    assert shadow.prescribed
    assert all(s.outcome == (0,) for s in shadow.snapshots)


def test_acquire_uniform_basis_frequencies():
    state = fig2_state()
    shadow = acquire_shadow(state, 10_000, seed=42)
    counts = {}
    for snap in shadow.snapshots:
        counts[snap.bases] = counts.get(snap.bases, 0) + 1
    assert len(counts) == 9
    for v in counts.values():
        assert abs(v / 10_000 - 1 / 9) < 0.01


def test_acquire_deterministic_in_seed():
    state = random_state(3, 1)
    a = acquire_shadow(state, 50, seed=5)
    b = acquire_shadow(state, 50, seed=5)
    c = acquire_shadow(state, 50, seed=6)
    assert a.snapshots == b.snapshots
    assert a.snapshots != c.snapshots


def test_snapshot_streams_independent_of_count():
    """Snapshot n only depends on (seed, n), not on how many are taken."""
    state = random_state(2, 2)
    small = acquire_shadow(state, 10, seed=9)
    large = acquire_shadow(state, 200, seed=9)
    assert large.snapshots[:10] == small.snapshots


def test_shadow_requires_snapshot():
    with pytest.raises(ValueError):
        ClassicalShadow(1, (), seed=0)


# --- estimation -------------------------------------------------------------

def test_estimate_prescribed_all_z_gives_plus_one():
    state = prepare_basis_state(1)
    shadow = acquire_shadow(state, 5, seed=0, bases=[["Z"]] * 5)
    assert estimate(shadow, single("Z")) == pytest.approx(1.0)


def test_estimate_identity_is_exactly_one():
    state = random_state(2, 3)
    shadow = acquire_shadow(state, 17, seed=1)
    ident = WeightedPauliSum.identity(2)
    assert estimate(shadow, ident) == 1.0
    prescribed = acquire_shadow(state, 4, seed=1, bases=[["Z", "Z"]] * 4)
    assert estimate(prescribed, ident) == 1.0


def test_estimate_fig2_observables_against_oracle():
    state = fig2_state()
    shadow = acquire_shadow(state, 10_000, seed=1234)
    for letter, qubit in (("X", 0), ("X", 1), ("Z", 0)):
        obs = single(letter, q=2, qubit=qubit)
        assert estimate(shadow, obs) == pytest.approx(
            exact_expectation(state, obs), abs=0.1)


def test_estimate_only_uses_matching_snapshots():
    # a Z-basis-only shadow gives exactly 0 for any X observable
    state = fig2_state()
    shadow = acquire_shadow(state, 20, seed=0, bases=[["Z", "Z"]] * 20)
    random_style = ClassicalShadow(2, shadow.snapshots, 0, prescribed=False)
    assert estimate(random_style, single("X", q=2)) == 0.0


def test_estimate_prescribed_raises_on_uncovered_term():
    state = prepare_basis_state(2)
    shadow = acquire_shadow(state, 5, seed=0, bases=[["Z", "Z"]] * 5)
    with pytest.raises(ValueError):
        estimate(shadow, single("X", q=2))


def test_estimate_unbiased_by_enumeration():
    """Probability-weighted enumeration reproduces the exact expectation."""
    for q in (1, 2, 3):
        state = random_state(q, seed=10 + q)
        gen = np.random.default_rng(q)
        obs = WeightedPauliSum(q, tuple(
            (float(gen.normal()),
             PauliString(tuple(gen.choice(list("IXYZ"), q))))
            for _ in range(3)))
        acc = 0.0
        for snap, prob in iter_snapshot_distribution(state):
            shadow = ClassicalShadow(q, (snap,), 0)
            acc += prob * estimate(shadow, obs)
        assert acc == pytest.approx(exact_expectation(state, obs), abs=1e-10)


def test_prescribed_estimator_unbiased_by_enumeration():
    """For a fixed basis row, outcome-weighted enumeration of the direct
    estimator reproduces the exact expectation of every compatible term."""
    from shadowproj.statevector import rotate_to_bases
    state = random_state(2, seed=6)
    bases = ("X", "Z")
    obs = WeightedPauliSum(2, (
        (0.8, PauliString(("X", "I"))),
        (-0.4, PauliString(("I", "Z"))),
        (1.1, PauliString(("X", "Z"))),
    ))
    probs = rotate_to_bases(state, bases).probabilities()
    acc = 0.0
    for k in range(4):
        if probs[k] == 0.0:
            continue
        snap = Snapshot(bases, (k & 1, (k >> 1) & 1))
        shadow = ClassicalShadow(2, (snap,), 0, prescribed=True)
        acc += probs[k] * estimate(shadow, obs)
    assert acc == pytest.approx(exact_expectation(state, obs), abs=1e-12)


def test_median_of_means_close_to_mean():
    state = fig2_state()
    shadow = acquire_shadow(state, 3000, seed=3)
    obs = single("X", q=2)
    plain = estimate(shadow, obs)
    robust = estimate(shadow, obs, median_groups=5)
    assert abs(plain - exact_expectation(state, obs)) < 0.2
    assert abs(robust - exact_expectation(state, obs)) < 0.3


# --- density reconstruction -------------------------------------------------

def test_reconstruct_eigenstate_prescribed_z():
    state = prepare_basis_state(1)
    shadow = acquire_shadow(state, 10, seed=0, bases=[["Z"]] * 10)
    rho = reconstruct_density(shadow)
    # channel inversion is exact only on average over bases; for an
    # all-Z shadow of |0> each snapshot density is diag(2, -1) + |0><0| terms
    assert rho[0, 0].real > rho[1, 1].real
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-10)


def test_reconstruct_density_properties():
    state = random_state(2, 7)
    shadow = acquire_shadow(state, 500, seed=7)
    rho = reconstruct_density(shadow)
    assert np.allclose(rho, rho.conj().T, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)


def test_reconstruct_density_guard():
    state = random_state(5, 1)
    shadow = acquire_shadow(state, 2, seed=1)
    with pytest.raises(ValueError):
        reconstruct_density(shadow)


def test_channel_inversion_exact_by_enumeration():
    for q in (1, 2, 3):
        state = random_state(q, seed=20 + q)
        rho = state.density_matrix()
        acc = np.zeros_like(rho)
        for snap, prob in iter_snapshot_distribution(state):
            acc += prob * snapshot_density(snap)
        assert np.max(np.abs(acc - rho)) < 1e-10


def test_fig2_reconstruction_error_is_finite_shot_noise():
    state = fig2_state()
    shadow = acquire_shadow(state, 1000, seed=2)
    rho = reconstruct_density(shadow)
    err = np.max(np.abs(rho - state.density_matrix()))
    assert 0.0 < err < 0.3


# --- serialization ----------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.lists(
    st.tuples(st.lists(st.sampled_from("XYZ"), min_size=3, max_size=3),
              st.lists(st.integers(0, 1), min_size=3, max_size=3)),
    min_size=1, max_size=12))
def test_shadow_file_roundtrip_property(tmp_path_factory, raw):
    snapshots = tuple(Snapshot(tuple(b), tuple(o)) for b, o in raw)
    shadow = ClassicalShadow(3, snapshots, seed=5)
    path = tmp_path_factory.mktemp("shadow") / "s.txt"
    save_shadow(shadow, path)
    again = load_shadow(path)
    assert again.snapshots == shadow.snapshots


def test_shadow_file_roundtrip(tmp_path):
    state = random_state(3, 5)
    shadow = acquire_shadow(state, 25, seed=77)
    path = tmp_path / "shadow.txt"
    save_shadow(shadow, path)
    text = path.read_text().splitlines()
    assert text[0] == "q=3 M=25 seed=77"
    letters, bits = text[1].split()
    assert len(letters) == 3 and len(bits) == 3
    again = load_shadow(path)
    assert again.snapshots == shadow.snapshots
    assert again.seed == 77
    assert not again.prescribed
    assert load_shadow(path, prescribed=True).prescribed
