"""State-vector algebra: states, ensembles, unitaries, measurement, entropy."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from qscode.error_handler import (  # noqa: E402
    DimensionMismatch,
    ImpossibleOutcome,
    InvariantViolation,
    UsageError,
)
from qscode.quantum_core import (  # noqa: E402
    VACUUM,
    Ensemble,
    PureState,
    UnitaryMatrix,
    apply_unitary,
    basis_state,
    compression_limit,
    computational_labels,
    density_matrix,
    fidelity,
    identity,
    project_qubit,
    shannon_entropy,
    tensor,
    tensor_all,
    von_neumann_entropy,
    von_neumann_entropy_letter,
)


def test_computational_labels_are_big_endian():
    assert computational_labels(8) == ('000', '001', '010', '011', '100', '101', '110', '111')


def test_pure_state_rejects_bad_input():
    with pytest.raises(InvariantViolation):
        PureState([1.0, 1.0])
    with pytest.raises(InvariantViolation):
        PureState([1.0, 0.0, 0.0])
    with pytest.raises(InvariantViolation):
        PureState([np.nan, 1.0])


def test_from_unnormalized():
    s = PureState.from_unnormalized([3.0, 4.0])
    assert s.amplitude('0') == pytest.approx(0.6)
    with pytest.raises(ImpossibleOutcome):
        PureState.from_unnormalized([0.0, 0.0])


def test_amplitudes_are_read_only():
    s = basis_state('01')
    with pytest.raises(ValueError):
        s.amps[0] = 1.0


def test_tensor_ordering():
    s = tensor(basis_state('1'), basis_state('0'))
    assert s.amplitude('10') == 1
    assert tensor_all([basis_state('0'), basis_state('1'), basis_state('1')]) == basis_state('011')
    with pytest.raises(UsageError):
        tensor_all([])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        basis_state('0').inner(basis_state('00'))
    with pytest.raises(DimensionMismatch):
        apply_unitary(identity(4), basis_state('000'))


def test_unitary_checks():
    with pytest.raises(InvariantViolation):
        UnitaryMatrix([[1, 1], [0, 1]])
    swap = UnitaryMatrix.from_permutation({'01': '10', '10': '01'}, 4)
    assert (swap @ swap).isclose(identity(4))
    assert apply_unitary(swap, basis_state('01')) == basis_state('10')


def test_project_qubit_completeness():
    rng = np.random.default_rng(7)
    s = PureState.from_unnormalized(rng.normal(size=8) + 1j * rng.normal(size=8))
    for qubit in range(3):
        p0, _ = project_qubit(s, qubit, 0)
        p1, _ = project_qubit(s, qubit, 1)
        assert p0 + p1 == pytest.approx(1.0, abs=1e-12)


def test_project_qubit_post_state():
    s = PureState.from_unnormalized([1.0, 0.0, 0.0, 1.0])
    p, post = project_qubit(s, 0, 1)
    assert p == pytest.approx(0.5)
    assert post == basis_state('1')
    with pytest.raises(ImpossibleOutcome):
        project_qubit(basis_state('00'), 0, 1)
    with pytest.raises(UsageError):
        project_qubit(basis_state('0'), 0, 0)


def test_ensemble_validation():
    with pytest.raises(InvariantViolation):
        Ensemble(((0.5, basis_state('0')),))
    with pytest.raises(DimensionMismatch):
        Ensemble(((0.5, basis_state('0')), (0.5, basis_state('00'))))
    ens = Ensemble(((0.25, VACUUM), (0.75, basis_state('00'))))
    assert ens.dim == 4
    assert ens.vacuum_weight == pytest.approx(0.25)


def test_fidelity_skips_vacuum():
    target = basis_state('00')
    ens = Ensemble(((0.3, VACUUM), (0.7, target)))
    assert fidelity(target, ens) == pytest.approx(0.7)


def test_letter_entropy_value():
    """S at alpha^2 = 0.9 is 0.4690 bits."""
    assert von_neumann_entropy_letter(0.9) == pytest.approx(0.4690, abs=5e-5)
    assert compression_limit(0.9) == pytest.approx(3 * 0.4690, abs=2e-4)


def test_entropy_edges():
    assert shannon_entropy([1.0, 0.0]) == 0.0
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(1.0)
    with pytest.raises(UsageError):
        shannon_entropy([0.7, 0.7])


def test_von_neumann_matches_letter_entropy():
    alpha, beta = math.sqrt(0.9), math.sqrt(0.1)
    ens = Ensemble(((0.5, PureState([alpha, beta])), (0.5, PureState([alpha, -beta]))))
    rho = density_matrix(ens)
    np.testing.assert_allclose(rho, np.diag([0.9, 0.1]), atol=1e-12)
    assert von_neumann_entropy(rho) == pytest.approx(von_neumann_entropy_letter(0.9), abs=1e-12)


def _random_state(rng, dim):
    return PureState.from_unnormalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def _random_unitary(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return UnitaryMatrix(q * (np.diag(r) / np.abs(np.diag(r))))


def test_unitaries_preserve_norm():
    rng = np.random.default_rng(11)
    for _ in range(100):
        u = _random_unitary(rng, 8)
        s = _random_state(rng, 8)
        out = apply_unitary(u, s)
        assert np.linalg.norm(out.amps) == pytest.approx(1.0, abs=1e-12)
        assert out.inner(apply_unitary(u, basis_state('000'))) == pytest.approx(s.inner(basis_state('000')), abs=1e-12)


def test_fidelity_is_one_only_for_the_target():
    rng = np.random.default_rng(12)
    for _ in range(50):
        target = _random_state(rng, 8)
        assert fidelity(target, Ensemble.pure(target)) == pytest.approx(1.0, abs=1e-12)
        rotated = PureState(np.exp(0.7j) * target.amps)
        assert fidelity(target, Ensemble.pure(rotated)) == pytest.approx(1.0, abs=1e-12)
        other = _random_state(rng, 8)
        assert fidelity(target, Ensemble.pure(other)) < 1.0 - 1e-6
        mixed = Ensemble(((0.9, target), (0.1, other)))
        assert fidelity(target, mixed) < 1.0 - 1e-6


def test_shannon_entropy_maximum():
    assert shannon_entropy([1 / 8] * 8) == pytest.approx(3.0, abs=1e-12)
    rng = np.random.default_rng(13)
    for _ in range(20):
        p = rng.dirichlet(np.ones(8))
        assert shannon_entropy(p) <= 3.0 + 1e-12
