"""Block coding: codewords, the compression unitary and the P1/P2/P3 fidelities."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from qscode.coding import (  # noqa: E402
    ALL_LABELS,
    BlockLabel,
    LetterSign,
    Protocol,
    SourceParam,
    analytic_fidelity,
    block_state,
    coding_unitary,
    crossover_alpha_sq,
    decode,
    encode,
    encode_p3,
    failure_probability,
    letter_ensemble,
    mu_state,
    numeric_fidelity,
    nu_state,
    per_label_fidelity,
    success_probability,
)
from qscode.error_handler import UndefinedLetterState, UsageError  # noqa: E402
from qscode.quantum_core import (  # noqa: E402
    VACUUM,
    Ensemble,
    apply_unitary,
    basis_state,
    density_matrix,
    fidelity,
    identity,
    tensor,
    von_neumann_entropy,
)

ORACLE_GRID = np.linspace(0.01, 1.0, 50)


def test_label_order():
    assert [str(label) for label in ALL_LABELS] == ['+++', '++-', '+-+', '+--', '-++', '-+-', '--+', '---']
    assert [label.index for label in ALL_LABELS] == list(range(8))
    assert BlockLabel.parse('-+-') == ALL_LABELS[5]
    with pytest.raises(UsageError):
        BlockLabel.parse('+*+')


def test_source_param_range():
    with pytest.raises(UsageError):
        SourceParam.from_alpha_sq(1.2)
    assert SourceParam.from_alpha_sq(0.9).beta_sq == pytest.approx(0.1)


@pytest.mark.parametrize("protocol,expected", [
    (Protocol.P1, 0.9448),
    (Protocol.P2, 0.9652),
    (Protocol.P3, 0.9),
])
def test_analytic_values_at_point_nine(protocol, expected):
    param = SourceParam.from_alpha_sq(0.9)
    assert analytic_fidelity(param, protocol) == pytest.approx(expected, abs=5e-5)


def test_analytic_p1_at_half():
    assert analytic_fidelity(SourceParam.from_alpha_sq(0.5), Protocol.P1) == pytest.approx(0.25)


def test_branch_completeness():
    for alpha in np.linspace(0.0, 1.0, 1000):
        param = SourceParam(alpha)
        assert abs(success_probability(param) + failure_probability(param) - 1.0) < 1e-12


def test_success_probability_example():
    assert success_probability(SourceParam.from_alpha_sq(0.9)) == pytest.approx(0.972)


def test_coding_unitary():
    u = coding_unitary()
    assert apply_unitary(u, basis_state('011')) == basis_state('100')
    assert apply_unitary(u, basis_state('000')) == basis_state('000')
    assert (u @ u).isclose(identity(8))


@pytest.mark.parametrize("alpha_sq", [0.2, 0.5, 0.9, 0.37])
def test_mu_nu_reconstruction(alpha_sq):
    param = SourceParam.from_alpha_sq(alpha_sq)
    a2, b2 = param.alpha_sq, param.beta_sq
    for label in ALL_LABELS:
        coded = apply_unitary(coding_unitary(), block_state(param, label))
        expected = (
            a2 * math.sqrt(1 + 2 * b2) * tensor(basis_state('0'), mu_state(param, label)).amps
            + b2 * math.sqrt(1 + 2 * a2) * tensor(basis_state('1'), nu_state(param, label)).amps
        )
        np.testing.assert_allclose(coded.amps, expected, atol=1e-10)


def test_mu_leading_amplitude():
    param = SourceParam.from_alpha_sq(0.9)
    mu = mu_state(param, ALL_LABELS[0])
    assert mu.amplitude('00') == pytest.approx(param.alpha / math.sqrt(1.2))


def test_nu_undefined_at_beta_zero():
    with pytest.raises(UndefinedLetterState):
        nu_state(SourceParam(1.0), ALL_LABELS[0])


def test_encode_ensembles():
    param = SourceParam.from_alpha_sq(0.9)
    label = ALL_LABELS[3]
    p1 = encode(param, label, Protocol.P1)
    p2 = encode(param, label, Protocol.P2)
    assert p1.success_prob == pytest.approx(0.972)
    assert p1.channel.members[0] == p2.channel.members[0]
    assert p1.channel.members[1][1] is VACUUM
    assert p2.channel.members[1][1] == basis_state('00')
    with pytest.raises(UsageError):
        encode(param, label, Protocol.P3)


def test_decode_keeps_weights():
    param = SourceParam.from_alpha_sq(0.6)
    channel = encode(param, ALL_LABELS[6], Protocol.P2).channel
    decoded = decode(channel)
    assert decoded.weights == channel.weights
    assert decode(Ensemble.pure(basis_state('00'))).members[0][1] == basis_state('000')


def test_p1_fidelity_is_p_squared():
    param = SourceParam.from_alpha_sq(0.75)
    p = success_probability(param)
    for label in ALL_LABELS:
        target = block_state(param, label)
        decoded = decode(encode(param, label, Protocol.P1).channel)
        assert fidelity(target, decoded) == pytest.approx(p * p, abs=1e-12)


def test_p3_is_label_independent():
    param = SourceParam.from_alpha_sq(0.9)
    values = [per_label_fidelity(param, label, Protocol.P3) for label in ALL_LABELS]
    assert values == pytest.approx([0.9] * 8, abs=1e-12)
    channel, reconstructed = encode_p3(param, ALL_LABELS[0])
    assert channel.dim == 4 and reconstructed.dim == 8


@pytest.mark.parametrize("protocol", [Protocol.P1, Protocol.P2, Protocol.P3])
def test_numeric_matches_analytic(protocol):
    for alpha_sq in ORACLE_GRID:
        param = SourceParam.from_alpha_sq(float(alpha_sq))
        assert abs(numeric_fidelity(param, protocol) - analytic_fidelity(param, protocol)) < 1e-10


@pytest.mark.parametrize("protocol", [Protocol.P1, Protocol.P2, Protocol.P3])
def test_label_symmetry(protocol):
    param = SourceParam.from_alpha_sq(0.42)
    values = [per_label_fidelity(param, label, protocol) for label in ALL_LABELS]
    assert max(values) - min(values) < 1e-12


def test_endpoint_alpha_one():
    param = SourceParam(1.0)
    for protocol in Protocol:
        assert numeric_fidelity(param, protocol) == pytest.approx(1.0, abs=1e-12)


def test_f2_never_below_f1():
    for alpha_sq in np.linspace(0.0, 1.0, 201):
        param = SourceParam.from_alpha_sq(float(alpha_sq))
        assert analytic_fidelity(param, Protocol.P2) >= analytic_fidelity(param, Protocol.P1)


def test_crossover_with_dropping_a_letter():
    x = crossover_alpha_sq()
    assert 0.78 < x < 0.81
    below, above = SourceParam.from_alpha_sq(x - 0.01), SourceParam.from_alpha_sq(x + 0.01)
    assert analytic_fidelity(below, Protocol.P1) < analytic_fidelity(below, Protocol.P3)
    assert analytic_fidelity(above, Protocol.P1) > analytic_fidelity(above, Protocol.P3)


def test_signed_beta():
    param = SourceParam.from_alpha_sq(0.5)
    assert LetterSign.MINUS.signed_beta(param) == pytest.approx(-math.sqrt(0.5))


def test_letter_ensemble_density():
    """The equiprobable letter ensemble is diagonal with entropy S(alpha^2)."""
    param = SourceParam.from_alpha_sq(0.9)
    rho = density_matrix(letter_ensemble(param))
    np.testing.assert_allclose(rho, np.diag([0.9, 0.1]), atol=1e-12)
    assert von_neumann_entropy(rho) == pytest.approx(0.4690, abs=5e-5)
