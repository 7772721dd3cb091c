"""Linear-optics model: plates, beam splitters and the prepare/code/decode/test chain."""

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
    Protocol,
    SourceParam,
    block_state,
    mu_state,
    per_label_fidelity,
    success_probability,
)
from qscode.error_handler import UsageError  # noqa: E402
from qscode.optics import (  # noqa: E402
    Circuit,
    OpticalState,
    PolarizingBeamSplitter,
    WavePlate,
    coding_circuit,
    coding_stage,
    decode_stage,
    fidelity_test,
    optical_fidelity,
    prep_stage,
    preparation_circuit,
    run_pipeline,
    split_coded,
    theta_for_letter,
)

EQUIVALENCE_ALPHAS = (0.3, 0.7, 0.9, 0.95)


def test_theta_for_letter():
    assert theta_for_letter(0.0) == 0.0
    assert theta_for_letter(1.0) == pytest.approx(math.pi / 4)
    assert theta_for_letter(math.sqrt(1 - 0.9046)) == pytest.approx(0.15705, abs=1e-4)


def test_wave_plate_jones():
    plate = WavePlate(math.pi / 4, 'C')
    np.testing.assert_allclose(plate.jones(), [[0, 1], [1, 0]], atol=1e-15)
    m = WavePlate(0.3, 'B').matrix()
    np.testing.assert_allclose(m @ m, np.eye(8), atol=1e-12)


def test_wave_plate_is_an_involution():
    rng = np.random.default_rng(5)
    for theta in rng.uniform(-math.pi, math.pi, 100):
        jones = WavePlate(float(theta), 'A').jones()
        np.testing.assert_allclose(jones @ jones, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(jones.conj().T @ jones, np.eye(2), atol=1e-12)
        pol = rng.normal(size=2) + 1j * rng.normal(size=2)
        pol /= np.linalg.norm(pol)
        state = OpticalState(np.kron(np.eye(4)[0], pol))
        plate = Circuit((WavePlate(float(theta), 'A'),) * 2)
        np.testing.assert_allclose(plate.apply(state).vector, state.vector, atol=1e-12)


def test_beam_splitter_routes():
    pbs = PolarizingBeamSplitter(('A', 'C'), ('A', 'C'))
    out = Circuit((pbs,)).apply(OpticalState.photon('A', 'V'))
    assert out.amplitude('C', 'V') == pytest.approx(1.0)
    out = Circuit((pbs,)).apply(OpticalState.photon('C', 'H'))
    assert out.amplitude('C', 'H') == pytest.approx(1.0)
    np.testing.assert_allclose(pbs.matrix() @ pbs.inverse().matrix(), np.eye(8), atol=1e-15)
    with pytest.raises(UsageError):
        PolarizingBeamSplitter(('A', 'B'), ('C', 'D'))


def test_preparation_is_block_state():
    """The path/polarization isomorphism image of the prepared photon is |B_L>."""
    param = SourceParam.from_alpha_sq(0.9)
    for label in ALL_LABELS:
        prepared = prep_stage(param, label).to_pure_state()
        np.testing.assert_allclose(prepared.amps, block_state(param, label).amps, atol=1e-10)


def test_preparation_at_alpha_one():
    prepared = prep_stage(SourceParam(1.0), ALL_LABELS[7])
    assert abs(prepared.amplitude('A', 'H')) == pytest.approx(1.0)


def test_preparation_preserves_norm():
    rng = np.random.default_rng(3)
    for _ in range(5):
        circuit = Circuit(tuple(WavePlate(float(t), p) for t, p in zip(rng.uniform(0, math.pi, 4), 'ABCD')))
        state = (circuit + coding_circuit()).apply(OpticalState.photon('A', 'H'))
        assert np.sum(np.abs(state.vector) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_coding_stage_channel_is_mu():
    param = SourceParam.from_alpha_sq(0.9)
    for label in ALL_LABELS:
        outcome = coding_stage(prep_stage(param, label))
        assert outcome.d1 + outcome.d2 == pytest.approx(0.028, abs=1e-12)
        np.testing.assert_allclose(outcome.channel.vector[:4], mu_state(param, label).amps, atol=1e-10)
        np.testing.assert_allclose(outcome.channel.vector[4:], 0, atol=1e-12)


def test_coding_stage_fixes_ground_photon():
    channel, (d1, d2) = coding_stage(OpticalState.photon('A', 'H'))
    assert d1 == d2 == 0
    assert abs(channel.amplitude('A', 'H')) == pytest.approx(1.0)


def test_split_coded_keeps_success_weight():
    param = SourceParam.from_alpha_sq(0.9)
    for label in ALL_LABELS:
        state = prep_stage(param, label)
        kept, d1, d2 = split_coded(state)
        assert np.sum(np.abs(kept) ** 2) == pytest.approx(success_probability(param), abs=1e-12)
        assert d1 + d2 == pytest.approx(1 - success_probability(param), abs=1e-12)
        channel = coding_stage(state).channel
        np.testing.assert_allclose(channel.vector * math.sqrt(1 - d1 - d2), kept, atol=1e-12)


def test_conditional_decode_fidelity_is_p():
    param = SourceParam.from_alpha_sq(0.7)
    p = success_probability(param)
    for label in ALL_LABELS:
        channel = coding_stage(prep_stage(param, label)).channel
        assert fidelity_test(decode_stage(channel), param, label).d0_yes == pytest.approx(p, abs=1e-12)


def test_decode_stage_rejects_failure_paths():
    with pytest.raises(UsageError):
        decode_stage(OpticalState.photon('D', 'V'))
    assert abs(decode_stage(OpticalState.photon('A', 'H')).amplitude('A', 'H')) == pytest.approx(1.0)


def test_fidelity_test_on_exact_block():
    param = SourceParam.from_alpha_sq(0.6)
    label = ALL_LABELS[2]
    outcome = fidelity_test(prep_stage(param, label), param, label)
    assert outcome.d0_yes == pytest.approx(1.0, abs=1e-12)
    assert outcome.rejected == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("protocol", [Protocol.P1, Protocol.P2])
@pytest.mark.parametrize("alpha", EQUIVALENCE_ALPHAS)
def test_optics_matches_abstract_pipeline(protocol, alpha):
    param = SourceParam(alpha)
    for label in ALL_LABELS:
        outcome = run_pipeline(param, label, protocol)
        assert abs(outcome.d0_yes - per_label_fidelity(param, label, protocol)) < 1e-9
        assert outcome.total == pytest.approx(1.0, abs=1e-12)


def test_optical_fidelity_value():
    assert optical_fidelity(SourceParam.from_alpha_sq(0.9)) == pytest.approx(0.9448, abs=5e-5)


def test_p3_has_no_optical_pipeline():
    with pytest.raises(UsageError):
        run_pipeline(SourceParam.from_alpha_sq(0.9), ALL_LABELS[0], Protocol.P3)


def test_circuit_dump_parse():
    circuit = preparation_circuit(SourceParam.from_alpha_sq(0.81), ALL_LABELS[5]) + coding_circuit()
    parsed = Circuit.parse(circuit.dump())
    assert parsed == circuit
    np.testing.assert_allclose(parsed.unitary(), circuit.unitary(), atol=0)


def test_circuit_parse_errors():
    assert len(Circuit.parse("# comment only\n\nhwp A 0.5\n")) == 1
    with pytest.raises(UsageError):
        Circuit.parse("mirror A\n")
    with pytest.raises(UsageError):
        Circuit.parse("hwp E 0.1\n")


def test_inverse_circuit_undoes_forward():
    circuit = preparation_circuit(SourceParam.from_alpha_sq(0.4), ALL_LABELS[1])
    np.testing.assert_allclose(circuit.inverse().unitary() @ circuit.unitary(), np.eye(8), atol=1e-12)
