"""
qscode - three-qubit quantum source coding with non-orthogonal letter states

Compresses blocks of three letters alpha|0> +- beta|1> into two qubits,
reports the P1/P2/P3 fidelity curves and reruns the photonic demonstration
as a Monte Carlo photon-counting experiment.
"""

__version__ = "0.1.0"
