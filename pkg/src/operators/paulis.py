from typing import Mapping

import numpy as np

from src.graph.hypergraph import InteractionGraph, Vertex
from src.operators.core import GlobalOperator, embed, kron_all

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Lowering operator |0><1| in the computational basis, used for amplitude damping.
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def pauli(label: str) -> np.ndarray:
    try:
        return PAULIS[label.upper()]
    except KeyError:
        raise ValueError(f"Unknown Pauli label '{label}'") from None


def pauli_on(label: str, site: Vertex, g: InteractionGraph) -> GlobalOperator:
    return embed(pauli(label), [site], g)


def pauli_string(labels: Mapping[Vertex, str], g: InteractionGraph) -> GlobalOperator:
    """Tensor product of single-site Paulis, e.g. {1: "X", 2: "Z"}; identity elsewhere."""
    support = g.ordered(labels)
    return embed(kron_all([pauli(labels[v]) for v in support]), support, g)
