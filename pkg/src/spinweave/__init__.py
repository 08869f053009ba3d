"""Entanglement generation in ABC-coupled spin graphs and their quotient reductions."""
from spinweave.network import (
    ABCParams,
    SpinNetwork,
    assemble_hamiltonian,
    build_double_square_abc,
    build_quotient_chain_abc,
    build_quotient_graph_abc,
    build_square3x3,
    build_structure,
)

__version__ = "0.1.0"

__all__ = [
    "ABCParams",
    "SpinNetwork",
    "assemble_hamiltonian",
    "build_double_square_abc",
    "build_quotient_chain_abc",
    "build_quotient_graph_abc",
    "build_square3x3",
    "build_structure",
]
