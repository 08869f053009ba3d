import math

import numpy as np
import pytest

from spinweave.network import (
    ABCParams,
    Edge,
    Site,
    SpinNetwork,
    assemble_hamiltonian,
    build_double_square_abc,
    build_quotient_chain_abc,
    build_quotient_graph_abc,
    build_square3x3,
    build_structure,
)
from spinweave.partition import (
    HeterogeneousEdgeClass,
    NotConnected,
    SpectrumMismatch,
    coarsest_equitable_partition,
    count_decoupled_eigenvectors,
    dynamics_equivalence_check,
    make_partition,
    match_spectra,
    quotient_graph,
    validate_partition,
)

R2 = math.sqrt(2)


def one_based(part):
    return [sorted(s + 1 for s in c) for c in part.cells]


def test_grid_partition_from_corner():
    g = build_square3x3()
    part = coarsest_equitable_partition(g, 0)
    assert one_based(part) == [[1], [2, 4], [3, 7], [5], [6, 8], [9]]
    assert validate_partition(g, part) == []


def test_grid_quotient_couplings():
    g = build_square3x3()
    q = quotient_graph(g, coarsest_equitable_partition(g, 0))
    couplings = {(e.i + 1, e.j + 1): e.J for e in q.edges}
    assert couplings == pytest.approx(
        {(1, 2): R2, (2, 3): 1.0, (2, 4): R2, (3, 5): 1.0, (4, 5): R2, (5, 6): R2}
    )


def test_double_square_partition_from_A():
    net = build_double_square_abc(ABCParams.from_ratio(0.4))
    part = coarsest_equitable_partition(net, net.label_index("A"))
    assert len(part.cells) == 11
    assert validate_partition(net, part) == []


def test_two_site_path():
    net = SpinNetwork((Site(0), Site(1)), (Edge(0, 1, 1.0),))
    assert coarsest_equitable_partition(net, 0).cells == ((0,), (1,))


def test_not_connected():
    net = SpinNetwork((Site(0), Site(1), Site(2)), (Edge(0, 1, 1.0),))
    with pytest.raises(NotConnected):
        coarsest_equitable_partition(net, 0)


def test_validate_flags_mixed_distance():
    g = build_square3x3()
    # 1-based {1},{2,4,5},{3,7},{6,8},{9}
    part = make_partition(g, [(0,), (1, 3, 4), (2, 6), (5, 7), (8,)])
    issues = validate_partition(g, part)
    assert any("mixes distances" in m for m in issues)


def test_balance_relation_two_cells():
    # star K_{1,2}: M1 = 1, d12 = 2; M2 = 2, d21 = 1
    net = SpinNetwork((Site(0), Site(1), Site(2)), (Edge(0, 1, 1.0), Edge(0, 2, 1.0)))
    part = coarsest_equitable_partition(net, 0)
    assert part.sizes == [1, 2]
    assert part.degrees[0, 1] == 2 and part.degrees[1, 0] == 1
    assert validate_partition(net, part) == []
    q = quotient_graph(net, part)
    assert q.edges[0].J == pytest.approx(R2)


def test_identity_partition_returns_original():
    net = build_quotient_chain_abc(ABCParams.from_ratio(0.7))
    part = make_partition(net, [(k,) for k in range(net.n)])
    q = quotient_graph(net, part)
    assert q.sites == net.sites and q.edges == net.edges


def test_heterogeneous_edge_class():
    # the 3x3 grid with one corner-adjacent edge weakened breaks the {2,4} class
    g = build_square3x3()
    edges = tuple(Edge(e.i, e.j, 0.5 if (e.i, e.j) == (0, 1) else e.J) for e in g.edges)
    net = SpinNetwork(g.sites, edges, kind="custom")
    with pytest.raises(HeterogeneousEdgeClass):
        quotient_graph(net, coarsest_equitable_partition(net, 0))


def test_non_bipartite_graph_has_no_internal_edges():
    # triangle: the two far sites are adjacent, so they cannot share a cell
    net = SpinNetwork(tuple(Site(k) for k in range(3)),
                      (Edge(0, 1, 1.0), Edge(1, 2, 1.0), Edge(0, 2, 1.0)))
    part = coarsest_equitable_partition(net, 0)
    assert validate_partition(net, part) == []


@pytest.mark.parametrize("name", ["full17", "quotient11", "chain9", "square9"])
def test_balance_relation_on_builtins(name):
    net = build_structure(name, 0.6)
    seed = net.label_index("A") if name != "square9" else 0
    part = coarsest_equitable_partition(net, seed)
    m, d = part.sizes, part.degrees
    cell = part.cell_of()
    for i in range(len(m)):
        for j in range(len(m)):
            crossing = sum(
                1 for e in net.edges
                if {cell[net.index_of(e.i)], cell[net.index_of(e.j)]} == {i, j} and i != j
            )
            if i != j:
                assert m[i] * d[i, j] == crossing == m[j] * d[j, i]


@pytest.mark.parametrize("r", np.random.default_rng(7).uniform(0.01, 1.0, 20))
def test_quotient_spectrum_contained(r):
    full = build_double_square_abc(ABCParams.from_ratio(r))
    q11 = build_quotient_graph_abc(ABCParams.from_ratio(r))
    chain = build_quotient_chain_abc(ABCParams.from_ratio(r))
    assert count_decoupled_eigenvectors(full, q11) == pytest.approx([-R2, -R2, 0, 0, R2, R2], abs=1e-9)
    assert count_decoupled_eigenvectors(q11, chain) == pytest.approx([0, 0], abs=1e-9)


def test_decoupled_of_self_is_empty():
    net = build_quotient_chain_abc(ABCParams.from_ratio(0.3))
    assert count_decoupled_eigenvectors(net, net) == []


def test_spectrum_mismatch():
    with pytest.raises(SpectrumMismatch):
        match_spectra([0.0, 1.0], [0.5])
    full = build_square3x3()
    chain = build_quotient_chain_abc(ABCParams.from_ratio(0.5))
    with pytest.raises(SpectrumMismatch):
        count_decoupled_eigenvectors(full, chain)


def test_dynamics_equivalence_full_vs_chain():
    p = ABCParams.from_ratio(0.5)
    dev = dynamics_equivalence_check(
        build_double_square_abc(p), build_quotient_chain_abc(p), t_max=100, dt=0.05
    )
    assert dev < 1e-8


def test_dynamics_equivalence_self_is_zero():
    net = build_quotient_graph_abc(ABCParams.from_ratio(0.5))
    assert dynamics_equivalence_check(net, net, t_max=20) == 0.0


def test_quotient_hamiltonian_is_symmetric_projection():
    # H_q = S^T H S with S the normalised cell indicator matrix
    full = build_double_square_abc(ABCParams.from_ratio(0.37))
    part = coarsest_equitable_partition(full, full.label_index("A"))
    s = np.zeros((full.n, len(part.cells)))
    for k, cell in enumerate(part.cells):
        s[list(cell), k] = 1 / math.sqrt(len(cell))
    projected = s.T @ assemble_hamiltonian(full) @ s
    quotient = assemble_hamiltonian(quotient_graph(full, part))
    assert np.allclose(projected, quotient, atol=1e-14)
