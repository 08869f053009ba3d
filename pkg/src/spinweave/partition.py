"""Equitable partitions seeded at one site, quotient graphs, and equivalence checks."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from spinweave.network import Edge, SpinNetwork, Site

SPECTRUM_TOL = 1e-9


class NotConnected(ValueError):
    pass


class HeterogeneousEdgeClass(ValueError):
    """A cell pair mixes couplings (or a cell mixes on-site energies)."""


class SpectrumMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Ordered cells of site indices; cell 0 is the seed singleton.

    ``degrees[i, j]`` is the number of neighbours each site of cell ``i`` has
    in cell ``j`` (taken from the cell's first site when the partition is not
    equitable).
    """

    cells: tuple[tuple[int, ...], ...]
    degrees: np.ndarray

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.cells]

    def cell_of(self) -> dict[int, int]:
        return {site: k for k, cell in enumerate(self.cells) for site in cell}

    def to_dict(self, one_based: bool = True) -> dict:
        off = 1 if one_based else 0
        return {
            "cells": [[s + off for s in cell] for cell in self.cells],
            "degrees": self.degrees.astype(int).tolist(),
        }


def bfs_distances(network: SpinNetwork, seed: int) -> list[int]:
    nbrs = network.adjacency()
    dist = [-1] * network.n
    dist[seed] = 0
    queue = deque([seed])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _degree_matrix(nbrs: list[list[int]], cells: Sequence[Sequence[int]]) -> np.ndarray:
    where = {s: k for k, cell in enumerate(cells) for s in cell}
    d = np.zeros((len(cells), len(cells)), dtype=int)
    for k, cell in enumerate(cells):
        for v in nbrs[cell[0]]:
            d[k, where[v]] += 1
    return d


def _ordered(cells: list[list[int]], dist: list[int]) -> list[tuple[int, ...]]:
    cells = [tuple(sorted(c)) for c in cells]
    return sorted(cells, key=lambda c: (dist[c[0]], c[0]))


def _refine(cells: list[tuple[int, ...]], nbrs, dist) -> list[tuple[int, ...]]:
    while True:
        where = {s: k for k, cell in enumerate(cells) for s in cell}
        new: list[list[int]] = []
        for cell in cells:
            groups: dict[tuple, list[int]] = {}
            for s in cell:
                sig = [0] * len(cells)
                for v in nbrs[s]:
                    sig[where[v]] += 1
                groups.setdefault(tuple(sig), []).append(s)
            new.extend(groups.values())
        if len(new) == len(cells):
            return cells
        cells = _ordered(new, dist)


def coarsest_equitable_partition(network: SpinNetwork, seed_site: int) -> Partition:
    """Coarsest equitable refinement of the BFS distance classes from ``seed_site``.

    Couplings are ignored; weight compatibility is checked when the quotient is
    formed. Cells that would still contain internal edges (possible only on
    non-bipartite graphs) are broken into singletons.
    """
    dist = bfs_distances(network, seed_site)
    if min(dist) < 0:
        raise NotConnected(f"{dist.count(-1)} site(s) unreachable from seed {seed_site}")
    nbrs = network.adjacency()
    classes: dict[int, list[int]] = {}
    for s, d in enumerate(dist):
        classes.setdefault(d, []).append(s)
    cells = _refine(_ordered(list(classes.values()), dist), nbrs, dist)
    while True:
        where = {s: k for k, cell in enumerate(cells) for s in cell}
        bad = {k for k, cell in enumerate(cells) if any(where[v] == k for s in cell for v in nbrs[s])}
        bad = {k for k in bad if len(cells[k]) > 1}
        if not bad:
            break
        split = [c for k, c in enumerate(cells) if k not in bad]
        split += [(s,) for k in bad for s in cells[k]]
        cells = _refine(_ordered([list(c) for c in split], dist), nbrs, dist)
    return Partition(tuple(cells), _degree_matrix(nbrs, cells))


def make_partition(network: SpinNetwork, cells: Sequence[Sequence[int]]) -> Partition:
    """Wrap user-supplied cells (site indices), computing the degree matrix."""
    cells = tuple(tuple(c) for c in cells)
    return Partition(cells, _degree_matrix(network.adjacency(), cells))


def validate_partition(network: SpinNetwork, partition: Partition) -> list[str]:
    """Return one message per violated partition rule; an empty list means valid."""
    issues: list[str] = []
    cells = partition.cells
    covered = sorted(s for c in cells for s in c)
    if covered != list(range(network.n)):
        return ["cells do not cover every site exactly once"]
    if len(cells[0]) != 1:
        issues.append(f"first cell has {len(cells[0])} sites, expected a singleton")
    nbrs = network.adjacency()
    dist = bfs_distances(network, cells[0][0])
    where = partition.cell_of()
    k = len(cells)
    counts = np.zeros((network.n, k), dtype=int)
    for s in range(network.n):
        for v in nbrs[s]:
            counts[s, where[v]] += 1
    for i, cell in enumerate(cells):
        if len({dist[s] for s in cell}) > 1:
            detail = ", ".join(f"{s + 1}:{dist[s]}" for s in cell)
            issues.append(f"cell {i + 1} mixes distances to the first cell ({detail})")
        for j in range(k):
            vals = {int(counts[s, j]) for s in cell}
            if len(vals) > 1:
                issues.append(f"cells ({i + 1},{j + 1}): unequal neighbour counts {sorted(vals)}")
        if any(counts[s, i] for s in cell):
            issues.append(f"cell {i + 1} has an internal edge")
    d = partition.degrees
    m = partition.sizes
    for i in range(k):
        for j in range(i + 1, k):
            if (d[i, j] or d[j, i]) and m[i] * d[i, j] != m[j] * d[j, i]:
                issues.append(
                    f"cells ({i + 1},{j + 1}): M_i d_ij = {m[i] * d[i, j]} != M_j d_ji = {m[j] * d[j, i]}"
                )
    return issues


def quotient_graph(network: SpinNetwork, partition: Partition, kind: str = "custom") -> SpinNetwork:
    """One site per cell, coupling ``J * sqrt(d_ij * d_ji)`` between coupled cells."""
    issues = validate_partition(network, partition)
    if issues:
        raise ValueError("invalid partition: " + "; ".join(issues))
    where = partition.cell_of()
    classes: dict[tuple[int, int], set[float]] = {}
    for e in network.edges:
        a, b = where[network.index_of(e.i)], where[network.index_of(e.j)]
        classes.setdefault((min(a, b), max(a, b)), set()).add(e.J)
    d = partition.degrees
    edges = []
    for (a, b), values in sorted(classes.items()):
        if len(values) > 1:
            raise HeterogeneousEdgeClass(f"cells ({a + 1},{b + 1}) mix couplings {sorted(values)}")
        edges.append(Edge(a, b, values.pop() * math.sqrt(d[a, b] * d[b, a])))
    sites = []
    for k, cell in enumerate(partition.cells):
        eps = {network.sites[s].epsilon for s in cell}
        if len(eps) > 1:
            raise HeterogeneousEdgeClass(f"cell {k + 1} mixes on-site energies {sorted(eps)}")
        label = network.sites[cell[0]].label if len(cell) == 1 else None
        sites.append(Site(k, label, eps.pop()))
    return SpinNetwork(
        tuple(sites),
        tuple(edges),
        kind=kind,
        params=network.params,
        mirror=_lift_mirror(network.mirror, partition),
    )


def _lift_mirror(mirror, partition: Partition):
    if mirror is None:
        return None
    lookup = {frozenset(c): k for k, c in enumerate(partition.cells)}
    image = []
    for cell in partition.cells:
        k = lookup.get(frozenset(mirror[s] for s in cell))
        if k is None:
            return None
        image.append(k)
    return tuple(image)


def match_spectra(full: Sequence[float], reduced: Sequence[float], tol: float = SPECTRUM_TOL) -> list[float]:
    """Greedy nearest-value matching; returns the unmatched part of ``full``."""
    pool = sorted(float(x) for x in full)
    for value in sorted(reduced):
        if not pool:
            raise SpectrumMismatch(f"reduced spectrum is larger than the full spectrum")
        k = int(np.argmin([abs(p - value) for p in pool]))
        if abs(pool[k] - value) > tol:
            raise SpectrumMismatch(f"eigenvalue {value:.12g} has no partner within {tol:g}")
        pool.pop(k)
    return pool


def count_decoupled_eigenvectors(full: SpinNetwork, reduced: SpinNetwork) -> list[float]:
    """Eigenenergies of ``full`` that do not survive in ``reduced`` (sorted)."""
    from spinweave.dynamics import diagonalize
    from spinweave.network import assemble_hamiltonian

    ef = diagonalize(assemble_hamiltonian(full)).energies
    er = diagonalize(assemble_hamiltonian(reduced)).energies
    return match_spectra(ef, er)


def dynamics_equivalence_check(
    net_a: SpinNetwork,
    net_b: SpinNetwork,
    watch: Sequence[str] = ("A", "B", "C"),
    injection: str = "B",
    t_max: float = 100.0,
    dt: float = 0.05,
) -> float:
    """Largest population or A-C EOF discrepancy between two networks over a time grid."""
    from spinweave.dynamics import diagonalize, site_amplitudes
    from spinweave.entanglement import eof_from_amplitudes
    from spinweave.network import assemble_hamiltonian

    times = np.arange(0.0, t_max + 0.5 * dt, dt)
    deviation = 0.0
    pops = {}
    eofs = {}
    for tag, net in (("a", net_a), ("b", net_b)):
        eig = diagonalize(assemble_hamiltonian(net))
        src = net.label_index(injection)
        sites = [net.label_index(lab) for lab in watch]
        amps = site_amplitudes(eig, src, sites, times)
        pops[tag] = np.abs(amps) ** 2
        if net.has_labels(("A", "C")):
            pair = site_amplitudes(eig, src, [net.label_index("A"), net.label_index("C")], times)
            eofs[tag] = eof_from_amplitudes(pair[:, 0], pair[:, 1])
    deviation = float(np.max(np.abs(pops["a"] - pops["b"])))
    if len(eofs) == 2:
        deviation = max(deviation, float(np.max(np.abs(eofs["a"] - eofs["b"]))))
    return deviation
