"""Spin networks, the ABC two-coupling scheme and single-excitation Hamiltonians.

All built-in structures are normalised to units of the strong coupling
(``Delta = 1``); times derived from them are therefore ``t * Delta``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

LABELS = ("A", "B", "C")
KINDS = ("full17", "quotient11", "chain9", "square9", "custom")


class NetworkError(ValueError):
    """Malformed network definition."""


class MissingLabel(KeyError):
    """A required A/B/C label is absent from the network."""


@dataclass(frozen=True)
class Site:
    id: int
    label: str | None = None
    epsilon: float = 0.0


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    J: float


@dataclass(frozen=True)
class ABCParams:
    """Weak coupling ``delta`` and strong coupling ``Delta``."""

    delta: float
    Delta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and math.isfinite(self.Delta)):
            raise ValueError("couplings must be finite")
        if self.Delta <= 0:
            raise ValueError("strong coupling Delta must be > 0")
        if not 0 < self.delta <= self.Delta:
            raise ValueError(f"ratio delta/Delta must lie in (0, 1], got {self.delta / self.Delta}")

    @classmethod
    def from_ratio(cls, ratio: float) -> ABCParams:
        return cls(delta=float(ratio), Delta=1.0)

    @property
    def ratio(self) -> float:
        return self.delta / self.Delta


@dataclass(frozen=True)
class SpinNetwork:
    """Immutable weighted graph of qubits.

    ``mirror`` is an optional site-index involution (fixing B, swapping A and C)
    known from construction; ``params`` records the ABC couplings for built-ins.
    """

    sites: tuple[Site, ...]
    edges: tuple[Edge, ...]
    kind: str = "custom"
    params: ABCParams | None = None
    mirror: tuple[int, ...] | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [s.id for s in self.sites]
        if len(set(ids)) != len(ids):
            raise NetworkError("site ids must be distinct")
        index = {sid: k for k, sid in enumerate(ids)}
        seen = set()
        for e in self.edges:
            if e.i == e.j:
                raise NetworkError(f"self-edge on site {e.i}")
            if e.i not in index or e.j not in index:
                raise NetworkError(f"edge ({e.i}, {e.j}) references an unknown site")
            key = frozenset((e.i, e.j))
            if key in seen:
                raise NetworkError(f"duplicate edge ({e.i}, {e.j})")
            seen.add(key)
            if not math.isfinite(e.J):
                raise NetworkError(f"non-finite coupling on edge ({e.i}, {e.j})")
        for s in self.sites:
            if not math.isfinite(s.epsilon):
                raise NetworkError(f"non-finite on-site energy at site {s.id}")
        labels = [s.label for s in self.sites if s.label is not None]
        for lab in labels:
            if lab not in LABELS:
                raise NetworkError(f"unknown label {lab!r}")
        if len(set(labels)) != len(labels):
            raise NetworkError("each of A, B, C may label at most one site")
        if self.kind not in KINDS:
            raise NetworkError(f"unknown structure kind {self.kind!r}")
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return len(self.sites)

    def index_of(self, site_id: int) -> int:
        return self._index[site_id]

    def label_index(self, label: str) -> int:
        for k, s in enumerate(self.sites):
            if s.label == label:
                return k
        raise MissingLabel(label)

    def has_labels(self, labels: Iterable[str] = LABELS) -> bool:
        present = {s.label for s in self.sites}
        return all(lab in present for lab in labels)

    def adjacency(self) -> list[list[int]]:
        """Neighbour lists by site index, ignoring weights."""
        nbrs: list[list[int]] = [[] for _ in self.sites]
        for e in self.edges:
            a, b = self._index[e.i], self._index[e.j]
            nbrs[a].append(b)
            nbrs[b].append(a)
        return nbrs

    def scaled(self, a: float) -> SpinNetwork:
        return SpinNetwork(
            sites=tuple(Site(s.id, s.label, a * s.epsilon) for s in self.sites),
            edges=tuple(Edge(e.i, e.j, a * e.J) for e in self.edges),
            kind=self.kind,
            params=None,
            mirror=self.mirror,
        )

    def to_dict(self) -> dict:
        return {
            "sites": [{"id": s.id, "label": s.label, "epsilon": s.epsilon} for s in self.sites],
            "edges": [{"i": e.i, "j": e.j, "J": e.J} for e in self.edges],
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SpinNetwork:
        try:
            sites = [
                Site(int(s["id"]), s.get("label"), float(s.get("epsilon", 0.0)))
                for s in data["sites"]
            ]
            edges = [Edge(int(e["i"]), int(e["j"]), float(e["J"])) for e in data["edges"]]
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed network JSON: {exc}") from exc
        return cls(tuple(sites), tuple(edges), kind=data.get("kind", "custom"))


def load_network(path: str | Path) -> SpinNetwork:
    with open(path) as fh:
        return SpinNetwork.from_dict(json.load(fh))


def dump_network(network: SpinNetwork, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(network.to_dict(), fh, indent=2)
        fh.write("\n")


def _grid_edges(n: int = 3) -> list[tuple[int, int]]:
    edges = []
    for r in range(n):
        for c in range(n):
            k = n * r + c
            if c < n - 1:
                edges.append((k, k + 1))
            if r < n - 1:
                edges.append((k, k + n))
    return edges


def build_square3x3(J: float = 1.0) -> SpinNetwork:
    """Uniform 3x3 grid, ids 0..8 row-major. Corners 0 and 8 are the PST pair."""
    if not J > 0:
        raise ValueError("J must be positive")
    sites = tuple(Site(k) for k in range(9))
    edges = tuple(Edge(i, j, float(J)) for i, j in _grid_edges())
    return SpinNetwork(sites, edges, kind="square9", mirror=tuple(8 - k for k in range(9)))


def build_double_square_abc(params: ABCParams) -> SpinNetwork:
    """Two 3x3 grids sharing one corner (B), with A and C at the free far corners.

    Grid 1 occupies ids 0..8 (A = 0, B = 8); grid 2 reuses B and occupies
    ids 9..16 (C = 16). Mapping ``k -> 16 - k`` is the A/C mirror.
    """
    r = params.ratio
    second = {0: 8, **{k: 8 + k for k in range(1, 9)}}
    pairs = _grid_edges() + [(second[a], second[b]) for a, b in _grid_edges()]
    special = {0, 8, 16}
    edges = tuple(
        Edge(i, j, r if (i in special or j in special) else 1.0) for i, j in pairs
    )
    labels = {0: "A", 8: "B", 16: "C"}
    sites = tuple(Site(k, labels.get(k)) for k in range(17))
    return SpinNetwork(
        sites, edges, kind="full17", params=params, mirror=tuple(16 - k for k in range(17))
    )


def chain_couplings(params: ABCParams) -> list[float]:
    r = params.ratio
    half = [math.sqrt(2) * r, math.sqrt(3), math.sqrt(3), math.sqrt(2) * r]
    return half + half[::-1]


def build_quotient_chain_abc(params: ABCParams) -> SpinNetwork:
    """Nine-site open chain with A = site 1, B = site 5, C = site 9 (1-based)."""
    labels = {0: "A", 4: "B", 8: "C"}
    sites = tuple(Site(k, labels.get(k)) for k in range(9))
    edges = tuple(Edge(k, k + 1, J) for k, J in enumerate(chain_couplings(params)))
    return SpinNetwork(
        sites, edges, kind="chain9", params=params, mirror=tuple(8 - k for k in range(9))
    )


def build_quotient_graph_abc(params: ABCParams) -> SpinNetwork:
    """Eleven-site quotient of the double square, partitioned from A."""
    from spinweave.partition import coarsest_equitable_partition, quotient_graph

    full = build_double_square_abc(params)
    part = coarsest_equitable_partition(full, full.label_index("A"))
    return quotient_graph(full, part, kind="quotient11")


def build_structure(structure: str, ratio: float = 1.0) -> SpinNetwork:
    if structure == "square9":
        return build_square3x3(1.0)
    params = ABCParams.from_ratio(ratio)
    builders = {
        "full17": build_double_square_abc,
        "quotient11": build_quotient_graph_abc,
        "chain9": build_quotient_chain_abc,
    }
    if structure not in builders:
        raise ValueError(f"unknown structure {structure!r}")
    return builders[structure](params)


def assemble_hamiltonian(network: SpinNetwork) -> np.ndarray:
    """Dense single-excitation Hamiltonian: couplings off-diagonal, energies on the diagonal."""
    h = np.diag(np.array([s.epsilon for s in network.sites], dtype=float))
    for e in network.edges:
        a, b = network.index_of(e.i), network.index_of(e.j)
        h[a, b] = h[b, a] = e.J
    return h


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    n = len(perm)
    p = np.zeros((n, n))
    p[list(perm), list(range(n))] = 1.0
    return p
