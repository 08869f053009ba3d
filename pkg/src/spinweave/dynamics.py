"""Exact diagonalisation, spectral time evolution and fidelity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from spinweave.network import ABCParams

NORM_TOL = 1e-12
_CHUNK = 200_000


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Ascending energies; ``vectors[:, n]`` is the eigenvector of ``energies[n]``."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def site(cls, n: int, k: int) -> QuantumState:
        """Single excitation on site index ``k`` of an ``n``-site network."""
        amps = np.zeros(n, dtype=complex)
        amps[k] = 1.0
        return cls(amps)

    @classmethod
    def normalized(cls, amplitudes) -> QuantumState:
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    @property
    def n(self) -> int:
        return len(self.amplitudes)


def diagonalize(h: np.ndarray) -> EigenSystem:
    """Symmetric eigendecomposition with a fixed sign convention.

    Each eigenvector is flipped so its first component with magnitude above
    1e-12 is positive. Vectors inside degenerate subspaces are still
    solver-dependent.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {h.shape}")
    if not np.allclose(h, h.T, atol=1e-14, rtol=0):
        raise ValueError("Hamiltonian is not symmetric")
    energies, vectors = np.linalg.eigh(h)
    for n in range(vectors.shape[1]):
        col = vectors[:, n]
        lead = np.flatnonzero(np.abs(col) > 1e-12)
        if lead.size and col[lead[0]] < 0:
            vectors[:, n] = -col
    energies.flags.writeable = False
    vectors.flags.writeable = False
    return EigenSystem(energies, vectors)


def _check(eig: EigenSystem, *states: QuantumState) -> None:
    for s in states:
        if s.n != eig.n:
            raise DimensionMismatch(f"state has {s.n} amplitudes, Hamiltonian has {eig.n} sites")


def evolve(eig: EigenSystem, psi0: QuantumState, t: float) -> QuantumState:
    """``exp(-iHt) psi0`` with hbar = 1."""
    _check(eig, psi0)
    if t == 0:
        return psi0
    coeff = eig.vectors.T @ psi0.amplitudes
    return QuantumState(eig.vectors @ (np.exp(-1j * eig.energies * t) * coeff))


def site_amplitudes(
    eig: EigenSystem, source: int, sites: Sequence[int], times: np.ndarray
) -> np.ndarray:
    """Amplitudes ``<site|exp(-iHt)|source>`` for every time, shape ``(len(times), len(sites))``."""
    times = np.asarray(times, dtype=float)
    weights = eig.vectors[list(sites), :] * eig.vectors[source, :]
    out = np.empty((times.size, len(sites)), dtype=complex)
    for lo in range(0, times.size, _CHUNK):
        phases = np.exp(-1j * np.outer(times[lo : lo + _CHUNK], eig.energies))
        out[lo : lo + _CHUNK] = phases @ weights.T
    return out


def fidelity(eig: EigenSystem, psi0: QuantumState, psif: QuantumState, t: float) -> float:
    """``|<psi_f| exp(-iHt) |psi_0>|^2``."""
    _check(eig, psi0, psif)
    coeff0 = eig.vectors.T @ psi0.amplitudes
    coefff = eig.vectors.T @ psif.amplitudes
    amp = np.sum(np.conj(coefff) * np.exp(-1j * eig.energies * t) * coeff0)
    return float(min(1.0, abs(amp) ** 2))


def fidelity_series(eig: EigenSystem, psi0: QuantumState, psif: QuantumState, times) -> np.ndarray:
    _check(eig, psi0, psif)
    times = np.asarray(times, dtype=float)
    w = np.conj(eig.vectors.T @ psif.amplitudes) * (eig.vectors.T @ psi0.amplitudes)
    out = np.empty(times.size)
    for lo in range(0, times.size, _CHUNK):
        amp = np.exp(-1j * np.outer(times[lo : lo + _CHUNK], eig.energies)) @ w
        out[lo : lo + _CHUNK] = np.minimum(np.abs(amp) ** 2, 1.0)
    return out


def fidelity_cosine_coefficients(
    eig: EigenSystem, psi0: QuantumState, psif: QuantumState, cutoff: float = 0.0
) -> list[tuple[complex | float, float]]:
    """Pairs ``(alpha_ij, E_j - E_i)`` such that F(t) = sum Re(alpha_ij e^{i w_ij t}).

    With real states and a real Hamiltonian every alpha is real, and the sum
    reduces to ``sum alpha_ij cos(w_ij t)``. Terms with ``|alpha| <= cutoff``
    are dropped.
    """
    _check(eig, psi0, psif)
    p0 = eig.vectors.T @ psi0.amplitudes  # <phi_i|psi0>
    pf = eig.vectors.T @ psif.amplitudes  # <phi_i|psif>
    # alpha[i, j] = <phi_j|psif><psif|phi_i><phi_i|psi0><psi0|phi_j>
    alpha = (np.conj(pf) * p0)[:, None] * (pf * np.conj(p0))[None, :]
    omega = eig.energies[None, :] - eig.energies[:, None]
    real = not (np.any(psi0.amplitudes.imag) or np.any(psif.amplitudes.imag))
    out = []
    for i in range(eig.n):
        for j in range(eig.n):
            a = alpha[i, j]
            if abs(a) > cutoff:
                out.append((float(a.real) if real else complex(a), float(omega[i, j])))
    return out


def fidelity_from_coefficients(coefficients, t) -> np.ndarray | float:
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t, dtype=float)
    for a, w in coefficients:
        total = total + np.real(a * np.exp(1j * w * t))
    return total if total.ndim else float(total)


@dataclass(frozen=True)
class AnalyticSpectrum:
    """Closed-form ABC eigenenergies in units of Delta, grouped by decoupling stage."""

    decoupled_to_quotient: tuple[float, ...]
    decoupled_to_chain: tuple[float, ...]
    chain: tuple[float, ...]

    def all(self) -> np.ndarray:
        return np.sort(np.r_[self.decoupled_to_quotient, self.decoupled_to_chain, self.chain])


def abc_chain_energies(ratio: float) -> tuple[float, float, float, float]:
    """The four positive chain energies ``(E, E', F, F')``.

    ``E`` and ``E'`` belong to mirror-even eigenvectors; ``F``, ``F'`` to odd ones.
    """
    r2 = ratio * ratio
    s = math.sqrt(r2 * r2 + 9.0)
    return (
        math.sqrt(3 * r2 + 3 + s),
        math.sqrt(max(3 * r2 + 3 - s, 0.0)),
        math.sqrt(r2 + 3 + s),
        math.sqrt(max(r2 + 3 - s, 0.0)),
    )


def analytic_abc_spectrum(params: ABCParams) -> AnalyticSpectrum:
    pos = abc_chain_energies(params.ratio)
    root2 = math.sqrt(2)
    return AnalyticSpectrum(
        decoupled_to_quotient=(-root2, -root2, 0.0, 0.0, root2, root2),
        decoupled_to_chain=(0.0, 0.0),
        chain=tuple(sorted([*pos, *(-e for e in pos), 0.0])),
    )
