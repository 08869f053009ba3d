"""Two-qubit reduced states, Wootters concurrence and entanglement of formation.

Two-qubit matrices use the basis (|00>, |01>, |10>, |11>) with site A in the
first slot and site C in the second, so |10> means A excited.
"""
from __future__ import annotations

import numpy as np

from spinweave.dynamics import QuantumState, diagonalize, site_amplitudes
from spinweave.network import SpinNetwork, assemble_hamiltonian

SIGMA_YY = np.fliplr(np.diag([-1.0, 1.0, 1.0, -1.0]))
CLAMP_TOL = 1e-10


class InvalidSite(IndexError):
    pass


class NonPhysicalState(ValueError):
    pass


def reduced_density_matrix(state: QuantumState, site_a: int, site_c: int) -> np.ndarray:
    """Trace a single-excitation pure state down to the qubits at ``site_a`` and ``site_c``."""
    n = state.n
    if site_a == site_c or not (0 <= site_a < n and 0 <= site_c < n):
        raise InvalidSite(f"need two distinct site indices in [0, {n}), got {site_a}, {site_c}")
    psi = state.amplitudes
    pa, pc = psi[site_a], psi[site_c]
    rho = np.zeros((4, 4), dtype=complex)
    rest = np.vdot(psi, psi).real - abs(pa) ** 2 - abs(pc) ** 2
    rho[0, 0] = max(rest, 0.0)
    rho[1, 1] = abs(pc) ** 2
    rho[2, 2] = abs(pa) ** 2
    rho[2, 1] = pa * np.conj(pc)
    rho[1, 2] = np.conj(rho[2, 1])
    return rho


def _check_rho(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise NonPhysicalState("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-12:
        raise NonPhysicalState(f"trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(rho).min() < -CLAMP_TOL:
        raise NonPhysicalState("density matrix has a negative eigenvalue")
    return rho


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    With ``rho = X X^dagger`` the l_i are the singular values of ``X^T (sy x sy) X``,
    which avoids square roots of round-off sized eigenvalues of rho * rho~.
    """
    rho = _check_rho(rho)
    w, v = np.linalg.eigh(rho)
    x = v * np.sqrt(np.clip(w, 0.0, None))
    lam = np.linalg.svd(x.T @ SIGMA_YY @ x, compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def eof_from_concurrence(c):
    """Binary entropy of ``x = (1 + sqrt(1 - c^2)) / 2``, in bits; vectorised."""
    c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
    x = 0.5 * (1.0 + np.sqrt(1.0 - c * c))
    y = 1.0 - x
    with np.errstate(divide="ignore", invalid="ignore"):
        hx = np.where(x > 0, -x * np.log2(x), 0.0)
        hy = np.where(y > 0, -y * np.log2(y), 0.0)
    out = hx + hy
    return float(out) if out.ndim == 0 else out


def eof(rho: np.ndarray) -> float:
    return eof_from_concurrence(concurrence(rho))


def eof_from_amplitudes(amp_a, amp_c):
    """Closed form for single-excitation pure states: concurrence = 2|psi_A||psi_C|."""
    return eof_from_concurrence(2.0 * np.abs(amp_a) * np.abs(amp_c))


def eof_timeseries(
    network: SpinNetwork, injection: str = "B", t_max: float = 100.0, dt: float = 0.05
) -> tuple[np.ndarray, np.ndarray]:
    """EOF between A and C on the grid ``0, dt, ..., t_max`` after exciting ``injection``."""
    src = network.label_index(injection)
    a, c = network.label_index("A"), network.label_index("C")
    times = np.arange(0.0, t_max + 0.5 * dt, dt)
    amps = site_amplitudes(diagonalize(assemble_hamiltonian(network)), src, [a, c], times)
    return times, eof_from_amplitudes(amps[:, 0], amps[:, 1])
