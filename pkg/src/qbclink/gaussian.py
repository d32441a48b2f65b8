"""Gaussian bosonic states and moment propagation through passive channels.

This is the first-principles cross-check for the closed-form link formulas:
states are tracked by their quadrature mean vector and covariance matrix
(ordering ``x_1..x_n, p_1..p_n``, vacuum variance 1/2 per quadrature), and a
channel acts as ``a_out = A a_in + B a_env`` with complex signal map ``A`` and
noise map ``B`` feeding in independent thermal modes.

Physical maps preserve the output commutators, which pins ``A A† + B B† = I``;
:func:`propagate` enforces this before mapping moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix
from .errors import NonPhysicalTransformError
from .qi import QiParams, tmss_moments

COMMUTATOR_TOL = 1e-9
PHYSICALITY_TOL = 1e-9


def quadrature_rep(m: np.ndarray) -> np.ndarray:
    """Real representation of a complex mode map in xxpp ordering.

    A complex matrix acting on annihilation operators acts on quadratures as
    ``[[Re m, -Im m], [Im m, Re m]]``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def _symplectic_form(n: int) -> np.ndarray:
    return np.block(
        [[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]]
    )


@dataclass(frozen=True)
class GaussianState:
    """Zero-or-displaced Gaussian state of ``n`` bosonic modes.

    Attributes
    ----------
    mean : ndarray
        Quadrature means, length 2n.
    cov : ndarray
        Symmetric 2n x 2n quadrature covariance (vacuum = I/2).
    """

    mean: np.ndarray
    cov: np.ndarray

    @property
    def mode_count(self) -> int:
        return self.mean.size // 2

    # -- constructors ------------------------------------------------------

    @classmethod
    def vacuum(cls, modes: int) -> "GaussianState":
        return cls(mean=np.zeros(2 * modes), cov=0.5 * np.eye(2 * modes))

    @classmethod
    def thermal(cls, modes: int, mean_photons: float) -> "GaussianState":
        if mean_photons < 0:
            raise ValueError("mean photon number must be non-negative")
        return cls(
            mean=np.zeros(2 * modes),
            cov=(mean_photons + 0.5) * np.eye(2 * modes),
        )

    @classmethod
    def from_ladder_moments(cls, c: np.ndarray, g: np.ndarray) -> "GaussianState":
        """Build a zero-mean state from ``<a† a>`` and ``<a a>`` matrices."""
        c = np.asarray(c, dtype=complex)
        g = np.asarray(g, dtype=complex)
        n = c.shape[0]
        eye = np.eye(n)
        vxx = (g + c).real + 0.5 * eye
        vpp = (c - g).real + 0.5 * eye
        vxp = (c + g).imag
        cov = np.block([[vxx, vxp], [vxp.T, vpp]])
        return cls(mean=np.zeros(2 * n), cov=cov)

    @classmethod
    def tmss_pairs(cls, n_signal: float, pairs: int, total_modes: int, links):
        """Product state of two-mode squeezed pairs embedded in a register.

        ``links`` is a sequence of ``(signal_mode, idler_mode)`` index pairs;
        every unlinked mode starts in vacuum.
        """
        moments = tmss_moments(n_signal)
        c = np.zeros((total_modes, total_modes), dtype=complex)
        g = np.zeros((total_modes, total_modes), dtype=complex)
        links = list(links)
        if len(links) != pairs:
            raise ValueError(f"expected {pairs} links, got {len(links)}")
        for sig, idl in links:
            c[sig, sig] = moments.signal_mean_photons
            c[idl, idl] = moments.idler_mean_photons
            g[sig, idl] = moments.cross_correlation
            g[idl, sig] = moments.cross_correlation
        return cls.from_ladder_moments(c, g)

    # -- derived moments ----------------------------------------------------

    def _blocks(self):
        n = self.mode_count
        return (
            self.cov[:n, :n],
            self.cov[:n, n:],
            self.cov[n:, n:],
        )

    @property
    def ladder_c(self) -> np.ndarray:
        """Normal-ordered correlations ``<a_j† a_k>`` (Hermitian)."""
        n = self.mode_count
        vxx, vxp, vpp = self._blocks()
        c = (vxx + vpp) / 2.0 - 0.5 * np.eye(n) + 0.5j * (vxp - vxp.T)
        alpha = self.mode_means()
        return c + np.outer(alpha.conj(), alpha)

    @property
    def ladder_g(self) -> np.ndarray:
        """Pair correlations ``<a_j a_k>`` (symmetric)."""
        vxx, vxp, vpp = self._blocks()
        g = (vxx - vpp) / 2.0 + 0.5j * (vxp + vxp.T)
        alpha = self.mode_means()
        return g + np.outer(alpha, alpha)

    def mode_means(self) -> np.ndarray:
        """Complex amplitudes ``<a_j>``."""
        n = self.mode_count
        return (self.mean[:n] + 1j * self.mean[n:]) / np.sqrt(2.0)

    def photon_number(self, mode: int) -> float:
        return float(self.ladder_c[mode, mode].real)

    def moment_adag_a(self, j: int, k: int) -> complex:
        return complex(self.ladder_c[j, k])

    def moment_aa(self, j: int, k: int) -> complex:
        return complex(self.ladder_g[j, k])

    def validate(self, tol: float = PHYSICALITY_TOL) -> None:
        """Check symmetry and the uncertainty bound ``cov + i Omega / 2 >= 0``."""
        if self.cov.shape != (2 * self.mode_count,) * 2:
            raise ValueError("covariance shape does not match the mean vector")
        if np.max(np.abs(self.cov - self.cov.T)) > tol:
            raise ValueError("covariance matrix is not symmetric")
        test = self.cov + 0.5j * _symplectic_form(self.mode_count)
        lowest = float(np.linalg.eigvalsh(test).min())
        if lowest < -tol:
            raise ValueError(f"state violates the uncertainty bound by {-lowest:.3e}")


def propagate(
    state: GaussianState,
    signal_map: np.ndarray,
    noise_map: np.ndarray,
    thermal_photons: float,
) -> GaussianState:
    """Push a Gaussian state through ``a_out = A a_state + B a_thermal``.

    Parameters
    ----------
    state : GaussianState
        Input register; ``signal_map`` must have matching column count.
    signal_map, noise_map : ndarray
        Complex maps A (n_out x n_in) and B (n_out x n_env).  They must
        satisfy ``A A† + B B† = I`` within 1e-9 max-entry.
    thermal_photons : float
        Mean photon number of each independent environment mode.

    Returns
    -------
    GaussianState
        Means map linearly through A; the covariance maps by congruence plus
        a ``(thermal_photons + 1/2)`` contribution through B.
    """
    a = np.atleast_2d(np.asarray(signal_map, dtype=complex))
    b = np.atleast_2d(np.asarray(noise_map, dtype=complex))
    n_out = a.shape[0]
    if a.shape[1] != state.mode_count:
        raise ValueError(
            f"signal map expects {a.shape[1]} modes, state has {state.mode_count}"
        )
    if b.shape[0] != n_out:
        raise ValueError("signal and noise maps must have the same output count")
    if thermal_photons < 0:
        raise ValueError("thermal photon number must be non-negative")

    gap = np.max(np.abs(a @ a.conj().T + b @ b.conj().T - np.eye(n_out)))
    if gap > COMMUTATOR_TOL:
        raise NonPhysicalTransformError(
            f"A A† + B B† deviates from identity by {gap:.3e}; "
            "the map does not preserve output commutators"
        )

    ra = quadrature_rep(a)
    rb = quadrature_rep(b)
    mean = ra @ state.mean
    cov = ra @ state.cov @ ra.T + (thermal_photons + 0.5) * (rb @ rb.T)
    return GaussianState(mean=mean, cov=cov)


def _loss_diagonal(cm: ChannelMatrix) -> np.ndarray:
    """diag(sqrt(1 - eta_k)) over all receive ports.

    Uses the raw transmissivities (no rank truncation) so the composed maps
    preserve commutators to machine precision.
    """
    eta = np.zeros(cm.n_rx)
    kept = min(cm.singular_values.size, cm.n_rx)
    eta[:kept] = np.clip(cm.eta[:kept], 0.0, 1.0)
    return np.diag(np.sqrt(1.0 - eta)).astype(complex)


def emimo_setup(cm: ChannelMatrix, params: QiParams, symbol: complex = 1.0):
    """Input state and maps for the eigen-channel protocol oracle.

    The transmit register holds the channel's input ports followed by the
    idlers: ports ``0..r-1`` carry the signal halves of r squeezed pairs (the
    remaining ports stay in vacuum), idler k pairs with port k.  The signal
    map routes ports through precoder V, channel, and beamformer U† while
    passing idlers through untouched.

    Returns ``(input_state, signal_map, noise_map)``; output modes are the
    ``n_rx`` receiver branches followed by the r idlers.
    """
    cm.require_physical()
    r = cm.rank
    n_tx, n_rx = cm.n_tx, cm.n_rx
    state = GaussianState.tmss_pairs(
        params.n_signal,
        pairs=r,
        total_modes=n_tx + r,
        links=[(k, n_tx + k) for k in range(r)],
    )
    branch_map = cm.u.conj().T @ (symbol * cm.matrix) @ cm.v
    signal_map = np.zeros((n_rx + r, n_tx + r), dtype=complex)
    signal_map[:n_rx, :n_tx] = branch_map
    signal_map[n_rx:, n_tx:] = np.eye(r)
    # beamformer applied after the channel noise: U† (U S) = S numerically
    noise_map = np.zeros((n_rx + r, n_rx), dtype=complex)
    noise_map[:n_rx, :] = cm.u.conj().T @ cm.u @ _loss_diagonal(cm)
    return state, signal_map, noise_map


def pmimo_setup(cm: ChannelMatrix, params: QiParams, symbol: complex = 1.0):
    """Input state and maps for the paired-protocol oracle.

    Every transceiver pair has an independent squeezed source: transmit mode m
    enters channel port m and idler m stays at receiver m.  Output modes are
    the ``n`` received modes followed by the n idlers.
    """
    cm.require_physical()
    if cm.n_rx != cm.n_tx:
        raise ValueError("paired protocol needs a square channel")
    n = cm.n_tx
    state = GaussianState.tmss_pairs(
        params.n_signal,
        pairs=n,
        total_modes=2 * n,
        links=[(k, n + k) for k in range(n)],
    )
    signal_map = np.zeros((2 * n, 2 * n), dtype=complex)
    signal_map[:n, :n] = symbol * cm.matrix
    signal_map[n:, n:] = np.eye(n)
    noise_map = np.zeros((2 * n, n), dtype=complex)
    noise_map[:n, :] = cm.u @ _loss_diagonal(cm)
    return state, signal_map, noise_map
