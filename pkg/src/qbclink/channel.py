"""MIMO backscatter channel construction, sampling, and factorization.

A passive channel between ``n_tx`` transmit and ``n_rx`` receive antennas is a
complex matrix ``H`` with spectral norm at most one.  Its singular value
decomposition ``H = U S V†`` exposes the eigen-channel transmissivities
``eta_k = s_k**2``; the companion loss coefficients ``sqrt(1 - eta_k)`` couple
in the thermal environment so that energy and commutators are preserved.

Channels come from three sources here: explicit propagation paths (steering
vectors scaled by per-path transmissivity and phase), clutter scattering
composed through a tag antenna array, and a double-Rayleigh fading ensemble
for randomly placed clutter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLinkError,
    NonPhysicalChannelError,
    NonPhysicalLinkError,
)
from .rng import substream

SPEED_OF_LIGHT = 299_792_458.0  # m/s

DEFAULT_RANK_TOL = 1e-9
RECONSTRUCTION_TOL = 1e-10
UNITARITY_TOL = 1e-10
# Slack on the spectral-norm-at-most-one test; absorbs SVD rounding for
# channels that are lossless along one eigen-channel.
PHYSICALITY_SLACK = 1e-12


def siso_beam_splitter(eta: float, phase: float) -> np.ndarray:
    """Two-port coupler taking (signal, environment) to (received, lost) modes.

    Parameters
    ----------
    eta : float
        Round-trip transmissivity in [0, 1].
    phase : float
        Channel phase in radians.

    Returns
    -------
    ndarray
        The 2x2 unitary
        ``[[sqrt(eta) e^{-i phase}, sqrt(1-eta)], [-sqrt(1-eta), sqrt(eta) e^{i phase}]]``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {eta}")
    amp = np.sqrt(eta)
    loss = np.sqrt(1.0 - eta)
    return np.array(
        [
            [amp * np.exp(-1j * phase), loss],
            [-loss, amp * np.exp(1j * phase)],
        ]
    )


@dataclass(frozen=True)
class LinkBudget:
    """Reader geometry and antenna parameters of a backscatter link.

    Attributes
    ----------
    antenna_gain : float
        Reader antenna gain, linear scale.
    angular_frequency : float
        Carrier angular frequency in rad/s.
    qrcs : float
        Radar cross-section of the tag antenna in m^2 (intensity ratio of
        scattered to incident photons).
    dist_tx_tag, dist_tag_rx : float
        Transmitter-to-tag and tag-to-receiver distances in metres.
    """

    antenna_gain: float
    angular_frequency: float
    qrcs: float
    dist_tx_tag: float
    dist_tag_rx: float

    def __post_init__(self):
        for name in (
            "antenna_gain",
            "angular_frequency",
            "qrcs",
            "dist_tx_tag",
            "dist_tag_rx",
        ):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


def round_trip_transmissivity(lb: LinkBudget) -> float:
    """Probability that a transmitted photon returns to the receiver.

    Evaluates ``G^2 c^2 sigma_Q / (16 pi w^2 Rt^2 Rr^2)`` verbatim: the
    transmit and receive legs each contribute an inverse-square distance law,
    and the tag cross-section scales the reflected intensity.

    Raises
    ------
    NonPhysicalLinkError
        If the parameters give a transmissivity above one.
    DegenerateLinkError
        If the result underflows to zero.
    """
    num = lb.antenna_gain**2 * SPEED_OF_LIGHT**2 * lb.qrcs
    den = (
        16.0
        * np.pi
        * lb.angular_frequency**2
        * lb.dist_tx_tag**2
        * lb.dist_tag_rx**2
    )
    eta = num / den
    if eta > 1.0:
        if eta <= 1.0 + 1e-12:
            # parameter cancellations may round one ulp above unity
            return 1.0
        raise NonPhysicalLinkError(
            f"round-trip transmissivity {eta} exceeds 1; link parameters are inconsistent"
        )
    if eta == 0.0:
        raise DegenerateLinkError("round-trip transmissivity underflowed to zero")
    return float(eta)


@dataclass(frozen=True)
class SteeringGeometry:
    """Uniform linear array geometry for one arrival/departure direction.

    ``spacing`` is the element spacing in carrier wavelengths and
    ``direction_cosine`` is cos(theta) for the angle between the array axis
    and the propagation direction.
    """

    element_count: int
    spacing: float
    direction_cosine: float

    def __post_init__(self):
        if self.element_count < 1:
            raise ValueError(f"element_count must be >= 1, got {self.element_count}")
        if not -1.0 <= self.direction_cosine <= 1.0:
            raise ValueError(
                f"direction cosine must lie in [-1, 1], got {self.direction_cosine}"
            )


def steering_vector(geometry: SteeringGeometry) -> np.ndarray:
    """Unit-norm array response ``(1, e^{i 2 pi d w}, ...) / sqrt(N)``."""
    n = geometry.element_count
    phase_step = 2.0 * np.pi * geometry.spacing * geometry.direction_cosine
    return np.exp(1j * phase_step * np.arange(n)) / np.sqrt(n)


@dataclass(frozen=True)
class PropagationPath:
    """Direct tag path seen from both arrays (two-antenna tag model)."""

    transmissivity: float
    phase: float
    rx_cosine: float
    tx_cosine: float

    def __post_init__(self):
        _check_path_transmissivity(self.transmissivity)
        _check_cosine(self.rx_cosine)
        _check_cosine(self.tx_cosine)


@dataclass(frozen=True)
class ClutterPath:
    """One clutter scatterer between the tag array and one reader array.

    ``tag_cosine`` is shared between the transmit-side and receive-side path
    lists describing the same scatterer; ``far_cosine`` is the direction seen
    from the reader array on this side of the tag.
    """

    transmissivity: float
    phase: float
    tag_cosine: float
    far_cosine: float

    def __post_init__(self):
        _check_path_transmissivity(self.transmissivity)
        _check_cosine(self.tag_cosine)
        _check_cosine(self.far_cosine)


def _check_path_transmissivity(value: float) -> None:
    # zero is allowed so degenerate (switched-off) paths can be expressed
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"path transmissivity must lie in [0, 1], got {value}")


def _check_cosine(value: float) -> None:
    if not -1.0 <= value <= 1.0:
        raise ValueError(f"direction cosine must lie in [-1, 1], got {value}")


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex channel matrix with its cached singular value decomposition.

    Attributes
    ----------
    matrix : ndarray
        The raw ``n_rx x n_tx`` complex channel.
    u, v : ndarray
        Unitary SVD factors (``u`` is ``n_rx x n_rx``, ``v`` is ``n_tx x n_tx``).
    singular_values : ndarray
        Descending singular values ``sqrt(eta_k)``.
    rank : int
        Count of singular values above ``rank_tolerance`` times the largest.
    """

    matrix: np.ndarray
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    rank: int
    rank_tolerance: float

    @property
    def n_rx(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_tx(self) -> int:
        return self.matrix.shape[1]

    @property
    def eta(self) -> np.ndarray:
        """Eigen-channel transmissivities, one per singular value."""
        return self.singular_values**2

    @property
    def spectral_norm(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    @property
    def is_physical(self) -> bool:
        """True when the channel can act passively (spectral norm <= 1)."""
        return self.spectral_norm <= 1.0 + PHYSICALITY_SLACK

    @property
    def trace_power(self) -> float:
        """``trace(H H†)``, the summed eigen-channel transmissivities."""
        return float(np.sum(np.abs(self.matrix) ** 2))

    def require_physical(self) -> "ChannelMatrix":
        if not self.is_physical:
            raise NonPhysicalChannelError(
                f"spectral norm {self.spectral_norm:.6g} exceeds 1"
            )
        return self

    def reconstruction_residual(self) -> float:
        """Max-entry deviation of ``U S V†`` from the stored matrix."""
        n_rx, n_tx = self.matrix.shape
        sigma = np.zeros((n_rx, n_tx))
        k = self.singular_values.size
        sigma[:k, :k] = np.diag(self.singular_values)
        rebuilt = self.u @ sigma @ self.v.conj().T
        return float(np.max(np.abs(rebuilt - self.matrix)))


def decompose_channel(
    h: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOL
) -> ChannelMatrix:
    """Factorize a raw channel into its eigen-channel form.

    Parameters
    ----------
    h : ndarray
        Complex matrix with finite entries.
    rank_tolerance : float
        Relative singular-value threshold for the numerical rank.

    Raises
    ------
    ValueError
        On non-finite input or if the factorization fails to reproduce the
        input within tolerance (which indicates a broken LAPACK build).
    """
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    if rank_tolerance <= 0:
        raise ValueError(f"rank_tolerance must be positive, got {rank_tolerance}")

    u, s, vh = np.linalg.svd(h, full_matrices=True)
    top = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > rank_tolerance * top)) if top > 0 else 0
    cm = ChannelMatrix(
        matrix=h,
        u=u,
        singular_values=s,
        v=vh.conj().T,
        rank=rank,
        rank_tolerance=rank_tolerance,
    )

    scale = max(top, 1.0)
    if cm.reconstruction_residual() > RECONSTRUCTION_TOL * scale:
        raise ValueError("SVD reconstruction residual exceeds tolerance")
    for factor in (u, vh):
        n = factor.shape[0]
        gap = np.max(np.abs(factor @ factor.conj().T - np.eye(n)))
        if gap > UNITARITY_TOL:
            raise ValueError("SVD factor failed the unitarity check")
    return cm


@dataclass(frozen=True)
class NoiseLoading:
    """Per-eigen-channel loss coefficients ``sqrt(1 - eta_k)``.

    Together with the singular values these satisfy
    ``S S† + Sgm Sgm† = I`` on the receive side, the bookkeeping that keeps
    the channel-plus-environment transformation unitary.
    """

    loss_coefficients: np.ndarray


def noise_loading(cm: ChannelMatrix) -> NoiseLoading:
    """Thermal coupling coefficients for a passive channel.

    Eigen-channels beyond the numerical rank couple entirely to the
    environment (coefficient one).
    """
    cm.require_physical()
    eta = np.zeros(cm.n_rx)
    kept = min(cm.rank, cm.n_rx)
    eta[:kept] = np.clip(cm.eta[:kept], 0.0, 1.0)
    return NoiseLoading(loss_coefficients=np.sqrt(1.0 - eta))


def build_two_path_channel(
    paths, spacing: float, rank_tolerance: float = DEFAULT_RANK_TOL
) -> ChannelMatrix:
    """Two-antenna channel as a sum of rank-one steering-vector products.

    Each path contributes ``sqrt(eta') e^{-i phi'} e(rx_cos) e(tx_cos)†`` on
    length-2 arrays with the given element spacing.  The result is full rank
    exactly when the two paths are resolvable on both array sides.
    """
    paths = list(paths)
    if len(paths) != 2:
        raise ValueError(f"expected exactly two paths, got {len(paths)}")
    h = np.zeros((2, 2), dtype=complex)
    for p in paths:
        rx = steering_vector(SteeringGeometry(2, spacing, p.rx_cosine))
        tx = steering_vector(SteeringGeometry(2, spacing, p.tx_cosine))
        h += np.sqrt(p.transmissivity) * np.exp(-1j * p.phase) * np.outer(rx, tx.conj())
    return decompose_channel(h, rank_tolerance).require_physical()


def build_clutter_channel(
    tx_paths,
    rx_paths,
    n_tx: int,
    n_tag: int,
    n_rx: int,
    spacing: float,
    rank_tolerance: float = DEFAULT_RANK_TOL,
) -> ChannelMatrix:
    """Compose reader-to-tag and tag-to-reader clutter scattering.

    ``tx_paths`` build the ``n_tag x n_tx`` inbound matrix, ``rx_paths`` the
    ``n_rx x n_tag`` outbound matrix; the full channel is their product, which
    caps the channel rank at the number of tag antennas.
    """
    tx_paths = list(tx_paths)
    rx_paths = list(rx_paths)
    if not tx_paths or not rx_paths:
        raise ValueError("both clutter path lists must be non-empty")

    h_t = np.zeros((n_tag, n_tx), dtype=complex)
    for p in tx_paths:
        tag = steering_vector(SteeringGeometry(n_tag, spacing, p.tag_cosine))
        far = steering_vector(SteeringGeometry(n_tx, spacing, p.far_cosine))
        h_t += np.sqrt(p.transmissivity) * np.exp(-1j * p.phase) * np.outer(tag, far.conj())

    h_r = np.zeros((n_rx, n_tag), dtype=complex)
    for p in rx_paths:
        far = steering_vector(SteeringGeometry(n_rx, spacing, p.far_cosine))
        tag = steering_vector(SteeringGeometry(n_tag, spacing, p.tag_cosine))
        h_r += np.sqrt(p.transmissivity) * np.exp(-1j * p.phase) * np.outer(far, tag.conj())

    return decompose_channel(h_r @ h_t, rank_tolerance).require_physical()


@dataclass(frozen=True)
class FadingSpec:
    """Double-Rayleigh ensemble parameters.

    The tag antenna count caps the channel rank; the reference round-trip
    transmissivity sets the ensemble power so that the expected
    ``trace(H H†)`` equals ``n_tag * n_rx * reference_rtt``.
    """

    n_tx: int
    n_rx: int
    n_tag: int
    reference_rtt: float
    seed: int

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_tag"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_tag > min(self.n_tx, self.n_rx):
            raise ValueError(
                f"n_tag={self.n_tag} exceeds min(n_tx, n_rx)="
                f"{min(self.n_tx, self.n_rx)}; the rank law would not hold"
            )
        if not 0.0 < self.reference_rtt < 1.0:
            raise ValueError(
                f"reference_rtt must lie in (0, 1), got {self.reference_rtt}"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def sample_double_rayleigh(
    spec: FadingSpec,
    draw,
    return_rejections: bool = False,
    max_resamples: int = 100,
):
    """Draw one double-Rayleigh channel, deterministically in ``(seed, draw)``.

    Both hop matrices have i.i.d. circularly-symmetric complex Gaussian
    entries with per-entry variance ``sqrt(reference_rtt / n_tx)``, making the
    ensemble mean of ``trace(H H†)`` equal ``n_tag * n_rx * reference_rtt``.

    Samples whose spectral norm exceeds one are non-physical and are
    rejection-resampled (each attempt has its own substream, preserving
    determinism); the rejection count is available via ``return_rejections``.

    Parameters
    ----------
    spec : FadingSpec
    draw : int or tuple of int
        Index (or index path) of this draw within the seeded ensemble.

    Returns
    -------
    ChannelMatrix, or ``(ChannelMatrix, int)`` when ``return_rejections``.
    """
    path = (draw,) if np.isscalar(draw) else tuple(draw)
    # std per real component: per-entry complex variance is sqrt(eta / n_tx)
    scale = np.sqrt(np.sqrt(spec.reference_rtt / spec.n_tx) / 2.0)

    rejections = 0
    for attempt in range(max_resamples):
        rng = substream(spec.seed, *path, attempt)
        h_t = scale * (
            rng.standard_normal((spec.n_tag, spec.n_tx))
            + 1j * rng.standard_normal((spec.n_tag, spec.n_tx))
        )
        h_r = scale * (
            rng.standard_normal((spec.n_rx, spec.n_tag))
            + 1j * rng.standard_normal((spec.n_rx, spec.n_tag))
        )
        cm = decompose_channel(h_r @ h_t)
        if cm.is_physical:
            return (cm, rejections) if return_rejections else cm
        rejections += 1
    raise NonPhysicalChannelError(
        f"{max_resamples} consecutive fading draws were non-physical; "
        f"reference_rtt={spec.reference_rtt} is set too high"
    )
