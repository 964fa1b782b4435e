"""RF link models: free-wave and leaky-medium pathloss, jamming, SINR.

Two propagation media are supported. In FREE mode both the legitimate
train-to-train link and the jammer-to-train link follow a log-distance
pathloss law. In LEAKY mode the line is covered by a leaky transmission
medium with inline repeaters every ``d_rptr`` km: signals couple in, decay
linearly in dB with longitudinal distance, and are re-amplified by each
repeater they traverse. The legitimate signal is injected by the access
point serving the receiving train (coupling loss only), while a jammer's
signal first crosses an air gap of ``d_j_wg`` km into the medium and then
travels along it to the receiver, gaining ``c_rptr`` dB at every repeater in
between -- which is what makes a single low-power jammer effective far down
the line.

Distances are kilometres, powers dBm, losses dB. The interference-limited
link quality is ``sinr = (p_s - eta_s) - (p_j - eta_j)`` in dB and a packet
is received iff it meets the threshold ``tau``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Medium",
    "JamStrategy",
    "ChannelParams",
    "JammerConfig",
    "FhssConfig",
    "free_pathloss",
    "repeaters_between",
    "leaky_pathloss_legit",
    "leaky_pathloss_jammer",
    "fhss_jammer_penalty",
    "sinr",
    "packet_received",
    "hop_sequence",
    "link_sinr",
]


class Medium(enum.Enum):
    FREE = "free"
    LEAKY = "leaky"


class JamStrategy(enum.Enum):
    CONSTANT_WIDEBAND = "constant_wideband"


@dataclass(frozen=True, slots=True)
class ChannelParams:
    """Propagation constants for one scenario.

    Attributes:
        medium: FREE or LEAKY.
        eta0: Free-wave pathloss at the reference distance, dB.
        gamma: Free-wave pathloss exponent.
        ref_distance: Free-wave reference distance, km.
        c_cplng: Coupling loss into the leaky medium, dB.
        alpha_loss: Longitudinal attenuation of the leaky medium, dB/km.
        eta_r_bar: Fixed radiated-hop loss from the medium to a train, dB.
        c_rptr: Gain of each inline repeater, dB.
        d_rptr: Repeater spacing, km.
        sinr_threshold_tau: Packet reception threshold, dB.
        p_s_dbm: Legitimate transmit power, dBm.
        fading_enabled: Apply the optional shadow-fading draw.
        fading_sigma: Std-dev of the zero-mean fading term, dB.
    """

    medium: Medium = Medium.LEAKY
    eta0: float = 90.0
    gamma: float = 2.0
    ref_distance: float = 1.0
    c_cplng: float = 0.3
    alpha_loss: float = 17.0
    eta_r_bar: float = 62.0
    c_rptr: float = 42.5
    d_rptr: float = 2.5
    sinr_threshold_tau: float = 10.0
    p_s_dbm: float = 23.0
    fading_enabled: bool = False
    fading_sigma: float = 2.0

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise ValueError("gamma must be > 0")
        if self.ref_distance <= 0.0:
            raise ValueError("ref_distance must be > 0")
        if self.d_rptr <= 0.0:
            raise ValueError("d_rptr must be > 0")
        if self.alpha_loss < 0.0:
            raise ValueError("alpha_loss must be >= 0")
        if self.fading_sigma < 0.0:
            raise ValueError("fading_sigma must be >= 0")


@dataclass(frozen=True, slots=True)
class JammerConfig:
    """A stationary wideband jammer beside the track.

    ``d_j_wg`` is the air gap between the jammer antenna and the leaky
    medium, in km: the single knob controlling attack strength in LEAKY
    mode (the free-wave hop across it is charged before the signal enters
    the medium). In FREE mode only ``position`` and ``p_j_dbm`` matter.

    The default air gap is calibrated so the jam succeeds exactly where the
    jammer's signal rides one more repeater than the legitimate one: the
    injection loss lands between the 10.3 dB that would let it jam with no
    repeater advantage and the 13.7 dB at which even one extra repeater is
    not enough.
    """

    active: bool = False
    position: float = 0.2
    p_j_dbm: float = 23.0
    d_j_wg: float = 1.2e-4
    strategy: JamStrategy = JamStrategy.CONSTANT_WIDEBAND

    def __post_init__(self) -> None:
        if self.position < 0.0:
            raise ValueError("jammer position must be >= 0")
        if self.d_j_wg <= 0.0:
            raise ValueError("d_j_wg must be > 0")


@dataclass(frozen=True, slots=True)
class FhssConfig:
    """Frequency-hopping countermeasure settings.

    A wideband jammer must spread its power over all ``n_channels`` hop
    channels, so the legitimate link gains ``10*log10(n_channels)`` dB of
    SINR. ``channel_bandwidth_khz`` is bookkeeping only; ``seed`` drives the
    published hop sequence.
    """

    enabled: bool = False
    n_channels: int = 1
    seed: int = 0
    channel_bandwidth_khz: float = 200.0

    def __post_init__(self) -> None:
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")


def free_pathloss(params: ChannelParams, d: float, fading_draw: float = 0.0) -> float:
    """Log-distance pathloss over ``d`` km of free space.

    The optional ``fading_draw`` (dB) is added only when
    ``params.fading_enabled`` is set.

    Raises:
        ValueError: ``d <= 0`` (the model has no field at zero range).
    """
    if d <= 0.0:
        raise ValueError("free-wave distance must be > 0")
    eta = params.eta0 + 10.0 * params.gamma * math.log10(d / params.ref_distance)
    if params.fading_enabled:
        eta += fading_draw
    return eta


def repeaters_between(x_a: float, x_b: float, d_rptr: float) -> int:
    """Number of repeaters strictly between two track positions (km).

    Repeaters sit at k * d_rptr for k >= 1; endpoints do not count. The
    order of the arguments is irrelevant.
    """
    if d_rptr <= 0.0:
        raise ValueError("d_rptr must be > 0")
    lo = x_a if x_a <= x_b else x_b
    hi = x_b if x_a <= x_b else x_a
    if lo < 0.0:
        raise ValueError("positions must be >= 0")
    k_lo = int(math.floor(lo / d_rptr)) + 1
    while k_lo * d_rptr <= lo:
        k_lo += 1
    k_hi = int(math.floor(hi / d_rptr))
    while k_hi * d_rptr >= hi:
        k_hi -= 1
    n = k_hi - k_lo + 1
    return n if n > 0 else 0


def leaky_pathloss_legit(params: ChannelParams, x_tx: float, x_rx: float) -> float:
    """Pathloss of a legitimate signal through the leaky medium, dB.

    Couples in at ``x_tx``, travels to ``x_rx`` gaining ``c_rptr`` per
    repeater traversed, then radiates out to the train.
    """
    d = abs(x_rx - x_tx)
    n = repeaters_between(x_tx, x_rx, params.d_rptr)
    return params.c_cplng + params.alpha_loss * d - params.c_rptr * n + params.eta_r_bar


def fhss_jammer_penalty(fhss: FhssConfig | None) -> float:
    """Extra dB a wideband jammer loses against a hopping link."""
    if fhss is None or not fhss.enabled:
        return 0.0
    return 10.0 * math.log10(fhss.n_channels)


def leaky_pathloss_jammer(
    params: ChannelParams,
    jam: JammerConfig,
    x_rx: float,
    fhss: FhssConfig | None = None,
    fading_draw: float = 0.0,
) -> float:
    """Pathloss of the jammer's signal to a train at ``x_rx``, dB.

    Free-wave hop across the air gap into the medium, then longitudinal
    travel with repeater gains, then the radiated hop out. A hopping link
    adds the wideband-spreading penalty on top.
    """
    eta_wg = free_pathloss(params, jam.d_j_wg, fading_draw)
    d = abs(x_rx - jam.position)
    n = repeaters_between(jam.position, x_rx, params.d_rptr)
    eta = eta_wg + params.alpha_loss * d - params.c_rptr * n + params.eta_r_bar
    return eta + fhss_jammer_penalty(fhss)


def sinr(p_s: float, eta_s: float, p_j: float, eta_j: float) -> float:
    """Interference-limited link quality in dB."""
    return (p_s - eta_s) - (p_j - eta_j)


def packet_received(sinr_db: float, tau: float) -> bool:
    """A packet gets through iff the SINR meets the threshold."""
    return sinr_db >= tau


def hop_sequence(fhss: FhssConfig, length: int) -> list[int]:
    """Published pseudorandom hop channels, uniform over ``n_channels``.

    Deterministic for a given ``fhss.seed``; both ends of the link derive
    the same sequence.
    """
    if length < 0:
        raise ValueError("length must be >= 0")
    rng = np.random.Generator(np.random.PCG64(fhss.seed))
    return rng.integers(0, fhss.n_channels, size=length).tolist()


def link_sinr(
    params: ChannelParams,
    jam: JammerConfig,
    fhss: FhssConfig | None,
    x_leader: float,
    x_follower: float,
    fading_draws: tuple[float, float] = (0.0, 0.0),
) -> float:
    """SINR of the leader-state link at the following train, dB.

    With the jammer inactive there is no interference and the link is
    perfect: returns ``+inf``. In LEAKY mode the legitimate signal is
    injected by the access point serving the receiver, so its loss is the
    constant ``c_cplng + eta_r_bar`` regardless of the inter-train gap; in
    FREE mode it travels the gap directly. ``fading_draws`` is
    ``(legit_draw, jammer_draw)`` in dB, applied only on free-wave hops and
    only when fading is enabled. A zero-range free-wave hop saturates
    instead of raising: a receiver on top of the jammer is jammed outright
    (``-inf``), one on top of the leader hears it perfectly (``+inf``).
    """
    if not jam.active:
        return math.inf
    if params.medium is Medium.LEAKY:
        eta_s = leaky_pathloss_legit(params, x_follower, x_follower)
        eta_j = leaky_pathloss_jammer(params, jam, x_follower, fhss, fading_draws[1])
    else:
        d_j = abs(x_follower - jam.position)
        if d_j == 0.0:
            return -math.inf
        gap = abs(x_leader - x_follower)
        if gap == 0.0:
            return math.inf
        eta_s = free_pathloss(params, gap, fading_draws[0])
        eta_j = free_pathloss(params, d_j, fading_draws[1]) + fhss_jammer_penalty(fhss)
    return sinr(params.p_s_dbm, eta_s, jam.p_j_dbm, eta_j)
