"""Narrowband channel model for the surface-assisted uplink.

Three links per vehicle: a heavily obstructed direct path to the BS with
Rayleigh-type small-scale fading, and the two Rician pure line-of-sight hops
via the reflecting array (vehicle -> array, array -> BS). The array applies a
per-element discrete phase shift; the composite uplink coefficient is the
cascaded reflected term plus the direct term.

Conventions:
  * large-scale gain sqrt(rho * d^-alpha), rho referenced at 1 m
  * array response entries exp(-j * 2*pi/lambda * n * dr * sin(theta)),
    n = 0..N-1
  * b-bit phase alphabet {2*pi*i / 2^b : i = 0..2^b - 1}
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FadingParams:
    """Propagation constants shared by every link."""

    rho: float = 1e-2              # reference gain at 1 m
    alpha_kb: float = 5.5          # direct vehicle-BS exponent (blocked)
    alpha_rb: float = 2.5          # array-BS exponent
    alpha_kr: float = 2.2          # vehicle-array exponent
    rician_R: float = 10.0
    wavelength_lambda: float = 0.15
    element_spacing_dr: float = 0.075   # lambda / 2
    noise_sigma2: float = 1e-14         # -110 dBm
    bandwidth_W: float = 1e6

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValueError("rho must be positive")
        for a in (self.alpha_kb, self.alpha_rb, self.alpha_kr):
            if a <= 0.0:
                raise ValueError("path-loss exponents must be positive")
        if self.rician_R < 0.0:
            raise ValueError("Rician factor must be nonnegative")
        if self.wavelength_lambda <= 0.0 or self.element_spacing_dr <= 0.0:
            raise ValueError("bad array geometry")
        if self.noise_sigma2 <= 0.0:
            raise ValueError("noise power must be positive")
        if self.bandwidth_W <= 0.0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True, eq=False)
class PhaseConfig:
    """Discrete per-element reflection setting: indices into the b-bit alphabet."""

    indices: np.ndarray            # int array, each in [0, 2^b)
    b: int
    beta: np.ndarray = field(default=None)  # per-element amplitude, defaults to 1

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        if self.b < 1:
            raise ValueError("need at least one phase bit")
        levels = 1 << self.b
        if idx.ndim != 1 or np.any(idx < 0) or np.any(idx >= levels):
            raise ValueError("phase indices out of range for %d bits" % self.b)
        beta = self.beta
        if beta is None:
            beta = np.ones(idx.shape[0])
        beta = np.asarray(beta, dtype=float)
        if beta.shape != idx.shape or np.any(beta < 0.0) or np.any(beta > 1.0):
            raise ValueError("amplitudes must match indices and lie in [0, 1]")
        object.__setattr__(self, "beta", beta)

    @property
    def n_elements(self) -> int:
        return int(self.indices.shape[0])

    def phases(self) -> np.ndarray:
        """Phase values in radians, 2*pi*index / 2^b."""
        return 2.0 * np.pi * self.indices / float(1 << self.b)


@dataclass
class ChannelSet:
    """One vehicle's channel realization for one slot."""

    h_kb: complex                  # direct vehicle -> BS
    h_kr: np.ndarray               # vehicle -> array, length N
    h_rb: np.ndarray               # array -> BS, length N


def los_steering(n_elements: int, dr: float, lam: float,
                 sin_theta: float) -> np.ndarray:
    """Array response of the uniform linear array for a given arrival sine."""
    if n_elements < 1:
        raise ValueError("need at least one element")
    if abs(sin_theta) > 1.0:
        raise ValueError("sin(theta) outside [-1, 1]")
    n = np.arange(n_elements)
    return np.exp(-1j * 2.0 * np.pi / lam * n * dr * sin_theta)


def direct_gain(d: float, alpha: float, g: complex, rho: float) -> complex:
    """Obstructed direct channel: large-scale loss times small-scale factor g."""
    if d <= 0.0:
        raise ValueError("distance must be positive")
    return np.sqrt(rho * d ** (-alpha)) * g


def rician_los_gain(d: float, alpha: float, rician_R: float,
                    steering: np.ndarray, rho: float) -> np.ndarray:
    """Pure line-of-sight Rician link: scaled steering vector.

    Only the deterministic component is kept; the sqrt(R/(1+R)) weight of the
    Rician mixture stays so that R remains a meaningful knob.
    """
    if d <= 0.0:
        raise ValueError("distance must be positive")
    if rician_R < 0.0:
        raise ValueError("Rician factor must be nonnegative")
    scale = np.sqrt(rho * d ** (-alpha)) * np.sqrt(rician_R / (1.0 + rician_R))
    return scale * np.asarray(steering)


def rayleigh_draw(rng: np.random.Generator) -> complex:
    # uniform phase, squared magnitude ~ Exp(1); redrawn every slot
    mag2 = rng.exponential(1.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return np.sqrt(mag2) * np.exp(1j * phase)


def rayleigh_draw_batch(k: int, rng: np.random.Generator) -> np.ndarray:
    """k independent small-scale factors, one vectorized draw per stream use."""
    mag2 = rng.exponential(1.0, size=k)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=k)
    return np.sqrt(mag2) * np.exp(1j * phase)


def phase_matrix_apply(cfg: PhaseConfig, h_rb: np.ndarray,
                       h_kr: np.ndarray) -> complex:
    """Cascaded reflected coefficient h_rb^H diag(beta e^{j theta}) h_kr."""
    h_rb = np.asarray(h_rb)
    h_kr = np.asarray(h_kr)
    if h_rb.shape != h_kr.shape or h_rb.shape[0] != cfg.n_elements:
        raise ValueError("channel vectors must match the element count")
    weights = cfg.beta * np.exp(1j * cfg.phases())
    return complex(np.sum(np.conj(h_rb) * weights * h_kr))


def snr(p: float, channels: ChannelSet, cfg: PhaseConfig | None,
        sigma2: float) -> float:
    """Receive SNR for one vehicle at transmit power p.

    cfg None means the surface is absent: only the direct term contributes.
    """
    if sigma2 <= 0.0:
        raise ValueError("noise power must be positive")
    if p < 0.0:
        raise ValueError("power must be nonnegative")
    if cfg is None:
        composite = channels.h_kb
    else:
        composite = phase_matrix_apply(cfg, channels.h_rb, channels.h_kr) \
            + channels.h_kb
    return p * abs(composite) ** 2 / sigma2


def rate_bits(gamma: float, bandwidth: float, dt: float) -> float:
    """Bits deliverable in one slot at the given SNR."""
    if gamma < 0.0:
        raise ValueError("SNR must be nonnegative")
    return dt * bandwidth * np.log2(1.0 + gamma)
