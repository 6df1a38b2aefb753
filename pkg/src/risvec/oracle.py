"""Brute-force reference for the discrete phase-selection problem.

Enumerates every b-bit configuration of every element and scores the mean
spectral efficiency across vehicles on one slot's channel realization. Cost
is (2^b)^N configurations; guarded so it is only usable at analysis scale.
"""

from __future__ import annotations

import numpy as np

MAX_CONFIGS = 2_000_000


def enumerate_phase_indices(n_elements: int, b: int) -> np.ndarray:
    """(M, N) integer matrix of all index assignments, mixed-radix order."""
    levels = 1 << b
    count = levels ** n_elements
    if count > MAX_CONFIGS:
        raise ValueError("enumeration of %d configs is above the guard"
                         % count)
    idx = np.arange(count)
    cols = []
    for pos in range(n_elements - 1, -1, -1):
        cols.append((idx // (levels ** pos)) % levels)
    return np.stack(cols, axis=1)


def exhaustive_best_mean_rate(h_rb: np.ndarray, h_kr: np.ndarray,
                              h_kb: np.ndarray, b: int, p_offload: np.ndarray,
                              sigma2: float):
    """Best achievable mean log2(1+snr) over all configurations.

    h_kr has one row per vehicle; the same configuration applies to all of
    them, which is exactly the coupling the learned controller faces.
    Returns (best mean spectral efficiency, best index row).
    """
    h_kr = np.atleast_2d(h_kr)
    h_kb = np.atleast_1d(h_kb)
    p = np.broadcast_to(np.asarray(p_offload, dtype=float), h_kb.shape)
    n = h_kr.shape[1]
    indices = enumerate_phase_indices(n, b)
    phases = 2.0 * np.pi * indices / float(1 << b)
    weights = np.exp(1j * phases)                      # (M, N)
    base = np.conj(h_rb)[None, :] * h_kr               # (K, N)
    composite = weights @ base.T + h_kb[None, :]       # (M, K)
    gamma = p[None, :] * np.abs(composite) ** 2 / sigma2
    mean_rate = np.mean(np.log2(1.0 + gamma), axis=1)  # (M,)
    best = int(np.argmax(mean_rate))
    return float(mean_rate[best]), indices[best]
