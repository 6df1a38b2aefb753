"""CSV schemas and deterministic writers.

All run outputs are plain CSV with fixed column orders. Floats are written
with repr (shortest round-trip form), so a run with the same config and seed
produces byte-identical files.
"""

from __future__ import annotations

import csv


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def phase_episode_header() -> list[str]:
    return ["episode", "mean_ris_reward", "mean_rate_bps", "noise_std"]


def power_episode_header(k: int) -> list[str]:
    cols = ["episode", "r_global_mean"]
    cols += [f"r_local_mean_{i}" for i in range(k)]
    cols += [f"p_offload_mean_w_{i}" for i in range(k)]
    cols += [f"p_local_mean_w_{i}" for i in range(k)]
    cols += ["queue_mean_bits"]
    return cols


def test_step_header(k: int) -> list[str]:
    cols = ["episode", "step", "scheme"]
    cols += [f"p_offload_w_{i}" for i in range(k)]
    cols += [f"p_local_w_{i}" for i in range(k)]
    cols += [f"queue_bits_{i}" for i in range(k)]
    cols += [f"snr_db_{i}" for i in range(k)]
    cols += [f"r_local_{i}" for i in range(k)]
    cols += ["r_global"]
    return cols


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
