"""Pure-Python event kernel for the occupancy simulation.

Reference implementation of the exact event-driven sampler; the compiled
extension in _kernel.pyx mirrors it statement for statement so that both
backends consume the random stream identically and produce bit-identical
event sequences for the same seed.

Random numbers are taken from the generator in fixed-size chunks; waiting
times use -log1p(-u) so a drawn u == 0 is harmless. Event channels are laid
out per site in the fixed order (load, one-body loss, pair loss); the total
rate is accumulated channel by channel in that same order so the selection
walk can never overrun it.
"""

from __future__ import annotations

import math

import numpy as np


def simulate_events(
    load_rate: float,
    gamma1: float,
    beta: float,
    n_sites: int,
    max_atoms: int,
    duration: float,
    initial_occupancy: np.ndarray,
    rng: np.random.Generator,
    chunk: int,
):
    occ = [int(v) for v in initial_occupancy]
    times: list[float] = []
    sites: list[int] = []
    deltas: list[int] = []

    buf = rng.random(chunk)
    pos = 0
    t = 0.0

    while True:
        total = 0.0
        for s in range(n_sites):
            n = occ[s]
            if n < max_atoms:
                total += load_rate
            total += n * gamma1
            total += beta * (n * (n - 1)) * 0.5
        if total <= 0.0:
            break

        if pos == chunk:
            buf = rng.random(chunk)
            pos = 0
        u = buf[pos]
        pos += 1
        t += -math.log1p(-u) / total
        if t > duration:
            break

        if pos == chunk:
            buf = rng.random(chunk)
            pos = 0
        x = buf[pos] * total
        pos += 1

        hit_site = -1
        hit_delta = 0
        last_site = -1
        last_delta = 0
        for s in range(n_sites):
            n = occ[s]
            if n < max_atoms and load_rate > 0.0:
                last_site, last_delta = s, 1
                if x < load_rate:
                    hit_site, hit_delta = s, 1
                    break
                x -= load_rate
            r = n * gamma1
            if r > 0.0:
                last_site, last_delta = s, -1
                if x < r:
                    hit_site, hit_delta = s, -1
                    break
                x -= r
            r = beta * (n * (n - 1)) * 0.5
            if r > 0.0:
                last_site, last_delta = s, -2
                if x < r:
                    hit_site, hit_delta = s, -2
                    break
                x -= r
        if hit_site < 0:
            # float fringe: x landed past the final channel
            hit_site, hit_delta = last_site, last_delta

        occ[hit_site] += hit_delta
        times.append(t)
        sites.append(hit_site)
        deltas.append(hit_delta)

    return (
        np.asarray(times, dtype=np.float64),
        np.asarray(sites, dtype=np.int32),
        np.asarray(deltas, dtype=np.int8),
        np.asarray(occ, dtype=np.int64),
    )
