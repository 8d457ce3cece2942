# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled event kernel for the occupancy simulation.

Statement-for-statement mirror of _kernel_py.simulate_events; see that module
for the algorithm notes. Uses libm log1p so waiting times match the Python
math.log1p results bit for bit.
"""

from libc.math cimport log1p

import numpy as np

cimport numpy as cnp

cnp.import_array()


def simulate_events(
    double load_rate,
    double gamma1,
    double beta,
    int n_sites,
    int max_atoms,
    double duration,
    cnp.int64_t[::1] initial_occupancy,
    object rng,
    int chunk,
):
    cdef cnp.int64_t[::1] occ = np.array(initial_occupancy, dtype=np.int64)

    cdef Py_ssize_t cap = 1024
    cdef cnp.ndarray times_arr = np.empty(cap, dtype=np.float64)
    cdef cnp.ndarray sites_arr = np.empty(cap, dtype=np.int32)
    cdef cnp.ndarray deltas_arr = np.empty(cap, dtype=np.int8)
    cdef double[::1] times = times_arr
    cdef cnp.int32_t[::1] sites = sites_arr
    cdef cnp.int8_t[::1] deltas = deltas_arr
    cdef Py_ssize_t m = 0

    cdef object buf_obj = rng.random(chunk)
    cdef double[::1] buf = buf_obj
    cdef Py_ssize_t pos = 0

    cdef double t = 0.0
    cdef double total, u, x, r
    cdef long n
    cdef int s, hit_site, hit_delta, last_site, last_delta
    cdef cnp.ndarray new_arr

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
            buf_obj = rng.random(chunk)
            buf = buf_obj
            pos = 0
        u = buf[pos]
        pos += 1
        t += -log1p(-u) / total
        if t > duration:
            break

        if pos == chunk:
            buf_obj = rng.random(chunk)
            buf = buf_obj
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
                last_site = s
                last_delta = 1
                if x < load_rate:
                    hit_site = s
                    hit_delta = 1
                    break
                x -= load_rate
            r = n * gamma1
            if r > 0.0:
                last_site = s
                last_delta = -1
                if x < r:
                    hit_site = s
                    hit_delta = -1
                    break
                x -= r
            r = beta * (n * (n - 1)) * 0.5
            if r > 0.0:
                last_site = s
                last_delta = -2
                if x < r:
                    hit_site = s
                    hit_delta = -2
                    break
                x -= r
        if hit_site < 0:
            # float fringe: x landed past the final channel
            hit_site = last_site
            hit_delta = last_delta

        occ[hit_site] += hit_delta

        if m == cap:
            cap *= 2
            new_arr = np.empty(cap, dtype=np.float64)
            new_arr[:m] = times_arr
            times_arr = new_arr
            times = times_arr
            new_arr = np.empty(cap, dtype=np.int32)
            new_arr[:m] = sites_arr
            sites_arr = new_arr
            sites = sites_arr
            new_arr = np.empty(cap, dtype=np.int8)
            new_arr[:m] = deltas_arr
            deltas_arr = new_arr
            deltas = deltas_arr
        times[m] = t
        sites[m] = hit_site
        deltas[m] = hit_delta
        m += 1

    return (
        times_arr[:m].copy(),
        sites_arr[:m].copy(),
        deltas_arr[:m].copy(),
        np.asarray(occ, dtype=np.int64),
    )
