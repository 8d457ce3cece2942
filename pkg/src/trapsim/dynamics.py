"""Forward stochastic simulation of atom occupancy and telegraph traces.

Occupancy evolves as a continuous-time Markov chain, sampled exactly event by
event (no time discretization), so dwell times are exactly exponential. Each
lattice site carries up to ``max_atoms_per_site`` atoms; loading is blocked
at the cap, single atoms leave at the one-body rate, and pairs collide at
beta * n(n-1)/2 per site, removing exactly two atoms.

Photon counts are conditionally Poisson given the occupancy path: each bin
draws from Poisson(background*T + per_atom_rate * integral of total
occupancy over the bin).

The measurement cycle mimics the experiment: a loading phase with the MOT on
(no photons recorded), a probe readout phase binned at the counting width
(50 ms by default), then an off period in which the trap is emptied. The
first recorded probe bin of every cycle is forced to zero, a bookkeeping
convention the analysis side knows to skip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import CHUNK, simulate_events

PHASE_LOAD = "load"
PHASE_PROBE = "probe"
PHASE_OFF = "off"
_PHASES = (PHASE_LOAD, PHASE_PROBE, PHASE_OFF)


@dataclass(frozen=True)
class DynamicsParams:
    """Stochastic rates and site structure for the occupancy simulation."""

    load_rate_probe: float = 0.2
    load_rate_mot: float = 1.0
    one_body_loss_rate: float = 1.0
    pair_loss_rate: float = 0.0
    n_sites: int = 1
    max_atoms_per_site: int = 1
    atom_count_rate: float = 1000.0
    background_count_rate: float = 100.0

    def __post_init__(self):
        for name in (
            "load_rate_probe",
            "load_rate_mot",
            "one_body_loss_rate",
            "pair_loss_rate",
            "atom_count_rate",
            "background_count_rate",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if self.max_atoms_per_site < 1:
            raise ValueError("max_atoms_per_site must be >= 1")


@dataclass(frozen=True, eq=False)
class OccupancyPath:
    """Event-by-event record of per-site occupancy over one simulated span."""

    event_times_s: np.ndarray  # (m,) float64, strictly nondecreasing
    site_index: np.ndarray  # (m,) int32
    delta: np.ndarray  # (m,) int8, +1 load, -1 one-body, -2 pair
    occupancy: np.ndarray  # (m, n_sites) int16, state after each event
    initial_occupancy: np.ndarray  # (n_sites,) int64
    duration_s: float

    @property
    def n_events(self) -> int:
        return len(self.event_times_s)

    @property
    def n_sites(self) -> int:
        return len(self.initial_occupancy)

    @property
    def final_occupancy(self) -> np.ndarray:
        if self.n_events == 0:
            return self.initial_occupancy.copy()
        return self.occupancy[-1].astype(np.int64)

    def total_occupancy_steps(self):
        """Step-function representation: times (incl. 0) and total occupancy."""
        t = np.concatenate(([0.0], self.event_times_s))
        levels = np.concatenate(
            ([self.initial_occupancy.sum()], self.occupancy.sum(axis=1))
        ).astype(np.int64)
        return t, levels

    def integrate_total(self, edges_s: np.ndarray) -> np.ndarray:
        """Integral of total occupancy over each [edge_i, edge_i+1) interval."""
        t, levels = self.total_occupancy_steps()
        cum = np.concatenate(([0.0], np.cumsum(levels[:-1] * np.diff(t))))
        edges = np.asarray(edges_s, dtype=float)
        idx = np.searchsorted(t, edges, side="right") - 1
        at_edges = cum[idx] + levels[idx] * (edges - t[idx])
        return np.diff(at_edges)

    def occupancy_at(self, t_s: float) -> np.ndarray:
        """Per-site occupancy in effect at time t."""
        i = int(np.searchsorted(self.event_times_s, t_s, side="right"))
        if i == 0:
            return self.initial_occupancy.copy()
        return self.occupancy[i - 1].astype(np.int64)


@dataclass(frozen=True, eq=False)
class TraceRecord:
    """Binned photon-count time series with phase and cycle annotations."""

    bin_width_ms: float
    counts: np.ndarray  # (n,) int64, >= 0
    phases: np.ndarray = None  # (n,) str, each in {load, probe, off}
    cycle_index: np.ndarray = None  # (n,) int32

    def __post_init__(self):
        if self.bin_width_ms <= 0:
            raise ValueError("bin width must be > 0")
        counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be >= 0")
        object.__setattr__(self, "counts", counts)
        n = len(counts)
        phases = self.phases
        if phases is None:
            phases = np.full(n, PHASE_PROBE, dtype="<U5")
        else:
            phases = np.asarray(phases, dtype="<U5")
        if len(phases) != n:
            raise ValueError("phases length must match counts")
        bad = set(np.unique(phases)) - set(_PHASES)
        if bad:
            raise ValueError(f"unknown phase labels: {sorted(bad)}")
        object.__setattr__(self, "phases", phases)
        cyc = self.cycle_index
        cyc = np.zeros(n, dtype=np.int32) if cyc is None else np.asarray(cyc, np.int32)
        if len(cyc) != n:
            raise ValueError("cycle_index length must match counts")
        object.__setattr__(self, "cycle_index", cyc)

    @classmethod
    def from_counts(cls, counts, bin_width_ms: float = 50.0) -> "TraceRecord":
        return cls(bin_width_ms=bin_width_ms, counts=np.asarray(counts))

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def duration_ms(self) -> float:
        return self.n_bins * self.bin_width_ms

    @property
    def t_ms(self) -> np.ndarray:
        """Start time of each bin."""
        return np.arange(self.n_bins) * self.bin_width_ms

    @property
    def probe_mask(self) -> np.ndarray:
        return self.phases == PHASE_PROBE

    @property
    def has_phase_structure(self) -> bool:
        return bool(np.any(self.phases != PHASE_PROBE))

    def forced_zero_mask(self) -> np.ndarray:
        """First probe bin of each cycle, where the count is zeroed by
        convention. Only meaningful when the trace carries phase structure;
        a bare all-probe trace has no such bins."""
        mask = np.zeros(self.n_bins, dtype=bool)
        if not self.has_phase_structure:
            return mask
        probe = self.probe_mask
        for c in np.unique(self.cycle_index):
            idx = np.nonzero(probe & (self.cycle_index == c))[0]
            if len(idx):
                mask[idx[0]] = True
        return mask

    def analysis_mask(self) -> np.ndarray:
        """Probe bins that carry signal (forced zeros excluded)."""
        return self.probe_mask & ~self.forced_zero_mask()


def concat_traces(traces) -> TraceRecord:
    """Concatenate cycle traces (equal bin widths) into one record."""
    traces = list(traces)
    if not traces:
        raise ValueError("nothing to concatenate")
    widths = {t.bin_width_ms for t in traces}
    if len(widths) != 1:
        raise ValueError(f"mixed bin widths: {sorted(widths)}")
    return TraceRecord(
        bin_width_ms=traces[0].bin_width_ms,
        counts=np.concatenate([t.counts for t in traces]),
        phases=np.concatenate([t.phases for t in traces]),
        cycle_index=np.concatenate([t.cycle_index for t in traces]),
    )


def rebin_trace(trace: TraceRecord, factor: int) -> TraceRecord:
    """Merge bins in groups of ``factor``; total counts are conserved exactly.

    Groups must not straddle phase or cycle boundaries.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if trace.n_bins % factor:
        raise ValueError(f"{trace.n_bins} bins not divisible by {factor}")
    shape = (-1, factor)
    phases = trace.phases.reshape(shape)
    cycles = trace.cycle_index.reshape(shape)
    if np.any(phases != phases[:, :1]) or np.any(cycles != cycles[:, :1]):
        raise ValueError("rebin groups must share phase and cycle")
    return TraceRecord(
        bin_width_ms=trace.bin_width_ms * factor,
        counts=trace.counts.reshape(shape).sum(axis=1),
        phases=phases[:, 0],
        cycle_index=cycles[:, 0],
    )


def _segment(
    params: DynamicsParams,
    load_rate: float,
    duration_s: float,
    initial_occupancy: np.ndarray,
    rng: np.random.Generator,
) -> OccupancyPath:
    times, sites, deltas, _final = simulate_events(
        float(load_rate),
        float(params.one_body_loss_rate),
        float(params.pair_loss_rate),
        int(params.n_sites),
        int(params.max_atoms_per_site),
        float(duration_s),
        np.asarray(initial_occupancy, dtype=np.int64),
        rng,
        CHUNK,
    )
    occ = np.empty((len(times), params.n_sites), dtype=np.int16)
    for s in range(params.n_sites):
        occ[:, s] = initial_occupancy[s] + np.cumsum(
            deltas * (sites == s), dtype=np.int64
        )
    return OccupancyPath(
        event_times_s=times,
        site_index=sites,
        delta=deltas,
        occupancy=occ,
        initial_occupancy=np.asarray(initial_occupancy, dtype=np.int64),
        duration_s=float(duration_s),
    )


def simulate_occupancy(
    params: DynamicsParams,
    duration_s: float,
    seed: int,
    phase: str = PHASE_PROBE,
    initial_occupancy=None,
) -> OccupancyPath:
    """Exact event-driven occupancy simulation over one time span.

    ``phase`` picks the loading rate ("probe" or "load"/MOT). The same seed
    always reproduces the same path.
    """
    if duration_s <= 0:
        raise ValueError("duration must be > 0")
    if phase == PHASE_PROBE:
        rate = params.load_rate_probe
    elif phase in (PHASE_LOAD, "mot"):
        rate = params.load_rate_mot
    else:
        raise ValueError(f"unknown phase {phase!r}")
    init = (
        np.zeros(params.n_sites, dtype=np.int64)
        if initial_occupancy is None
        else np.asarray(initial_occupancy, dtype=np.int64)
    )
    if len(init) != params.n_sites:
        raise ValueError("initial occupancy length must equal n_sites")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return _segment(params, rate, duration_s, init, rng)


def _draw_counts(
    path: OccupancyPath,
    params: DynamicsParams,
    bin_width_ms: float,
    rng: np.random.Generator,
) -> np.ndarray:
    bin_s = bin_width_ms * 1e-3
    n_bins = int(round(path.duration_s / bin_s))
    if abs(n_bins * bin_s - path.duration_s) > 1e-9 or n_bins < 1:
        raise ValueError(
            f"duration {path.duration_s} s is not a whole number of "
            f"{bin_width_ms} ms bins"
        )
    edges = np.arange(n_bins + 1) * bin_s
    occupancy_time = path.integrate_total(edges)
    means = params.background_count_rate * bin_s + params.atom_count_rate * occupancy_time
    return rng.poisson(means).astype(np.int64)


def synthesize_trace(
    path: OccupancyPath,
    params: DynamicsParams,
    bin_width_ms: float,
    seed: int,
) -> TraceRecord:
    """Binned Poisson photon counts for a given occupancy path."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return TraceRecord(
        bin_width_ms=bin_width_ms, counts=_draw_counts(path, params, bin_width_ms, rng)
    )


def simulate_cycles(
    params: DynamicsParams,
    n_cycles: int,
    seed: int,
    bin_width_ms: float = 50.0,
    mot_seconds: float = 3.0,
    probe_seconds: float = 2.0,
    off_seconds: float = 1.0,
    return_paths: bool = False,
):
    """Simulate full measurement cycles and their recorded traces.

    Each cycle loads with the MOT rate (bins labeled "load", no photons),
    records the probe phase (counts with the first bin forced to zero), then
    empties the trap for the off period. Cycle i uses a generator derived
    from (seed, i), so results do not depend on evaluation order.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    bin_s = bin_width_ms * 1e-3
    n_load = int(round(mot_seconds / bin_s))
    n_probe = int(round(probe_seconds / bin_s))
    n_off = int(round(off_seconds / bin_s))
    for label, seconds, n in (
        ("mot", mot_seconds, n_load),
        ("probe", probe_seconds, n_probe),
        ("off", off_seconds, n_off),
    ):
        if n < 1 or abs(n * bin_s - seconds) > 1e-9:
            raise ValueError(
                f"{label} phase of {seconds} s is not a whole number of "
                f"{bin_width_ms} ms bins"
            )
    traces = []
    paths = []
    for i in range(n_cycles):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        empty = np.zeros(params.n_sites, dtype=np.int64)
        mot_path = _segment(params, params.load_rate_mot, mot_seconds, empty, rng)
        probe_path = _segment(
            params, params.load_rate_probe, probe_seconds, mot_path.final_occupancy, rng
        )
        probe_counts = _draw_counts(probe_path, params, bin_width_ms, rng)
        probe_counts[0] = 0  # recording convention: cycles start from zero
        counts = np.concatenate(
            (np.zeros(n_load, np.int64), probe_counts, np.zeros(n_off, np.int64))
        )
        phases = np.concatenate(
            (
                np.full(n_load, PHASE_LOAD, dtype="<U5"),
                np.full(n_probe, PHASE_PROBE, dtype="<U5"),
                np.full(n_off, PHASE_OFF, dtype="<U5"),
            )
        )
        traces.append(
            TraceRecord(
                bin_width_ms=bin_width_ms,
                counts=counts,
                phases=phases,
                cycle_index=np.full(len(counts), i, dtype=np.int32),
            )
        )
        if return_paths:
            paths.append((mot_path, probe_path))
    return (traces, paths) if return_paths else traces
