import numpy as np
import pytest
from scipy import stats

from trapsim.backend import CHUNK, available_backends
from trapsim.dynamics import (
    DynamicsParams,
    TraceRecord,
    concat_traces,
    rebin_trace,
    simulate_cycles,
    simulate_occupancy,
    synthesize_trace,
)


def params(**kw):
    defaults = dict(
        load_rate_probe=0.5,
        load_rate_mot=1.0,
        one_body_loss_rate=1.0 / 0.3,
        pair_loss_rate=0.0,
        n_sites=1,
        max_atoms_per_site=1,
        atom_count_rate=1000.0,
        background_count_rate=100.0,
    )
    defaults.update(kw)
    return DynamicsParams(**defaults)


def state1_dwells(path):
    """(duration, terminated) for single-site occupancy-1 intervals."""
    t, levels = path.total_occupancy_steps()
    t = np.append(t, path.duration_s)
    levels = np.append(levels, levels[-1])
    out = []
    start = None
    for i in range(len(t) - 1):
        if levels[i] == 1 and start is None:
            start = t[i]
        elif levels[i] != 1 and start is not None:
            out.append((t[i] - start, True))
            start = None
    if start is not None:
        out.append((t[-1] - start, False))
    return out


class TestSimulateOccupancy:
    def test_no_rates_no_events(self):
        p = params(load_rate_probe=0.0, load_rate_mot=0.0)
        path = simulate_occupancy(p, 10.0, seed=0)
        assert path.n_events == 0
        assert path.final_occupancy.tolist() == [0]

    def test_deterministic_under_seed(self):
        p = params()
        a = simulate_occupancy(p, 100.0, seed=42)
        b = simulate_occupancy(p, 100.0, seed=42)
        np.testing.assert_array_equal(a.event_times_s, b.event_times_s)
        np.testing.assert_array_equal(a.occupancy, b.occupancy)

    def test_occupancy_bounds_and_steps(self):
        p = params(n_sites=3, max_atoms_per_site=2, pair_loss_rate=5.0, load_rate_probe=4.0)
        path = simulate_occupancy(p, 200.0, seed=1)
        assert np.all(path.occupancy >= 0)
        assert np.all(path.occupancy <= p.max_atoms_per_site)
        assert set(np.unique(path.delta)).issubset({-2, -1, 1})

    def test_mean_single_atom_dwell(self):
        # Monte-Carlo oracle: interior occupancy-1 intervals are Exp(0.3 s)
        p = params(load_rate_probe=2.0, one_body_loss_rate=1.0 / 0.3)
        durations = []
        seed = 0
        while len(durations) < 10_000:
            path = simulate_occupancy(p, 2000.0, seed=seed)
            durations.extend(d for d, term in state1_dwells(path) if term)
            seed += 1
        durations = np.asarray(durations[:10_000])
        se = 0.3 / np.sqrt(len(durations))
        assert abs(durations.mean() - 0.300) < 3 * se

    def test_collision_blockade_suppresses_pairs(self):
        # with fast pair loss the doubly occupied fraction stays tiny
        p = params(
            load_rate_probe=5.0,
            one_body_loss_rate=1.0,
            pair_loss_rate=1000.0,
            max_atoms_per_site=2,
        )
        path = simulate_occupancy(p, 2000.0, seed=3)
        t, levels = path.total_occupancy_steps()
        t = np.append(t, path.duration_s)
        frac_pairs = np.sum((levels >= 2) * np.diff(t)) / path.duration_s
        assert frac_pairs < 1e-2

    def test_load_counts_are_poisson(self):
        # chi-square oracle: loads into an empty, lossless, unblocked site in
        # time T follow Poisson(R T)
        rate, duration = 1.5, 2.0
        p = params(
            load_rate_probe=rate,
            one_body_loss_rate=0.0,
            pair_loss_rate=0.0,
            max_atoms_per_site=10**6,
        )
        counts = np.array(
            [simulate_occupancy(p, duration, seed=s).final_occupancy[0] for s in range(10_000)]
        )
        mean = rate * duration
        edges = np.arange(0, 12)
        observed = np.array([np.sum(counts == k) for k in edges])
        observed = np.append(observed, np.sum(counts >= 12))
        expected = stats.poisson.pmf(edges, mean) * len(counts)
        expected = np.append(expected, (1 - stats.poisson.cdf(11, mean)) * len(counts))
        keep = expected >= 5
        chi2, p_value = stats.chisquare(
            observed[keep], expected[keep] * observed[keep].sum() / expected[keep].sum()
        )
        assert p_value > 0.001

    def test_sites_are_independent(self):
        p = params(n_sites=2, load_rate_probe=1.0, one_body_loss_rate=2.0)
        path = simulate_occupancy(p, 5000.0, seed=9)
        sample_t = np.linspace(0.5, 4999.5, 10_000)
        idx = np.searchsorted(path.event_times_s, sample_t, side="right") - 1
        occ = np.where(idx[:, None] >= 0, path.occupancy[idx], 0)
        r = np.corrcoef(occ[:, 0], occ[:, 1])[0, 1]
        assert abs(r) < 0.05

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            simulate_occupancy(params(), 0.0, seed=0)
        with pytest.raises(ValueError):
            simulate_occupancy(params(), 1.0, seed=0, phase="weird")
        with pytest.raises(ValueError):
            DynamicsParams(load_rate_probe=-1.0)
        with pytest.raises(ValueError):
            DynamicsParams(n_sites=0)


class TestBackendEquivalence:
    def test_kernels_bit_identical(self):
        impls = available_backends()
        if "cython" not in impls:
            pytest.skip("compiled kernel not built")
        for seed in range(6):
            outs = []
            for name in ("python", "cython"):
                rng = np.random.default_rng(seed)
                outs.append(
                    impls[name](
                        1.3, 2.1, 400.0, 4, 2, 30.0, np.zeros(4, dtype=np.int64), rng, CHUNK
                    )
                )
            for a, b in zip(*outs):
                assert a.dtype == b.dtype
                np.testing.assert_array_equal(a, b)


class TestSynthesizeTrace:
    def test_background_only_mean(self):
        # Poisson oracle: empty trap, 100 counts/s, 50 ms bins -> mean 5.0
        p = params(load_rate_probe=0.0, load_rate_mot=0.0)
        path = simulate_occupancy(p, 500.0, seed=0)
        trace = synthesize_trace(path, p, bin_width_ms=50.0, seed=1)
        assert trace.n_bins == 10_000
        se = np.sqrt(5.0 / trace.n_bins)
        assert abs(trace.counts.mean() - 5.0) < 3 * se

    def test_constant_occupancy_mean(self):
        p = params(load_rate_probe=0.0, one_body_loss_rate=0.0)
        path = simulate_occupancy(p, 500.0, seed=0, initial_occupancy=[1])
        assert path.n_events == 0
        trace = synthesize_trace(path, p, bin_width_ms=50.0, seed=2)
        expected = (100.0 + 1000.0) * 0.05
        se = np.sqrt(expected / trace.n_bins)
        assert abs(trace.counts.mean() - expected) < 3 * se

    def test_deterministic(self):
        p = params()
        path = simulate_occupancy(p, 50.0, seed=5)
        a = synthesize_trace(path, p, 50.0, seed=7)
        b = synthesize_trace(path, p, 50.0, seed=7)
        np.testing.assert_array_equal(a.counts, b.counts)

    def test_occupancy_integral_matches_riemann_sum(self):
        # brute-force oracle: left-endpoint Riemann sum on a fine grid
        p = params()
        path = simulate_occupancy(p, 20.0, seed=11)
        edges = np.linspace(0.0, 20.0, 401)
        got = path.integrate_total(edges)
        t_all, levels = path.total_occupancy_steps()
        fine = np.linspace(0.0, 20.0, 2_000_001)
        occ_fine = levels[np.searchsorted(t_all, fine, side="right") - 1]
        approx = np.add.reduceat(occ_fine[:-1], np.arange(0, 2_000_000, 5000)) * 1e-5
        np.testing.assert_allclose(got, approx, atol=2e-3)


class TestSimulateCycles:
    def test_first_probe_bin_zero(self):
        traces = simulate_cycles(params(), 5, seed=0)
        for trace in traces:
            probe_idx = np.nonzero(trace.probe_mask)[0]
            assert trace.counts[probe_idx[0]] == 0

    def test_cycle_structure(self):
        traces = simulate_cycles(params(), 3, seed=0)
        assert len(traces) == 3
        for i, trace in enumerate(traces):
            assert trace.n_bins == 120  # 6 s of 50 ms bins
            assert np.all(trace.cycle_index == i)
            assert list(trace.phases[:60]) == ["load"] * 60
            assert list(trace.phases[60:100]) == ["probe"] * 40
            assert list(trace.phases[100:]) == ["off"] * 20

    def test_zero_rates_give_pure_background(self):
        p = params(load_rate_probe=0.0, load_rate_mot=0.0)
        traces = simulate_cycles(p, 50, seed=1)
        trace = concat_traces(traces)
        probe = trace.counts[trace.analysis_mask()]
        assert abs(probe.mean() - 5.0) < 3 * np.sqrt(5.0 / len(probe))
        assert np.all(trace.counts[~trace.probe_mask] == 0)

    def test_stationary_occupancy_at_probe_start(self):
        # closed-form oracle: two-state chain loaded for 3 s from empty
        R, gamma = 1.0, 1.0 / 0.3
        p = params(load_rate_mot=R, load_rate_probe=R, one_body_loss_rate=gamma)
        _traces, paths = simulate_cycles(p, 500, seed=2, return_paths=True)
        occupied = np.mean([probe.initial_occupancy.sum() > 0 for _mot, probe in paths])
        c1 = R / (R + gamma) * (1 - np.exp(-(R + gamma) * 3.0))
        assert abs(occupied - c1) < 0.04

    def test_deterministic(self):
        a = concat_traces(simulate_cycles(params(), 4, seed=9))
        b = concat_traces(simulate_cycles(params(), 4, seed=9))
        np.testing.assert_array_equal(a.counts, b.counts)


class TestTraceRecord:
    def test_duration_and_times(self):
        trace = TraceRecord.from_counts([1, 2, 3, 4], bin_width_ms=25.0)
        assert trace.duration_ms == 100.0
        np.testing.assert_allclose(trace.t_ms, [0.0, 25.0, 50.0, 75.0])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            TraceRecord.from_counts([1, -2, 3])

    def test_bad_phase_rejected(self):
        with pytest.raises(ValueError):
            TraceRecord(bin_width_ms=50.0, counts=np.array([1]), phases=np.array(["x"]))

    def test_bare_trace_has_no_forced_zeros(self):
        trace = TraceRecord.from_counts([0, 0, 5, 5])
        assert not trace.forced_zero_mask().any()
        assert trace.analysis_mask().all()

    def test_rebin_conserves_counts(self):
        p = params()
        path = simulate_occupancy(p, 100.0, seed=13)
        trace = synthesize_trace(path, p, bin_width_ms=25.0, seed=14)
        merged = rebin_trace(trace, 2)
        assert merged.bin_width_ms == 50.0
        assert merged.counts.sum() == trace.counts.sum()
        np.testing.assert_array_equal(
            merged.counts, trace.counts.reshape(-1, 2).sum(axis=1)
        )

    def test_rebin_respects_phase_boundaries(self):
        trace = TraceRecord(
            bin_width_ms=50.0,
            counts=np.array([1, 2, 3, 4]),
            phases=np.array(["load", "probe", "probe", "probe"]),
        )
        with pytest.raises(ValueError):
            rebin_trace(trace, 2)

    def test_concat_requires_matching_bin_width(self):
        a = TraceRecord.from_counts([1, 2], 50.0)
        b = TraceRecord.from_counts([3], 25.0)
        with pytest.raises(ValueError):
            concat_traces([a, b])
