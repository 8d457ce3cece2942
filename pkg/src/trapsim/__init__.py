"""Dipole-trap loading simulator and trace-analysis toolkit.

Physics side: Gaussian-beam optics of a tightly focused trap beam, the
standing-wave potential created by a weak counter-propagating ancillary
beam (with the polarization overlap setting the interference contrast), and
exact stochastic simulation of atom loading and loss with photon-count
telegraph traces. Analysis side: count histograms, Poisson/Gaussian mixture
fits, occupancy labeling, dwell extraction, lifetime estimation, and the
error-function loading-curve model.
"""

__version__ = "0.1.0"

from .beams import BeamSpec, beam_field, beam_waist_at, intensity_density
from .polarization import (
    JonesVector,
    WavePlateSetting,
    ancillary_overlap_vs_angle,
    left_circular,
    make_elliptical,
    overlap_factor,
    qwp_transform,
)
from .potential import (
    RHO0_MW_PER_UM2,
    STARK_MHZ_PER_MK,
    PotentialProfile,
    TrapConfig,
    TrapSite,
    axial_force,
    axial_intensity,
    enhancement_ratio_approx,
    enhancement_ratio_exact,
    find_antinodes,
    potential_profile,
    stark_shift,
    trap_depth,
    zeta_from_stark,
)
from .dynamics import (
    DynamicsParams,
    OccupancyPath,
    TraceRecord,
    concat_traces,
    rebin_trace,
    simulate_cycles,
    simulate_occupancy,
    synthesize_trace,
)
from .analysis import (
    CountHistogram,
    DwellRecord,
    MixtureFitResult,
    analyze_trace,
    build_histogram,
    estimate_lifetime,
    extract_dwells,
    fit_gaussian_mixture,
    fit_poisson_mixture,
    label_occupancy,
    occupancy_probabilities,
)
from .loading import (
    LoadingCurvePoint,
    LoadingFitResult,
    LoadingModelParams,
    fit_loading_curve,
    loading_probability,
)
from .sweep import SweepSpec, SweepResult, run_sweep
