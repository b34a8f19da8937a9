//! Exact statistics of ideal Bose gases in harmonic traps.
//!
//! * [`trap`]: geometry, mode enumeration, `Z_1` and characteristic temperatures.
//! * [`canonical`]: fixed-N partition-function recursion, occupation
//!   probabilities and the one-body density-matrix spectrum.
//! * [`grand`]: fugacity-based atom number, closed forms and asymptotic scaling.
//! * [`coherence`]: oscillator mode functions, `g1(-x, x)`, FWHM widths and
//!   the quasicondensation temperature.
//!
//! All quantities are in oscillator units: lengths in `sqrt(hbar / m w0)`,
//! energies in `hbar w0`, temperatures in `hbar w0 / k_B`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod coherence;
pub mod error;
pub mod grand;
pub mod spectrum;
pub mod trap;

pub use canonical::{
    build_partition_table, leading_occupations, mean_occupation, occupancy_distribution, occupation_spectrum,
    sticking_ratio, temperature_for_fraction, OccupancyDistribution, OccupationSpectrum, OccupiedLevel, PartitionTable,
    ThermalState,
};
pub use coherence::{
    find_tph, find_tph_with_tolerance, fwhm, g1_profile, g1_profile_auto, mode_function, AxisGrid, CorrelationProfile,
    Ensemble, TphPoint,
};
pub use error::{Error, Result};
pub use grand::{
    asymptotic_scaling_exponent, atom_number, closed_form_sticking, grand_cutoff, occupation_ratio_gc, solve_fugacity,
    sticking_ratio_gc, temperature_for_fraction_gc, FractionSolution, Fugacity, GcMode, GrandCanonicalState,
    ScalingFit,
};
pub use spectrum::{DiscreteSpectrum, EnergyLevel, SingleParticleSpectrum};
pub use trap::{
    characteristic_temperature, energy_levels, enumerate_modes, mode_energy, single_particle_z, Axis, ModeIndex,
    SpectrumCutoff, TrapGeometry, ZETA_2, ZETA_3,
};
