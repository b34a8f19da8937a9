//! Fixed-N (canonical) statistics of an ideal Bose gas.
//!
//! The N-particle partition functions follow from
//!
//! ```text
//! Z_0 = 1,   Z_N(beta) = (1/N) sum_{n=1}^{N} Z_1(n beta) Z_{N-n}(beta)
//! ```
//!
//! evaluated in the log domain. From the table `ln Z_0 .. ln Z_N` the
//! probability of at least `n` atoms in a mode of energy `e` is
//! `exp(-n beta e) Z_{N-n} / Z_N`; the mean occupation is the sum of these
//! over `n >= 1`.

use crate::error::{invalid, Error, Result};
use crate::spectrum::{EnergyLevel, SingleParticleSpectrum};
use crate::trap::{characteristic_temperature_real, ModeIndex, SpectrumCutoff, TrapGeometry};

/// Atom number and temperature (oscillator units). `beta` is derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalState {
    n_atoms: usize,
    temperature: f64,
}

impl ThermalState {
    pub fn new(n_atoms: usize, temperature: f64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(invalid("n_atoms must be at least 1"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid(format!("temperature must be positive, got {temperature}")));
        }
        Ok(ThermalState { n_atoms, temperature })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }
}

/// `ln Z_k(beta)` for `k = 0..=N`, tied to the spectrum it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTable {
    ln_z: Vec<f64>,
    temperature: f64,
    fingerprint: u64,
}

/// `ln Z_0 ..= ln Z_N` from `ln Z_1(k beta)`, `k = 1..=N`. Entries of `-inf`
/// (an empty spectrum) propagate exactly.
fn recursion(ln_z1: &[f64]) -> Vec<f64> {
    let n = ln_z1.len();
    let mut ln_z = Vec::with_capacity(n + 1);
    ln_z.push(0.0);
    let mut terms = vec![0.0; n];
    for k in 1..=n {
        let mut max = f64::NEG_INFINITY;
        let mut arg = 0;
        for j in 1..=k {
            let t = ln_z1[j - 1] + ln_z[k - j];
            terms[j - 1] = t;
            if t > max {
                max = t;
                arg = j - 1;
            }
        }
        if max == f64::NEG_INFINITY {
            ln_z.push(max);
            continue;
        }
        // ln_1p of the non-maximal remainder keeps small corrections exact
        let rest: f64 = terms[..k]
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != arg)
            .map(|(_, t)| (t - max).exp())
            .sum();
        ln_z.push(max + rest.ln_1p() - (k as f64).ln());
    }
    ln_z
}

/// Builds `ln Z_0 .. ln Z_N` with the recursion, using log-sum-exp for each
/// entry. Cost is O(N^2).
pub fn build_partition_table<S: SingleParticleSpectrum + ?Sized>(
    spectrum: &S,
    state: &ThermalState,
) -> Result<PartitionTable> {
    let n = state.n_atoms();
    let beta = state.beta();
    let ln_z1: Vec<f64> = (1..=n).map(|k| spectrum.ln_partition(k as f64 * beta)).collect();
    if let Some((k, v)) = ln_z1.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "ln Z_1({} beta) = {v} at T = {}",
            k + 1,
            state.temperature()
        )));
    }

    let ln_z = recursion(&ln_z1);
    if let Some(k) = ln_z.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "ln Z_{k} is not finite at T = {}",
            state.temperature()
        )));
    }

    Ok(PartitionTable {
        ln_z,
        temperature: state.temperature(),
        fingerprint: spectrum.fingerprint(),
    })
}

/// Distribution of the atom number in one mode, `P(n | N)` for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyDistribution {
    pub probabilities: Vec<f64>,
}

impl OccupancyDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

impl PartitionTable {
    pub fn n_atoms(&self) -> usize {
        self.ln_z.len() - 1
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn ln_z(&self) -> &[f64] {
        &self.ln_z
    }

    /// ln P^>=(n | N) for a mode of energy `energy`; `-inf` when `n > N`.
    pub fn ln_at_least(&self, energy: f64, n: usize) -> f64 {
        let big_n = self.n_atoms();
        if n > big_n {
            return f64::NEG_INFINITY;
        }
        if n == 0 {
            return 0.0;
        }
        -(n as f64) * self.beta() * energy + self.ln_z[big_n - n] - self.ln_z[big_n]
    }

    /// Mean occupation of a single mode of energy `energy`, as
    /// `sum_{n>=1} P^>=(n | N)`. Terms decrease monotonically in `n`, so the
    /// sum stops once the remainder cannot reach 1e-17 of the total.
    pub fn mean_occupation_at(&self, energy: f64) -> f64 {
        let big_n = self.n_atoms();
        let beta_e = self.beta() * energy;
        let top = self.ln_z[big_n];
        let mut sum = 0.0;
        for n in 1..=big_n {
            let term = (-(n as f64) * beta_e + self.ln_z[big_n - n] - top).exp();
            sum += term;
            if term * (big_n - n) as f64 <= 1e-17 * sum {
                break;
            }
        }
        sum
    }

    /// Mean ground-state occupation N_0.
    pub fn ground_occupation(&self) -> f64 {
        self.mean_occupation_at(0.0)
    }

    fn check_matches<S: SingleParticleSpectrum + ?Sized>(&self, spectrum: &S, state: &ThermalState) -> Result<()> {
        if self.fingerprint != spectrum.fingerprint()
            || self.n_atoms() != state.n_atoms()
            || self.temperature.to_bits() != state.temperature().to_bits()
        {
            return Err(invalid(
                "partition table was built for a different spectrum or thermal state",
            ));
        }
        Ok(())
    }
}

/// `P_nu(n | N)` for `n = 0..=N`, as `e^{-n beta e} Z'_{N-n} / Z_N` where `Z'`
/// is the partition function with mode `nu` removed. Every term is positive,
/// so small probabilities keep full relative precision.
pub fn occupancy_distribution<S: SingleParticleSpectrum + ?Sized>(
    spectrum: &S,
    state: &ThermalState,
    mode: &ModeIndex,
    table: &PartitionTable,
) -> Result<OccupancyDistribution> {
    table.check_matches(spectrum, state)?;
    let energy = spectrum.energy_of(mode)?;
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(invalid(format!("mode energy must be non-negative, got {energy}")));
    }
    let n = table.n_atoms();
    let beta = table.beta();
    let ln_z1_without: Vec<f64> = (1..=n)
        .map(|k| spectrum.ln_partition_excluding(k as f64 * beta, energy))
        .collect();
    if let Some(v) = ln_z1_without.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(Error::Numerical(format!("ln Z_1 without mode {mode} is {v}")));
    }
    let without = recursion(&ln_z1_without);
    let top = table.ln_z[n];
    let probabilities: Vec<f64> = (0..=n)
        .map(|k| (-(k as f64) * beta * energy + without[n - k] - top).exp())
        .collect();
    let total: f64 = probabilities.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical(format!("occupancy distribution sums to {total}")));
    }
    Ok(OccupancyDistribution { probabilities })
}

pub fn mean_occupation<S: SingleParticleSpectrum + ?Sized>(
    spectrum: &S,
    state: &ThermalState,
    mode: &ModeIndex,
    table: &PartitionTable,
) -> Result<f64> {
    table.check_matches(spectrum, state)?;
    let energy = spectrum.energy_of(mode)?;
    if !(energy >= 0.0) {
        return Err(invalid(format!("mode energy must be non-negative, got {energy}")));
    }
    Ok(table.mean_occupation_at(energy))
}

/// A level of the one-body density-matrix spectrum. `occupation` is the
/// mean occupation of each single mode in the level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupiedLevel {
    pub energy: f64,
    pub degeneracy: u64,
    pub lowest_mode: ModeIndex,
    pub occupation: f64,
}

/// Mean mode occupations (density-matrix eigenvalues times N), grouped by
/// energy level and sorted by energy.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationSpectrum {
    levels: Vec<OccupiedLevel>,
    captured_fraction: f64,
    cutoff: SpectrumCutoff,
    table: PartitionTable,
}

impl OccupationSpectrum {
    /// Occupations for every level below the cutoff, with no check on how
    /// much of the atom number they capture.
    pub fn from_table<S: SingleParticleSpectrum + ?Sized>(
        spectrum: &S,
        table: PartitionTable,
        cutoff: &SpectrumCutoff,
    ) -> Result<Self> {
        if table.fingerprint() != spectrum.fingerprint() {
            return Err(invalid("partition table was built for a different spectrum"));
        }
        let levels: Vec<OccupiedLevel> = spectrum
            .levels(cutoff)?
            .into_iter()
            .map(
                |EnergyLevel {
                     energy,
                     degeneracy,
                     lowest_mode,
                 }| OccupiedLevel {
                    energy,
                    degeneracy,
                    lowest_mode,
                    occupation: table.mean_occupation_at(energy),
                },
            )
            .collect();
        // sum from the top so the small tail terms are not lost
        let captured: f64 = levels.iter().rev().map(|l| l.degeneracy as f64 * l.occupation).sum();
        let captured_fraction = captured / table.n_atoms() as f64;
        Ok(OccupationSpectrum {
            levels,
            captured_fraction,
            cutoff: *cutoff,
            table,
        })
    }

    pub fn levels(&self) -> &[OccupiedLevel] {
        &self.levels
    }

    pub fn n_atoms(&self) -> usize {
        self.table.n_atoms()
    }

    pub fn temperature(&self) -> f64 {
        self.table.temperature()
    }

    pub fn captured_fraction(&self) -> f64 {
        self.captured_fraction
    }

    pub fn cutoff(&self) -> &SpectrumCutoff {
        &self.cutoff
    }

    pub fn table(&self) -> &PartitionTable {
        &self.table
    }

    pub fn ground_occupation(&self) -> f64 {
        self.levels.first().map_or(0.0, |l| l.occupation)
    }

    /// Occupation of any single mode of energy `energy`, evaluated directly.
    pub fn occupation_at_energy(&self, energy: f64) -> f64 {
        self.table.mean_occupation_at(energy)
    }

    /// The mode at position `rank` in energy order (ties lexicographic),
    /// counting degenerate modes separately. Rank 0 is the ground state.
    /// Degenerate modes share an occupation, so only the level matters.
    pub fn mode_at_rank(&self, rank: usize) -> Option<&OccupiedLevel> {
        let mut remaining = rank as u64;
        for level in &self.levels {
            if remaining < level.degeneracy {
                return Some(level);
            }
            remaining -= level.degeneracy;
        }
        None
    }

    /// One occupation per mode, degenerate modes repeated.
    pub fn mode_occupations(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.occupation, l.degeneracy as usize))
    }
}

/// Builds the partition table and the occupation spectrum up to `cutoff`.
/// Fails when the enumerated modes hold less than `1 - tail_tolerance` of
/// the atoms.
pub fn occupation_spectrum<S: SingleParticleSpectrum + ?Sized>(
    spectrum: &S,
    state: &ThermalState,
    cutoff: &SpectrumCutoff,
) -> Result<OccupationSpectrum> {
    let table = build_partition_table(spectrum, state)?;
    let spec = OccupationSpectrum::from_table(spectrum, table, cutoff)?;
    let required = 1.0 - cutoff.tail_tolerance - roundoff_allowance(&spec.table);
    if !(spec.captured_fraction >= required) {
        return Err(Error::CutoffTooSmall {
            achieved: spec.captured_fraction,
            required,
        });
    }
    Ok(spec)
}

/// Relative round-off in occupations inherited from the absolute error of
/// `ln Z_N`, which grows with its magnitude.
pub(crate) fn roundoff_allowance(table: &PartitionTable) -> f64 {
    let top = table.ln_z.last().copied().unwrap_or(0.0).abs();
    64.0 * f64::EPSILON * (1.0 + top)
}

/// Occupations of the `count` lowest modes (ties lexicographic), without
/// building the full spectrum.
pub fn leading_occupations<S: SingleParticleSpectrum + ?Sized>(
    spectrum: &S,
    table: &PartitionTable,
    count: usize,
) -> Result<Vec<(ModeIndex, f64)>> {
    if table.fingerprint() != spectrum.fingerprint() {
        return Err(invalid("partition table was built for a different spectrum"));
    }
    Ok(spectrum
        .lowest_modes(count)?
        .into_iter()
        .map(|(m, e)| (m, table.mean_occupation_at(e)))
        .collect())
}

/// `N_k / N_0`, where `N_k` is the occupation of the mode at rank `k` in
/// energy order (degenerate modes counted separately).
pub fn sticking_ratio(spec: &OccupationSpectrum, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("sticking ratio needs k >= 1"));
    }
    let level = spec
        .mode_at_rank(k)
        .ok_or_else(|| invalid(format!("spectrum holds fewer than {} modes", k + 1)))?;
    let ground = spec.ground_occupation();
    if !(ground > 0.0) {
        return Err(Error::Numerical("ground-state occupation vanishes".into()));
    }
    Ok(level.occupation / ground)
}

/// Temperature at which `N_0 / N = fraction`, by bisection in `ln T`.
/// `N_0(T)` decreases monotonically, and the default bracket is
/// `[1e-3 w_min, 10 T_c]`.
pub fn temperature_for_fraction(g: &TrapGeometry, n_atoms: usize, fraction: f64) -> Result<ThermalState> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(format!(
            "condensate fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if n_atoms == 0 {
        return Err(invalid("n_atoms must be at least 1"));
    }
    let t_c = characteristic_temperature_real(g, (n_atoms as f64).max(2.0));
    let bracket = (1e-3 * g.min_frequency(), 10.0 * t_c);
    temperature_for_fraction_in(g, n_atoms, fraction, bracket)
}

pub fn temperature_for_fraction_in<S: SingleParticleSpectrum + ?Sized>(
    spectrum: &S,
    n_atoms: usize,
    fraction: f64,
    (t_lo, t_hi): (f64, f64),
) -> Result<ThermalState> {
    const REL_TOL: f64 = 1e-10;
    const MAX_ITER: usize = 300;

    let excess = |t: f64| -> Result<f64> {
        let state = ThermalState::new(n_atoms, t)?;
        let table = build_partition_table(spectrum, &state)?;
        Ok(table.ground_occupation() / n_atoms as f64 - fraction)
    };

    let f_lo = excess(t_lo)?;
    let f_hi = excess(t_hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Range(format!(
            "N0/N - {fraction} is {f_lo:.6e} at T = {t_lo:.6e} and {f_hi:.6e} at T = {t_hi:.6e}"
        )));
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    for _ in 0..MAX_ITER {
        let mid = (lo * hi).sqrt();
        let f = excess(mid)?;
        if f.abs() <= REL_TOL * fraction || hi / lo - 1.0 < 4.0 * f64::EPSILON {
            return ThermalState::new(n_atoms, mid);
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "temperature bisection did not converge in {MAX_ITER} steps"
    )))
}
