//! Harmonic trap geometry and its single-particle spectrum.
//!
//! Energies are measured from the ground state (zero-point energy excluded),
//! in units of the reference frequency. A mode with quanta `(l_x, l_y, l_z)`
//! has energy `w_x l_x + w_y l_y + w_z l_z`.
//!
//! Axes with bitwise-equal frequencies are grouped, and every energy is
//! evaluated as `sum_g w_g * (quanta summed over group g)`. Degenerate modes
//! therefore get bitwise-identical energies, which keeps level grouping exact.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{invalid, Error, Result};
use crate::spectrum::{EnergyLevel, SingleParticleSpectrum};

/// Riemann zeta(2) = pi^2 / 6.
pub const ZETA_2: f64 = 1.644_934_066_848_226_4;
/// Riemann zeta(3) (Apery's constant).
pub const ZETA_3: f64 = 1.202_056_903_159_594_3;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MODE_LIMIT: usize = 10_000_000;

/// Relative spacing below which two level energies are treated as one level.
const LEVEL_MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Axis> {
        match index {
            0 => Some(Axis::X),
            1 => Some(Axis::Y),
            2 => Some(Axis::Z),
            _ => None,
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Oscillator quantum numbers of a single-particle mode, one per present axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    quanta: [u32; 3],
    len: u8,
}

impl ModeIndex {
    pub fn new(quanta: &[u32]) -> Result<Self> {
        if quanta.is_empty() || quanta.len() > 3 {
            return Err(invalid(format!("mode index needs 1 to 3 quanta, got {}", quanta.len())));
        }
        let mut q = [0; 3];
        q[..quanta.len()].copy_from_slice(quanta);
        Ok(ModeIndex {
            quanta: q,
            len: quanta.len() as u8,
        })
    }

    pub fn ground(dimension: usize) -> Self {
        ModeIndex {
            quanta: [0; 3],
            len: dimension.clamp(1, 3) as u8,
        }
    }

    pub fn quanta(&self) -> &[u32] {
        &self.quanta[..self.len as usize]
    }

    pub fn dimension(&self) -> usize {
        self.len as usize
    }

    pub fn is_ground(&self) -> bool {
        self.quanta.iter().all(|&q| q == 0)
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, q) in self.quanta().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ")")
    }
}

/// Truncation of infinite mode sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumCutoff {
    pub max_energy: f64,
    pub tail_tolerance: f64,
    /// Upper bound on the number of enumerated entries.
    pub max_modes: usize,
}

impl SpectrumCutoff {
    pub fn new(max_energy: f64, tail_tolerance: f64) -> Result<Self> {
        if !(max_energy > 0.0 && max_energy.is_finite()) {
            return Err(invalid(format!("max_energy must be positive, got {max_energy}")));
        }
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(invalid(format!(
                "tail_tolerance must lie in (0, 1), got {tail_tolerance}"
            )));
        }
        Ok(SpectrumCutoff {
            max_energy,
            tail_tolerance,
            max_modes: DEFAULT_MODE_LIMIT,
        })
    }

    pub fn with_mode_limit(mut self, max_modes: usize) -> Self {
        self.max_modes = max_modes;
        self
    }
}

/// Axes sharing one bitwise-equal frequency.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct FrequencyGroup {
    pub omega: f64,
    pub axes: Vec<usize>,
}

/// Trap frequencies in units of the reference frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapGeometry {
    // absent axes hold 0.0 and are never read
    omega: [f64; 3],
    dim: usize,
}

impl TrapGeometry {
    /// Frequencies for the x, y, z axes in order; the slice length is the dimension.
    pub fn new(frequencies: &[f64]) -> Result<Self> {
        let dim = frequencies.len();
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("trap needs 1 to 3 frequencies, got {dim}")));
        }
        if let Some(bad) = frequencies.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(invalid(format!("trap frequencies must be positive, got {bad}")));
        }
        let mut omega = [0.0; 3];
        omega[..dim].copy_from_slice(frequencies);
        Ok(TrapGeometry { omega, dim })
    }

    pub fn isotropic(dimension: usize) -> Result<Self> {
        TrapGeometry::new(&vec![1.0; dimension])
    }

    /// Three-dimensional trap with `w_x = w_y = omega_perp`.
    pub fn axially_symmetric(omega_perp: f64, omega_z: f64) -> Result<Self> {
        TrapGeometry::new(&[omega_perp, omega_perp, omega_z])
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omega[..self.dim]
    }

    pub fn frequency(&self, axis: Axis) -> Option<f64> {
        let i = axis.index();
        (i < self.dim).then(|| self.omega[i])
    }

    pub fn min_frequency(&self) -> f64 {
        self.frequencies().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies().iter().copied().fold(0.0, f64::max)
    }

    pub fn geometric_mean_frequency(&self) -> f64 {
        let ln_sum: f64 = self.frequencies().iter().map(|w| w.ln()).sum();
        (ln_sum / self.dim as f64).exp()
    }

    /// The axis with the lowest frequency (first one on ties).
    pub fn softest_axis(&self) -> Axis {
        let mut best = 0;
        for i in 1..self.dim {
            if self.omega[i] < self.omega[best] {
                best = i;
            }
        }
        Axis::from_index(best).expect("dimension is at most 3")
    }

    /// Same shape with every frequency multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scaled: Vec<f64> = self.frequencies().iter().map(|w| w * factor).collect();
        TrapGeometry::new(&scaled)
    }

    pub(crate) fn groups(&self) -> Vec<FrequencyGroup> {
        let mut groups: Vec<FrequencyGroup> = Vec::with_capacity(self.dim);
        for (axis, &w) in self.frequencies().iter().enumerate() {
            match groups.iter_mut().find(|g| g.omega.to_bits() == w.to_bits()) {
                Some(g) => g.axes.push(axis),
                None => groups.push(FrequencyGroup {
                    omega: w,
                    axes: vec![axis],
                }),
            }
        }
        groups
    }

    /// Energy of a mode, evaluated group by group.
    pub(crate) fn grouped_energy(&self, quanta: &[u32]) -> f64 {
        let mut energy = 0.0;
        for group in self.groups() {
            let total: u64 = group.axes.iter().map(|&a| quanta[a] as u64).sum();
            energy += group.omega * total as f64;
        }
        energy
    }
}

/// Energy of `mode` above the ground state.
pub fn mode_energy(g: &TrapGeometry, mode: &ModeIndex) -> Result<f64> {
    if mode.dimension() != g.dimension() {
        return Err(invalid(format!(
            "mode {mode} has {} quanta but the trap is {}D",
            mode.dimension(),
            g.dimension()
        )));
    }
    Ok(g.grouped_energy(mode.quanta()))
}

/// Every mode with energy at most `cutoff.max_energy`, sorted by energy and
/// then lexicographically by quanta.
pub fn enumerate_modes(g: &TrapGeometry, cutoff: &SpectrumCutoff) -> Result<Vec<(ModeIndex, f64)>> {
    if !(cutoff.max_energy > 0.0) {
        return Err(invalid("cutoff max_energy must be positive"));
    }
    let dim = g.dimension();
    let w = g.frequencies();
    // loose per-axis bound; exact filtering happens on the grouped energy
    let slack = cutoff.max_energy * (1.0 + 1e-9);
    let mut modes = Vec::new();
    let mut quanta = [0u32; 3];

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        axis: usize,
        partial: f64,
        quanta: &mut [u32; 3],
        g: &TrapGeometry,
        w: &[f64],
        dim: usize,
        slack: f64,
        cutoff: &SpectrumCutoff,
        modes: &mut Vec<(ModeIndex, f64)>,
    ) -> Result<()> {
        if axis == dim {
            let energy = g.grouped_energy(&quanta[..dim]);
            if energy <= cutoff.max_energy {
                if modes.len() >= cutoff.max_modes {
                    return Err(Error::TooManyModes {
                        limit: cutoff.max_modes,
                        max_energy: cutoff.max_energy,
                    });
                }
                modes.push((ModeIndex::new(&quanta[..dim])?, energy));
            }
            return Ok(());
        }
        let mut q = 0u32;
        loop {
            let e = partial + w[axis] * q as f64;
            if e > slack {
                break;
            }
            quanta[axis] = q;
            recurse(axis + 1, e, quanta, g, w, dim, slack, cutoff, modes)?;
            q += 1;
        }
        quanta[axis] = 0;
        Ok(())
    }

    recurse(0, 0.0, &mut quanta, g, w, dim, slack, cutoff, &mut modes)?;
    modes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(modes)
}

fn group_degeneracy(sum: u64, axes: usize) -> u64 {
    match axes {
        1 => 1,
        2 => sum + 1,
        _ => (sum + 1) * (sum + 2) / 2,
    }
}

/// Distinct energy levels up to the cutoff, with degeneracies and the
/// lexicographically lowest mode of each level. The mode limit applies to
/// the number of (group-sum) combinations visited, not to the total mode
/// count, so large isotropic spectra stay cheap.
pub fn energy_levels(g: &TrapGeometry, cutoff: &SpectrumCutoff) -> Result<Vec<EnergyLevel>> {
    if !(cutoff.max_energy > 0.0) {
        return Err(invalid("cutoff max_energy must be positive"));
    }
    let groups = g.groups();
    let dim = g.dimension();
    let mut raw: Vec<EnergyLevel> = Vec::new();
    let mut sums = vec![0u64; groups.len()];

    fn recurse(
        gi: usize,
        partial: f64,
        sums: &mut Vec<u64>,
        groups: &[FrequencyGroup],
        dim: usize,
        cutoff: &SpectrumCutoff,
        raw: &mut Vec<EnergyLevel>,
    ) -> Result<()> {
        if gi == groups.len() {
            if raw.len() >= cutoff.max_modes {
                return Err(Error::TooManyModes {
                    limit: cutoff.max_modes,
                    max_energy: cutoff.max_energy,
                });
            }
            let mut quanta = [0u32; 3];
            let mut degeneracy = 1u64;
            for (group, &s) in groups.iter().zip(sums.iter()) {
                degeneracy *= group_degeneracy(s, group.axes.len());
                // lexicographically lowest: everything on the group's last axis
                quanta[*group.axes.last().expect("group is non-empty")] = s as u32;
            }
            raw.push(EnergyLevel {
                energy: partial,
                degeneracy,
                lowest_mode: ModeIndex::new(&quanta[..dim])?,
            });
            return Ok(());
        }
        let omega = groups[gi].omega;
        let mut s = 0u64;
        loop {
            let e = partial + omega * s as f64;
            if e > cutoff.max_energy {
                break;
            }
            sums[gi] = s;
            recurse(gi + 1, e, sums, groups, dim, cutoff, raw)?;
            s += 1;
        }
        sums[gi] = 0;
        Ok(())
    }

    recurse(0, 0.0, &mut sums, &groups, dim, cutoff, &mut raw)?;
    Ok(merge_levels(raw))
}

/// Sorts levels by energy and merges entries whose energies agree to
/// `LEVEL_MERGE_TOLERANCE` relative.
pub(crate) fn merge_levels(mut raw: Vec<EnergyLevel>) -> Vec<EnergyLevel> {
    raw.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.lowest_mode.cmp(&b.lowest_mode)));
    let mut merged: Vec<EnergyLevel> = Vec::with_capacity(raw.len());
    for level in raw {
        match merged.last_mut() {
            Some(last)
                if (level.energy - last.energy).abs()
                    <= LEVEL_MERGE_TOLERANCE * level.energy.abs().max(last.energy.abs()) =>
            {
                last.degeneracy += level.degeneracy;
                if level.lowest_mode < last.lowest_mode {
                    last.lowest_mode = level.lowest_mode;
                }
            }
            _ => merged.push(level),
        }
    }
    merged
}

/// ln Z_1(beta) from the per-axis geometric series,
/// `ln Z_1 = -sum_i ln(1 - exp(-beta w_i))`.
pub fn single_particle_z(g: &TrapGeometry, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(ln_z1_unchecked(g, beta))
}

#[inline]
pub(crate) fn ln_z1_unchecked(g: &TrapGeometry, beta: f64) -> f64 {
    g.frequencies()
        .iter()
        .map(|w| {
            let x = beta * w;
            // -ln(1 - e^-x), keeping relative precision at both ends
            if x > std::f64::consts::LN_2 {
                -(-(-x).exp()).ln_1p()
            } else {
                -(-(-x).exp_m1()).ln()
            }
        })
        .sum()
}

/// Characteristic degeneracy temperature:
/// 1D `w N / ln(2N)`, 2D `w (N / zeta(2))^(1/2)`, 3D `w (N / zeta(3))^(1/3)`.
///
/// Anisotropic traps use the geometric-mean frequency for `w`; this is an
/// extension of the isotropic definition.
pub fn characteristic_temperature(g: &TrapGeometry, n_atoms: u64) -> Result<f64> {
    if n_atoms < 2 {
        return Err(invalid(format!(
            "characteristic temperature needs N >= 2, got {n_atoms}"
        )));
    }
    Ok(characteristic_temperature_real(g, n_atoms as f64))
}

pub(crate) fn characteristic_temperature_real(g: &TrapGeometry, n: f64) -> f64 {
    let w = g.geometric_mean_frequency();
    match g.dimension() {
        1 => w * n / (2.0 * n).ln(),
        2 => w * (n / ZETA_2).sqrt(),
        _ => w * (n / ZETA_3).cbrt(),
    }
}

impl SingleParticleSpectrum for TrapGeometry {
    fn ln_partition(&self, beta: f64) -> f64 {
        ln_z1_unchecked(self, beta)
    }

    fn energy_of(&self, mode: &ModeIndex) -> Result<f64> {
        mode_energy(self, mode)
    }

    fn levels(&self, cutoff: &SpectrumCutoff) -> Result<Vec<EnergyLevel>> {
        energy_levels(self, cutoff)
    }

    fn lowest_modes(&self, count: usize) -> Result<Vec<(ModeIndex, f64)>> {
        // the first `count` modes all lie at or below (count - 1) * w_min
        let max_energy = (count.max(2) - 1) as f64 * self.min_frequency();
        let cutoff = SpectrumCutoff::new(max_energy, DEFAULT_TAIL_TOLERANCE)?;
        let mut modes = enumerate_modes(self, &cutoff)?;
        modes.truncate(count);
        Ok(modes)
    }

    fn default_cutoff(&self, temperature: f64, n_atoms: f64, tail_tolerance: f64) -> Result<SpectrumCutoff> {
        let log_ratio = (n_atoms.max(1.0) / tail_tolerance).ln();
        let dim = self.dimension() as f64;
        let max_energy = temperature * (log_ratio + dim * log_ratio.ln_1p()) + self.min_frequency();
        SpectrumCutoff::new(max_energy, tail_tolerance)
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        "trap".hash(&mut h);
        for w in self.frequencies() {
            w.to_bits().hash(&mut h);
        }
        h.finish()
    }

    fn dimension(&self) -> usize {
        self.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cutoff(e: f64) -> SpectrumCutoff {
        SpectrumCutoff::new(e, DEFAULT_TAIL_TOLERANCE).unwrap()
    }

    #[test]
    fn mode_energy_examples() {
        let g1 = TrapGeometry::isotropic(1).unwrap();
        assert_eq!(mode_energy(&g1, &ModeIndex::ground(1)).unwrap(), 0.0);
        let g3 = TrapGeometry::isotropic(3).unwrap();
        assert_eq!(mode_energy(&g3, &ModeIndex::new(&[1, 1, 1]).unwrap()).unwrap(), 3.0);
        let cigar = TrapGeometry::axially_symmetric(1.0, 0.1).unwrap();
        let e = mode_energy(&cigar, &ModeIndex::new(&[0, 0, 3]).unwrap()).unwrap();
        assert_relative_eq!(e, 0.3, max_relative = 1e-15);
    }

    #[test]
    fn mode_energy_rejects_dimension_mismatch() {
        let g = TrapGeometry::isotropic(2).unwrap();
        let err = mode_energy(&g, &ModeIndex::new(&[1, 0, 0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn geometry_validation() {
        assert!(TrapGeometry::new(&[]).is_err());
        assert!(TrapGeometry::new(&[1.0, -1.0]).is_err());
        assert!(TrapGeometry::new(&[1.0, 0.0]).is_err());
        assert!(TrapGeometry::new(&[1.0, f64::NAN]).is_err());
        assert!(TrapGeometry::isotropic(4).is_err());
        let g = TrapGeometry::isotropic(3).unwrap();
        assert!(g.frequencies().iter().all(|&w| w == 1.0));
        assert_eq!(g.dimension(), 3);
        assert_eq!(g.frequency(Axis::Z), Some(1.0));
        assert_eq!(TrapGeometry::isotropic(1).unwrap().frequency(Axis::Y), None);
    }

    #[test]
    fn enumeration_counts() {
        let counts = [(3, 2.0, 10), (1, 5.0, 6), (2, 3.0, 10)];
        for (dim, e, n) in counts {
            let g = TrapGeometry::isotropic(dim).unwrap();
            assert_eq!(enumerate_modes(&g, &cutoff(e)).unwrap().len(), n, "dim {dim}");
        }
    }

    #[test]
    fn enumeration_order_is_energy_then_lexicographic() {
        let g = TrapGeometry::isotropic(3).unwrap();
        let modes = enumerate_modes(&g, &cutoff(1.0)).unwrap();
        let quanta: Vec<Vec<u32>> = modes.iter().map(|(m, _)| m.quanta().to_vec()).collect();
        assert_eq!(quanta, vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
    }

    #[test]
    fn enumeration_respects_mode_limit() {
        let g = TrapGeometry::isotropic(3).unwrap();
        let c = cutoff(50.0).with_mode_limit(1000);
        assert!(matches!(enumerate_modes(&g, &c), Err(Error::TooManyModes { .. })));
    }

    #[test]
    fn levels_match_enumeration() {
        let g = TrapGeometry::axially_symmetric(1.0, 0.37).unwrap();
        let c = cutoff(9.0);
        let modes = enumerate_modes(&g, &c).unwrap();
        let levels = energy_levels(&g, &c).unwrap();
        let total: u64 = levels.iter().map(|l| l.degeneracy).sum();
        assert_eq!(total as usize, modes.len());
        for level in &levels {
            let first = modes
                .iter()
                .find(|(_, e)| (e - level.energy).abs() <= 1e-12 * level.energy.max(1.0))
                .unwrap();
            assert_eq!(first.0, level.lowest_mode);
        }
    }

    #[test]
    fn single_particle_z_examples() {
        let ln2 = std::f64::consts::LN_2;
        let g1 = TrapGeometry::isotropic(1).unwrap();
        assert_relative_eq!(single_particle_z(&g1, ln2).unwrap().exp(), 2.0, max_relative = 1e-14);
        let g3 = TrapGeometry::isotropic(3).unwrap();
        assert_relative_eq!(single_particle_z(&g3, ln2).unwrap().exp(), 8.0, max_relative = 1e-14);
        assert!(single_particle_z(&g1, 60.0).unwrap().abs() < 1e-25);
        assert!(single_particle_z(&g1, 0.0).is_err());
        assert!(single_particle_z(&g1, -1.0).is_err());
    }

    #[test]
    fn characteristic_temperature_examples() {
        let g1 = TrapGeometry::isotropic(1).unwrap();
        // high-precision reference values
        assert_relative_eq!(
            characteristic_temperature(&g1, 1000).unwrap(),
            131.563_324_923_951_88,
            max_relative = 1e-13
        );
        let g3 = TrapGeometry::isotropic(3).unwrap();
        assert_relative_eq!(
            characteristic_temperature(&g3, 1000).unwrap(),
            9.404_989_702_570_406,
            max_relative = 1e-13
        );
        let g2 = TrapGeometry::isotropic(2).unwrap();
        assert_relative_eq!(characteristic_temperature_real(&g2, ZETA_2), 1.0, max_relative = 1e-15);
        assert!(characteristic_temperature(&g1, 1).is_err());
    }

    #[test]
    fn isotropic_level_degeneracy_is_binomial() {
        fn binom(n: u64, k: u64) -> u64 {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        for dim in 1..=3usize {
            let g = TrapGeometry::isotropic(dim).unwrap();
            let levels = energy_levels(&g, &cutoff(12.0)).unwrap();
            assert_eq!(levels.len(), 13);
            let modes = enumerate_modes(&g, &cutoff(12.0)).unwrap();
            for (n, level) in levels.iter().enumerate() {
                let expected = binom(n as u64 + dim as u64 - 1, dim as u64 - 1);
                assert_eq!(level.degeneracy, expected);
                let counted = modes.iter().filter(|(_, e)| *e == n as f64).count() as u64;
                assert_eq!(counted, expected);
            }
        }
    }

    /// Chernoff bound on the Boltzmann weight above `e`: with t = 0.9 beta,
    /// tail / Z_1 <= exp(-t e) * prod (1 - q)/(1 - q^0.1) <= exp(-t e) 10^D.
    fn brute_force_ln_z1(g: &TrapGeometry, beta: f64, tol: f64) -> f64 {
        let d = g.dimension() as f64;
        let e = (1.0 / tol).ln() + d * 10f64.ln();
        let max_energy = e / (0.9 * beta);
        let levels = energy_levels(g, &cutoff(max_energy)).unwrap();
        let z: f64 = levels
            .iter()
            .rev()
            .map(|l| l.degeneracy as f64 * (-beta * l.energy).exp())
            .sum();
        z.ln()
    }

    fn geometry_strategy(dim: usize) -> impl Strategy<Value = TrapGeometry> {
        proptest::collection::vec(0.5f64..2.0, dim).prop_map(|w| TrapGeometry::new(&w).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn closed_form_z1_matches_brute_force_1d(g in geometry_strategy(1), beta in 0.01f64..10.0) {
            let exact = single_particle_z(&g, beta).unwrap();
            let brute = brute_force_ln_z1(&g, beta, 1e-12);
            prop_assert!((exact - brute).abs() <= 1e-11 * exact.abs().max(1.0));
        }

        #[test]
        fn closed_form_z1_matches_brute_force_2d(g in geometry_strategy(2), beta in 0.05f64..10.0) {
            let exact = single_particle_z(&g, beta).unwrap();
            let brute = brute_force_ln_z1(&g, beta, 1e-12);
            prop_assert!((exact - brute).abs() <= 1e-11 * exact.abs().max(1.0));
        }

        #[test]
        fn closed_form_z1_matches_brute_force_3d(g in geometry_strategy(3), beta in 0.3f64..10.0) {
            let exact = single_particle_z(&g, beta).unwrap();
            let brute = brute_force_ln_z1(&g, beta, 1e-12);
            prop_assert!((exact - brute).abs() <= 1e-11 * exact.abs().max(1.0));
        }

        #[test]
        fn z1_factorizes_over_axes(w in proptest::collection::vec(0.1f64..5.0, 1..=3), beta in 0.01f64..10.0) {
            let g = TrapGeometry::new(&w).unwrap();
            let per_axis: f64 = w
                .iter()
                .map(|&wi| single_particle_z(&TrapGeometry::new(&[wi]).unwrap(), beta).unwrap())
                .sum();
            let joint = single_particle_z(&g, beta).unwrap();
            prop_assert!((joint - per_axis).abs() <= 1e-14 * joint.abs().max(1.0));
        }

        #[test]
        fn z1_monotone(w in proptest::collection::vec(0.1f64..5.0, 1..=3), beta in 0.01f64..10.0, bump in 1.01f64..2.0) {
            let g = TrapGeometry::new(&w).unwrap();
            let base = single_particle_z(&g, beta).unwrap();
            prop_assert!(single_particle_z(&g, beta * bump).unwrap() < base);
            let mut softer = w.clone();
            softer[0] /= bump;
            let gs = TrapGeometry::new(&softer).unwrap();
            prop_assert!(single_particle_z(&gs, beta).unwrap() > base);
        }

        #[test]
        fn enumeration_is_complete_and_bounded(w in proptest::collection::vec(0.3f64..3.0, 1..=3), e in 0.5f64..8.0) {
            let g = TrapGeometry::new(&w).unwrap();
            let modes = enumerate_modes(&g, &cutoff(e)).unwrap();
            prop_assert!(modes.iter().all(|(_, en)| *en <= e));
            // every mode with quanta inside the per-axis box and energy <= e is present
            let mut expected = 0usize;
            let bound: Vec<u32> = w.iter().map(|wi| (e / wi).floor() as u32).collect();
            let mut q = vec![0u32; w.len()];
            loop {
                if g.grouped_energy(&q) <= e { expected += 1; }
                let mut i = 0;
                while i < q.len() {
                    q[i] += 1;
                    if q[i] <= bound[i] { break; }
                    q[i] = 0;
                    i += 1;
                }
                if i == q.len() { break; }
            }
            prop_assert_eq!(modes.len(), expected);
            for pair in modes.windows(2) {
                prop_assert!(pair[0].1 < pair[1].1 || (pair[0].1 == pair[1].1 && pair[0].0 < pair[1].0));
            }
        }
    }
}
