//! Abstraction over single-particle spectra.
//!
//! The canonical recursion only needs `ln Z_1(beta)` and, for occupation
//! spectra, the list of energy levels. [`TrapGeometry`](crate::TrapGeometry)
//! is the physical implementation; [`DiscreteSpectrum`] is an explicit finite
//! level list used to check the recursion against exhaustive enumeration.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{invalid, Result};
use crate::trap::{merge_levels, ModeIndex, SpectrumCutoff};

/// One distinct single-particle energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyLevel {
    pub energy: f64,
    pub degeneracy: u64,
    /// Lexicographically lowest mode with this energy.
    pub lowest_mode: ModeIndex,
}

pub trait SingleParticleSpectrum {
    /// ln Z_1(beta); `beta` is assumed positive.
    fn ln_partition(&self, beta: f64) -> f64;

    /// `ln(Z_1(beta) - e^{-beta energy})`: the partition function with one
    /// mode of that energy removed; `-inf` when nothing remains.
    fn ln_partition_excluding(&self, beta: f64, energy: f64) -> f64 {
        remove_term(self.ln_partition(beta), beta * energy)
    }

    fn energy_of(&self, mode: &ModeIndex) -> Result<f64>;

    /// Distinct levels with energy at most `cutoff.max_energy`, ascending.
    fn levels(&self, cutoff: &SpectrumCutoff) -> Result<Vec<EnergyLevel>>;

    /// The `count` lowest modes in energy order (ties lexicographic).
    fn lowest_modes(&self, count: usize) -> Result<Vec<(ModeIndex, f64)>>;

    /// A cutoff whose omitted occupation is below `tail_tolerance` of `n_atoms`.
    fn default_cutoff(&self, temperature: f64, n_atoms: f64, tail_tolerance: f64) -> Result<SpectrumCutoff>;

    fn fingerprint(&self) -> u64;

    fn dimension(&self) -> usize;
}

/// `ln(e^{ln_z} - e^{-x})` as `ln_z + ln(1 - e^{-(ln_z + x)})`.
pub(crate) fn remove_term(ln_z: f64, x: f64) -> f64 {
    let y = ln_z + x;
    if !(y > 0.0) {
        f64::NEG_INFINITY
    } else if y > std::f64::consts::LN_2 {
        ln_z + (-(-y).exp()).ln_1p()
    } else {
        ln_z + (-(-y).exp_m1()).ln()
    }
}

/// `ln sum_i e^{-beta e_i}`, with `ln_1p` of the terms below the largest;
/// `-inf` for an empty list.
fn ln_sum_exp(energies: &[f64], beta: f64) -> f64 {
    let Some((lowest, min)) = energies
        .iter()
        .copied()
        .enumerate()
        .reduce(|acc, (i, e)| if e < acc.1 { (i, e) } else { acc })
    else {
        return f64::NEG_INFINITY;
    };
    let rest: f64 = energies
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != lowest)
        .map(|(_, e)| (-beta * (e - min)).exp())
        .sum();
    rest.ln_1p() - beta * min
}

/// A finite list of single-particle energies, one mode per entry.
///
/// Mode `i` is addressed as `ModeIndex::new(&[i])`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSpectrum {
    energies: Vec<f64>,
}

impl DiscreteSpectrum {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(invalid("discrete spectrum needs at least one level"));
        }
        if let Some(bad) = energies.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(invalid(format!(
                "mode energies must be finite and non-negative, got {bad}"
            )));
        }
        Ok(DiscreteSpectrum { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

impl SingleParticleSpectrum for DiscreteSpectrum {
    fn ln_partition(&self, beta: f64) -> f64 {
        ln_sum_exp(&self.energies, beta)
    }

    fn ln_partition_excluding(&self, beta: f64, energy: f64) -> f64 {
        let Some(skip) = self.energies.iter().position(|e| e.to_bits() == energy.to_bits()) else {
            return remove_term(self.ln_partition(beta), beta * energy);
        };
        let remaining: Vec<f64> = self
            .energies
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, e)| *e)
            .collect();
        ln_sum_exp(&remaining, beta)
    }

    fn energy_of(&self, mode: &ModeIndex) -> Result<f64> {
        let i = match mode.quanta() {
            [i] => *i as usize,
            _ => return Err(invalid(format!("discrete spectrum modes have one index, got {mode}"))),
        };
        self.energies
            .get(i)
            .copied()
            .ok_or_else(|| invalid(format!("mode {i} outside discrete spectrum of {}", self.energies.len())))
    }

    fn levels(&self, cutoff: &SpectrumCutoff) -> Result<Vec<EnergyLevel>> {
        let raw = self
            .energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e <= cutoff.max_energy)
            .map(|(i, &energy)| {
                Ok(EnergyLevel {
                    energy,
                    degeneracy: 1,
                    lowest_mode: ModeIndex::new(&[i as u32])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(merge_levels(raw))
    }

    fn lowest_modes(&self, count: usize) -> Result<Vec<(ModeIndex, f64)>> {
        let mut modes = self
            .energies
            .iter()
            .enumerate()
            .map(|(i, &e)| Ok((ModeIndex::new(&[i as u32])?, e)))
            .collect::<Result<Vec<_>>>()?;
        modes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        modes.truncate(count);
        Ok(modes)
    }

    fn default_cutoff(&self, _temperature: f64, _n_atoms: f64, tail_tolerance: f64) -> Result<SpectrumCutoff> {
        let top = self.energies.iter().copied().fold(0.0, f64::max);
        SpectrumCutoff::new(top.max(1.0), tail_tolerance)
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        "discrete".hash(&mut h);
        for e in &self.energies {
            e.to_bits().hash(&mut h);
        }
        h.finish()
    }

    fn dimension(&self) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_level_partition() {
        let s = DiscreteSpectrum::new(vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(s.ln_partition(std::f64::consts::LN_2).exp(), 1.5, max_relative = 1e-15);
    }

    #[test]
    fn removing_a_mode() {
        let s = DiscreteSpectrum::new(vec![0.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(
            s.ln_partition_excluding(2.0, 1.0).exp(),
            1.0 + (-2f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            s.ln_partition_excluding(30.0, 0.0),
            (2.0 * (-30f64).exp()).ln(),
            max_relative = 1e-14
        );
        let single = DiscreteSpectrum::new(vec![0.5]).unwrap();
        assert_eq!(single.ln_partition_excluding(1.0, 0.5), f64::NEG_INFINITY);
        // the generic path agrees away from cancellation and survives large beta*energy
        let g = crate::TrapGeometry::new(&[1.0, 1.7]).unwrap();
        let direct = (g.ln_partition(0.8).exp() - (-0.8f64 * 1.7).exp()).ln();
        assert_relative_eq!(g.ln_partition_excluding(0.8, 1.7), direct, max_relative = 1e-14);
        assert_relative_eq!(g.ln_partition_excluding(40.0, 0.0), -40.0, max_relative = 1e-12);
        assert_relative_eq!(
            g.ln_partition_excluding(40.0, 900.0),
            g.ln_partition(40.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rejects_bad_energies() {
        assert!(DiscreteSpectrum::new(vec![]).is_err());
        assert!(DiscreteSpectrum::new(vec![0.0, -1.0]).is_err());
        assert!(DiscreteSpectrum::new(vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn degenerate_entries_merge_into_one_level() {
        let s = DiscreteSpectrum::new(vec![0.0, 2.0, 1.0, 1.0]).unwrap();
        let c = SpectrumCutoff::new(5.0, 1e-12).unwrap();
        let levels = s.levels(&c).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[1].degeneracy, 2);
        assert_eq!(levels[1].lowest_mode, ModeIndex::new(&[2]).unwrap());
    }
}
