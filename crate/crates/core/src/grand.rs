//! Grand-canonical statistics at fixed fugacity.
//!
//! The mean atom number is
//!
//! ```text
//! N = z/(1-z) + sum_{l != 0} z e^{-beta E_l} / (1 - z e^{-beta E_l})
//! ```
//!
//! The fugacity is carried as its logit `u = ln(z/(1-z))`, which is the log
//! of the condensate number. Near `z -> 1` (large N at fixed condensate
//! fraction) `1 - z` is then still resolved to full relative precision.

use crate::error::{invalid, Error, Result};
use crate::spectrum::SingleParticleSpectrum;
use crate::trap::{ln_z1_unchecked, SpectrumCutoff, TrapGeometry, DEFAULT_TAIL_TOLERANCE, ZETA_2, ZETA_3};

/// Fugacity `z` in (0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fugacity {
    logit: f64,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Fugacity {
    pub fn new(z: f64) -> Result<Self> {
        if !(z > 0.0 && z < 1.0) {
            return Err(invalid(format!("fugacity must lie in (0, 1), got {z}")));
        }
        Ok(Fugacity {
            logit: z.ln() - (-z).ln_1p(),
        })
    }

    pub fn from_logit(logit: f64) -> Result<Self> {
        if !logit.is_finite() {
            return Err(invalid(format!("fugacity logit must be finite, got {logit}")));
        }
        Ok(Fugacity { logit })
    }

    /// The fugacity whose condensate term `z/(1-z)` equals `n0`.
    pub fn from_condensate_number(n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(invalid(format!("condensate number must be positive, got {n0}")));
        }
        Ok(Fugacity { logit: n0.ln() })
    }

    pub fn value(&self) -> f64 {
        1.0 / (1.0 + (-self.logit).exp())
    }

    pub fn logit(&self) -> f64 {
        self.logit
    }

    /// `1 - z`, accurate when `z` is close to one.
    pub fn complement(&self) -> f64 {
        1.0 / (1.0 + self.logit.exp())
    }

    pub fn ln_value(&self) -> f64 {
        -softplus(-self.logit)
    }

    /// `z / (1 - z)`.
    pub fn condensate_number(&self) -> f64 {
        self.logit.exp()
    }

    /// Bose occupation `1/(exp(beta e)/z - 1)` of a mode with energy `e > 0`.
    pub fn bose_occupation(&self, beta_energy: f64) -> f64 {
        1.0 / (beta_energy - self.ln_value()).exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrandCanonicalState {
    pub fugacity: Fugacity,
    pub temperature: f64,
    pub n_atoms_target: f64,
    pub fingerprint: u64,
}

/// Excited levels `(energy, degeneracy)` in ascending order, ground excluded.
struct ExcitedLevels {
    levels: Vec<(f64, f64)>,
}

impl ExcitedLevels {
    fn new(g: &TrapGeometry, cutoff: &SpectrumCutoff) -> Result<Self> {
        let levels = g
            .levels(cutoff)?
            .into_iter()
            .filter(|l| l.energy > 0.0)
            .map(|l| (l.energy, l.degeneracy as f64))
            .collect();
        Ok(ExcitedLevels { levels })
    }

    /// Excited-state atom number. Levels up to `max_energy` are summed
    /// exactly; beyond it each Bose factor is replaced by its leading term
    /// `z e^{-beta e}`, whose sum is `z (Z_1 - partial Boltzmann sum)`.
    fn excited_number(&self, g: &TrapGeometry, z: &Fugacity, beta: f64, max_energy: f64) -> f64 {
        let upto = self.levels.partition_point(|&(e, _)| e <= max_energy);
        let mut excited = 0.0;
        let mut boltzmann = 0.0;
        for &(e, d) in self.levels[..upto].iter().rev() {
            excited += d * z.bose_occupation(beta * e);
            boltzmann += d * (-beta * e).exp();
        }
        boltzmann += 1.0;
        let z1 = ln_z1_unchecked(g, beta).exp();
        let tail = (z1 - boltzmann).max(0.0) * z.value();
        excited + tail
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("temperature must be positive, got {t}")));
    }
    Ok(())
}

/// A cutoff with `exp(-beta E_max) <= tail_tolerance`, so the tail
/// approximation's relative error is below `tail_tolerance`.
pub fn grand_cutoff(g: &TrapGeometry, temperature: f64, tail_tolerance: f64) -> Result<SpectrumCutoff> {
    SpectrumCutoff::new(
        temperature * (1.0 / tail_tolerance).ln() + g.max_frequency(),
        tail_tolerance,
    )
}

/// Mean atom number at fugacity `z` and temperature `t`.
pub fn atom_number(g: &TrapGeometry, z: Fugacity, t: f64, cutoff: &SpectrumCutoff) -> Result<f64> {
    check_temperature(t)?;
    let levels = ExcitedLevels::new(g, cutoff)?;
    Ok(z.condensate_number() + levels.excited_number(g, &z, 1.0 / t, cutoff.max_energy))
}

/// Fugacity reproducing `n_atoms` at temperature `t`, by bisection on the
/// logit of `z` to relative atom-number tolerance 1e-10.
pub fn solve_fugacity(g: &TrapGeometry, n_atoms: f64, t: f64, cutoff: &SpectrumCutoff) -> Result<GrandCanonicalState> {
    const MAX_ITER: usize = 400;
    if !(n_atoms > 0.0 && n_atoms.is_finite()) {
        return Err(invalid(format!("n_atoms must be positive, got {n_atoms}")));
    }
    check_temperature(t)?;
    let levels = ExcitedLevels::new(g, cutoff)?;
    let beta = 1.0 / t;
    let count = |u: f64| -> Result<f64> {
        let z = Fugacity::from_logit(u)?;
        let n = z.condensate_number() + levels.excited_number(g, &z, beta, cutoff.max_energy);
        if n.is_nan() {
            return Err(Error::Numerical(format!("atom number is NaN at logit {u}")));
        }
        Ok(n)
    };
    let done = |u: f64| {
        Ok(GrandCanonicalState {
            fugacity: Fugacity::from_logit(u)?,
            temperature: t,
            n_atoms_target: n_atoms,
            fingerprint: g.fingerprint(),
        })
    };

    // N(u) >= e^u, so u = ln N is an upper bracket
    let mut hi = n_atoms.ln();
    let mut lo = hi - 40.0;
    let mut widen = 0;
    while count(lo)? >= n_atoms {
        lo -= 40.0;
        widen += 1;
        if widen > 50 {
            return Err(Error::Numerical("no lower fugacity bracket".into()));
        }
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let n = count(mid)?;
        if (n - n_atoms).abs() <= 1e-10 * n_atoms || hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
            return done(mid);
        }
        if n < n_atoms {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "fugacity bisection did not converge in {MAX_ITER} steps"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GcMode {
    /// Thermodynamic-limit closed forms.
    ClosedForm,
    /// Numerical solve of the full atom-number sum.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionSolution {
    pub fugacity: Fugacity,
    pub temperature: f64,
    pub mode: GcMode,
}

/// Closed-form temperature at condensate fraction `c`:
/// 1D `T = w N(1-C) / ln(CN + 1)`, 2D/3D `T = w (N(1-C)/zeta(D))^(1/D)`,
/// with `w` the geometric-mean frequency.
pub fn closed_form_temperature(g: &TrapGeometry, n_atoms: f64, c: f64) -> f64 {
    let w = g.geometric_mean_frequency();
    let excited = n_atoms * (1.0 - c);
    match g.dimension() {
        1 => w * excited / (c * n_atoms).ln_1p(),
        2 => w * (excited / ZETA_2).sqrt(),
        _ => w * (excited / ZETA_3).cbrt(),
    }
}

/// Fugacity and temperature holding `N_0 = C N` atoms in the condensate.
/// The fugacity is fixed by `z/(1-z) = CN` in both modes; the exact mode
/// then solves the full atom-number sum for `T`.
pub fn temperature_for_fraction_gc(g: &TrapGeometry, n_atoms: f64, c: f64, mode: GcMode) -> Result<FractionSolution> {
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("condensate fraction must lie in (0, 1), got {c}")));
    }
    if !(n_atoms > 0.0 && n_atoms.is_finite()) {
        return Err(invalid(format!("n_atoms must be positive, got {n_atoms}")));
    }
    let fugacity = Fugacity::from_condensate_number(c * n_atoms)?;
    let t_closed = closed_form_temperature(g, n_atoms, c);
    let temperature = match mode {
        GcMode::ClosedForm => t_closed,
        GcMode::Exact => exact_temperature(g, n_atoms, fugacity, t_closed)?,
    };
    Ok(FractionSolution {
        fugacity,
        temperature,
        mode,
    })
}

fn exact_temperature(g: &TrapGeometry, n_atoms: f64, z: Fugacity, guess: f64) -> Result<f64> {
    const MAX_ITER: usize = 300;
    let target_excited = n_atoms - z.condensate_number();
    let log_tol = (1.0 / DEFAULT_TAIL_TOLERANCE).ln();

    let mut lo = 0.5 * guess;
    let mut hi = 2.0 * guess;
    for _ in 0..60 {
        let cutoff = grand_cutoff(g, hi, DEFAULT_TAIL_TOLERANCE)?;
        let levels = ExcitedLevels::new(g, &cutoff)?;
        let excited = |t: f64| levels.excited_number(g, &z, 1.0 / t, t * log_tol + g.max_frequency());
        if excited(hi) < target_excited {
            lo = hi;
            hi *= 2.0;
            continue;
        }
        while excited(lo) > target_excited {
            hi = lo;
            lo *= 0.5;
        }
        for _ in 0..MAX_ITER {
            let mid = (lo * hi).sqrt();
            let e = excited(mid);
            if (e - target_excited).abs() <= 1e-12 * n_atoms || hi / lo - 1.0 < 4.0 * f64::EPSILON {
                return Ok(mid);
            }
            if e < target_excited {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Err(Error::Numerical("temperature bisection did not converge".into()));
    }
    Err(Error::Range(format!(
        "no temperature up to {hi:.3e} holds {target_excited:.6e} excited atoms"
    )))
}

/// `N_e / N_0` for a mode of energy `energy`, from the Bose factors.
pub fn occupation_ratio_gc(z: Fugacity, t: f64, energy: f64) -> Result<f64> {
    check_temperature(t)?;
    let x = energy / t - z.ln_value();
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "z exp(-beta e) = {} is not below one",
            (-x).exp()
        )));
    }
    Ok(1.0 / (x.exp_m1() * z.condensate_number()))
}

/// `N_1 / N_0` with `N_1` the occupation of a mode at the lowest trap
/// frequency:
/// `[z e^{-beta w} / (1 - z e^{-beta w})] (1 - z) / z`.
pub fn sticking_ratio_gc(z: Fugacity, t: f64, g: &TrapGeometry) -> Result<f64> {
    occupation_ratio_gc(z, t, g.min_frequency())
}

/// Result of fitting the large-N behaviour of `N_1/N_0`.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalingFit {
    /// Least-squares fit `ln(N_1/N_0) = exponent ln N + intercept`.
    PowerLaw {
        exponent: f64,
        intercept: f64,
        max_residual: f64,
    },
    /// Fit of the product `p = (N_1/N_0) ln N`, which tends to a constant
    /// when `N_1/N_0 ~ 1/ln N`.
    Logarithmic {
        mean_product: f64,
        /// Least-squares slope of `ln p` against `log10 N`.
        trend_per_decade: f64,
        /// Largest `|ln(p_{i+1}/p_i)| / (log10 N_{i+1} - log10 N_i)`.
        max_change_per_decade: f64,
    },
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Closed-form `N_1/N_0` of an isotropic `dimension`-D trap at fraction `c`.
pub fn closed_form_sticking(dimension: usize, n_atoms: f64, c: f64) -> Result<f64> {
    let g = TrapGeometry::isotropic(dimension)?;
    let sol = temperature_for_fraction_gc(&g, n_atoms, c, GcMode::ClosedForm)?;
    sticking_ratio_gc(sol.fugacity, sol.temperature, &g)
}

/// Fits the scaling of the closed-form sticking ratio over `samples` (atom
/// numbers spanning at least four decades) at fixed fraction `c`.
pub fn asymptotic_scaling_exponent(dimension: usize, samples: &[f64], c: f64) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(invalid(format!(
            "scaling fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|n| !(*n > 1.0 && n.is_finite())) {
        return Err(invalid("atom numbers must be finite and above one"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(0.0, f64::max);
    if (hi / lo).log10() < 4.0 - 1e-9 {
        return Err(invalid(format!(
            "samples span {:.2} decades; need at least 4",
            (hi / lo).log10()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ratios = sorted
        .iter()
        .map(|&n| closed_form_sticking(dimension, n, c))
        .collect::<Result<Vec<_>>>()?;

    if dimension == 1 {
        let decades: Vec<f64> = sorted.iter().map(|n| n.log10()).collect();
        let ln_products: Vec<f64> = sorted.iter().zip(&ratios).map(|(n, r)| (r * n.ln()).ln()).collect();
        let (trend, _) = least_squares(&decades, &ln_products);
        let max_change = decades
            .windows(2)
            .zip(ln_products.windows(2))
            .map(|(d, p)| (p[1] - p[0]).abs() / (d[1] - d[0]))
            .fold(0.0, f64::max);
        let mean_product = ln_products.iter().map(|p| p.exp()).sum::<f64>() / ln_products.len() as f64;
        return Ok(ScalingFit::Logarithmic {
            mean_product,
            trend_per_decade: trend,
            max_change_per_decade: max_change,
        });
    }

    let xs: Vec<f64> = sorted.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let (exponent, intercept) = least_squares(&xs, &ys);
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - exponent * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit::PowerLaw {
        exponent,
        intercept,
        max_residual,
    })
}
