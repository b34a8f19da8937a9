//! Real-space coherence from the occupation spectrum.
//!
//! The one-body density matrix is diagonal in the oscillator basis with the
//! mean occupations as eigenvalues, so along a principal axis through the
//! trap centre
//!
//! ```text
//! g1(-x, x) = sum_l N_l phi_l(-x) phi_l(x) / sum_l N_l phi_l(x)^2
//! ```
//!
//! where only modes even in every other axis contribute. Coherence length
//! and cloud width are the full widths at half maximum of `g1(-x, x)` and of
//! the density along the same cut.

use log::warn;

use crate::canonical::{occupation_spectrum, OccupationSpectrum, ThermalState};
use crate::error::{invalid, Error, Result};
use crate::spectrum::SingleParticleSpectrum;
use crate::trap::{characteristic_temperature, Axis, TrapGeometry, DEFAULT_TAIL_TOLERANCE};

pub const DEFAULT_MAX_MODE_ORDER: usize = 5000;
pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Automatic grid doublings before giving up on a half-maximum crossing.
pub const MAX_GRID_WIDENINGS: usize = 6;

const RESCALE: f64 = 1e100;
const LN_RESCALE: f64 = 230.258_509_299_404_57;

/// Uniform grid along one axis, symmetric about zero with an odd point count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisGrid {
    axis: Axis,
    extent: f64,
    half: usize,
}

impl AxisGrid {
    /// Points `-extent ..= extent`, `count` of them (odd, at least 3).
    pub fn new(axis: Axis, extent: f64, count: usize) -> Result<Self> {
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(invalid(format!("grid extent must be positive, got {extent}")));
        }
        if count < 3 || count.is_multiple_of(2) {
            return Err(invalid(format!("grid point count must be odd and >= 3, got {count}")));
        }
        Ok(AxisGrid {
            axis,
            extent,
            half: (count - 1) / 2,
        })
    }

    /// 1.5 times the thermal radius `max(sqrt(2T/w), 3)` in units of the
    /// axis oscillator length `1/sqrt(w)`.
    pub fn default_for(g: &TrapGeometry, axis: Axis, temperature: f64) -> Result<Self> {
        let w = g
            .frequency(axis)
            .ok_or_else(|| invalid(format!("axis {axis} is not present in a {}D trap", g.dimension())))?;
        let radius = (2.0 * temperature / w).sqrt().max(3.0) / w.sqrt();
        AxisGrid::new(axis, 1.5 * radius, DEFAULT_GRID_POINTS)
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn count(&self) -> usize {
        2 * self.half + 1
    }

    pub fn center(&self) -> usize {
        self.half
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.half as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count()).map(|i| self.point(i)).collect()
    }

    /// Twice the extent at the same spacing.
    pub fn widened(&self) -> Self {
        AxisGrid {
            axis: self.axis,
            extent: 2.0 * self.extent,
            half: 2 * self.half,
        }
    }
}

/// Coefficients of the normalized recurrence
/// `phi_{k+1} = x a_k phi_k - b_k phi_{k-1}`, `a_k = sqrt(2/(k+1))`, `b_k = sqrt(k/(k+1))`.
struct Recurrence {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Recurrence {
    fn new(max_order: usize) -> Self {
        let a = (0..max_order).map(|k| (2.0 / (k + 1) as f64).sqrt()).collect();
        let b = (0..max_order).map(|k| (k as f64 / (k + 1) as f64).sqrt()).collect();
        Recurrence { a, b }
    }

    /// Runs the recurrence without the Gaussian factor. `visit(k, v, scale)`
    /// receives `v` with `phi_k(x) = v * RESCALE^scale * exp(-x^2/2)`;
    /// `scale` only grows.
    fn run(&self, x: f64, mut visit: impl FnMut(usize, f64, u32)) {
        let mut prev = 0.0;
        let mut cur = std::f64::consts::PI.powf(-0.25);
        let mut scale = 0u32;
        visit(0, cur, scale);
        for k in 0..self.a.len() {
            let next = x * self.a[k] * cur - self.b[k] * prev;
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                cur /= RESCALE;
                prev /= RESCALE;
                scale += 1;
            }
            visit(k + 1, cur, scale);
        }
    }
}

/// Normalized 1D oscillator eigenfunction `phi_k(x)` (unit frequency).
pub fn mode_function(k: usize, x: f64) -> Result<f64> {
    mode_function_with_limit(k, x, DEFAULT_MAX_MODE_ORDER)
}

pub fn mode_function_with_limit(k: usize, x: f64, max_order: usize) -> Result<f64> {
    if k > max_order {
        return Err(invalid(format!("mode order {k} exceeds the maximum {max_order}")));
    }
    if !x.is_finite() {
        return Err(invalid(format!("position must be finite, got {x}")));
    }
    let rec = Recurrence::new(k);
    let mut value = 0.0;
    let mut scale = 0;
    rec.run(x, |i, v, s| {
        if i == k {
            value = v;
            scale = s;
        }
    });
    if value == 0.0 {
        return Ok(0.0);
    }
    let ln_mag = value.abs().ln() + scale as f64 * LN_RESCALE - 0.5 * x * x;
    Ok(value.signum() * ln_mag.exp())
}

/// `phi_{2m}(0)^2 = pi^{-1/2} prod_{j=1}^{m} (2j-1)/(2j)`; odd orders vanish.
fn center_density(max_order: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    let mut c = 1.0 / std::f64::consts::PI.sqrt();
    for k in (0..=max_order).step_by(2) {
        if k > 0 {
            c *= (k - 1) as f64 / k as f64;
        }
        out[k] = c;
    }
    out
}

/// `g1(-x, x)` and density sampled along one axis, with their FWHMs.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationProfile {
    pub grid: AxisGrid,
    pub g1: Vec<f64>,
    pub density: Vec<f64>,
    /// Infinite when `g1` stays above one half across the whole grid.
    pub coherence_length: f64,
    pub cloud_width: f64,
    /// Trapezoid integral of the density along the cut.
    pub integrated_density: f64,
}

/// Effective occupation of each quantum number along `axis`, with the other
/// axes evaluated at the trap centre:
/// `W(k) = sum_{rest} N(w_a k + E_rest) prod_r sqrt(w_r) phi_{l_r}(0)^2`.
fn axis_weights(spec: &OccupationSpectrum, g: &TrapGeometry, axis: Axis) -> Vec<f64> {
    let e_max = spec.cutoff().max_energy;
    let w_axis = g.frequencies()[axis.index()];
    let rest: Vec<f64> = g
        .frequencies()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != axis.index())
        .map(|(_, &w)| w)
        .collect();

    // even quanta only on the other axes; merge combinations of equal energy
    let mut combos: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for &w in &rest {
        let orders = (e_max / w).floor() as usize;
        let centre = center_density(orders);
        let mut next = Vec::new();
        for &(e, weight) in &combos {
            for l in (0..=orders).step_by(2) {
                let e_new = e + w * l as f64;
                if e_new > e_max {
                    break;
                }
                next.push((e_new, weight * w.sqrt() * centre[l]));
            }
        }
        combos = next;
    }
    combos.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rest_levels: Vec<(f64, f64)> = Vec::with_capacity(combos.len());
    for (e, w) in combos {
        match rest_levels.last_mut() {
            Some(last) if last.0.to_bits() == e.to_bits() => last.1 += w,
            _ => rest_levels.push((e, w)),
        }
    }

    let orders = (e_max / w_axis).floor() as usize;
    let mut weights = Vec::with_capacity(orders + 1);
    for k in 0..=orders {
        let base = w_axis * k as f64;
        let mut total = 0.0;
        for &(e_rest, w_rest) in &rest_levels {
            let e = base + e_rest;
            if e > e_max {
                break;
            }
            total += w_rest * spec.occupation_at_energy(e);
        }
        weights.push(total);
    }
    // drop the negligible tail
    let sum: f64 = weights.iter().sum();
    while weights.len() > 1 && *weights.last().unwrap() <= 1e-17 * sum {
        weights.pop();
    }
    weights
}

struct RawProfile {
    g1: Vec<f64>,
    density: Vec<f64>,
    integrated: f64,
}

fn evaluate_profile(weights: &[f64], w_axis: f64, grid: &AxisGrid) -> RawProfile {
    let rec = Recurrence::new(weights.len() - 1);
    let n = grid.count();
    let c = grid.center();
    let mut g1 = vec![0.0; n];
    let mut density = vec![0.0; n];
    let root_w = w_axis.sqrt();
    for i in c..n {
        let xi = root_w * grid.point(i);
        let mut num = 0.0;
        let mut den = 0.0;
        let mut current_scale = 0;
        rec.run(xi, |k, v, s| {
            if s != current_scale {
                let shrink = (RESCALE * RESCALE).recip().powi((s - current_scale) as i32);
                num *= shrink;
                den *= shrink;
                current_scale = s;
            }
            let t = weights[k] * v * v;
            den += t;
            if k % 2 == 0 {
                num += t;
            } else {
                num -= t;
            }
        });
        let ratio = if i == c || den == 0.0 { 1.0 } else { num / den };
        let rho = if den > 0.0 {
            root_w * (den.ln() + 2.0 * current_scale as f64 * LN_RESCALE - xi * xi).exp()
        } else {
            0.0
        };
        g1[i] = ratio;
        density[i] = rho;
        g1[2 * c - i] = ratio;
        density[2 * c - i] = rho;
    }
    let dx = grid.spacing();
    let integrated = dx * (density.iter().sum::<f64>() - 0.5 * (density[0] + density[n - 1]));
    RawProfile {
        g1,
        density,
        integrated,
    }
}

/// Full width at half maximum of a curve peaked at the grid centre. The
/// crossings nearest the centre are located by linear interpolation.
pub fn fwhm(values: &[f64], grid: &AxisGrid) -> Result<f64> {
    if values.len() != grid.count() {
        return Err(invalid(format!(
            "{} samples for a grid of {} points",
            values.len(),
            grid.count()
        )));
    }
    let c = grid.center();
    let peak = values[c];
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) || peak < max * (1.0 - 1e-12) {
        return Err(invalid("curve must have a positive global maximum at the grid centre"));
    }
    let half = 0.5 * peak;
    let dx = grid.spacing();
    let crossing = |step: isize| -> Result<f64> {
        let mut prev = c;
        loop {
            let next = prev as isize + step;
            if next < 0 || next as usize >= values.len() {
                return Err(Error::ExtentTooSmall { extent: grid.extent() });
            }
            let next = next as usize;
            if values[next] <= half {
                let frac = (values[prev] - half) / (values[prev] - values[next]);
                return Ok((prev as f64 - c as f64 + step as f64 * frac) * dx);
            }
            prev = next;
        }
    };
    Ok(crossing(1)? - crossing(-1)?)
}

fn check_profile_inputs(spec: &OccupationSpectrum, g: &TrapGeometry, grid: &AxisGrid) -> Result<f64> {
    if spec.table().fingerprint() != g.fingerprint() {
        return Err(invalid("occupation spectrum was built for a different trap"));
    }
    let required = 1.0 - 1e-6;
    if !(spec.captured_fraction() >= required) {
        return Err(Error::CutoffTooSmall {
            achieved: spec.captured_fraction(),
            required,
        });
    }
    g.frequency(grid.axis()).ok_or_else(|| {
        invalid(format!(
            "axis {} is not present in a {}D trap",
            grid.axis(),
            g.dimension()
        ))
    })
}

/// `g1(-x, x)` and the density along `grid`'s axis through the trap centre.
/// Fails with [`Error::ExtentTooSmall`] when the grid does not contain the
/// density's half maximum.
pub fn g1_profile(spec: &OccupationSpectrum, g: &TrapGeometry, grid: &AxisGrid) -> Result<CorrelationProfile> {
    let w_axis = check_profile_inputs(spec, g, grid)?;
    let weights = axis_weights(spec, g, grid.axis());
    let raw = evaluate_profile(&weights, w_axis, grid);
    let cloud_width = fwhm(&raw.density, grid)?;
    let coherence_length = match fwhm(&raw.g1, grid) {
        Err(Error::ExtentTooSmall { .. }) => f64::INFINITY,
        other => other?,
    };
    Ok(CorrelationProfile {
        grid: *grid,
        g1: raw.g1,
        density: raw.density,
        coherence_length,
        cloud_width,
        integrated_density: raw.integrated,
    })
}

/// [`g1_profile`] on the default grid, doubling the extent (at fixed
/// spacing) up to [`MAX_GRID_WIDENINGS`] times while a width does not fit.
pub fn g1_profile_auto(spec: &OccupationSpectrum, g: &TrapGeometry, axis: Axis) -> Result<CorrelationProfile> {
    let mut grid = AxisGrid::default_for(g, axis, spec.temperature())?;
    let mut widenings = 0;
    loop {
        let result = g1_profile(spec, g, &grid);
        let fits = match &result {
            Err(Error::ExtentTooSmall { .. }) => false,
            Ok(p) => p.coherence_length.is_finite(),
            Err(_) => true,
        };
        if fits || widenings == MAX_GRID_WIDENINGS {
            return result;
        }
        grid = grid.widened();
        widenings += 1;
    }
}

/// Quasicondensation point: the temperature at which the coherence length
/// equals the cloud width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TphPoint {
    pub temperature: f64,
    pub t_over_tc: f64,
    pub ground_occupation: f64,
    pub ground_fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    Canonical,
}

/// `l_phi(T) - width(T)` along `axis`; `+inf` when `g1` stays above one half
/// across a grid that already contains the cloud.
fn width_excess(g: &TrapGeometry, n_atoms: usize, t: f64, axis: Axis, tail_tolerance: f64) -> Result<f64> {
    let state = ThermalState::new(n_atoms, t)?;
    let cutoff = g.default_cutoff(t, n_atoms as f64, tail_tolerance)?;
    let spec = occupation_spectrum(g, &state, &cutoff)?;
    let w_axis = g.frequencies()[axis.index()];
    let weights = axis_weights(&spec, g, axis);
    let mut grid = AxisGrid::default_for(g, axis, t)?;
    for _ in 0..=MAX_GRID_WIDENINGS {
        let raw = evaluate_profile(&weights, w_axis, &grid);
        let width = match fwhm(&raw.density, &grid) {
            Ok(w) => w,
            Err(Error::ExtentTooSmall { .. }) => {
                grid = grid.widened();
                continue;
            }
            Err(e) => return Err(e),
        };
        return match fwhm(&raw.g1, &grid) {
            Ok(l) => Ok(l - width),
            // the coherence length exceeds the whole grid, hence the width
            Err(Error::ExtentTooSmall { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        };
    }
    Err(Error::ExtentTooSmall { extent: grid.extent() })
}

fn no_crossing(temps: &[f64], values: &[f64]) -> Error {
    let listing: Vec<String> = temps
        .iter()
        .zip(values)
        .map(|(t, v)| format!("T={t:.4e}: {v:.4e}"))
        .collect();
    Error::Range(format!(
        "coherence length minus width has no downward sign change: {}",
        listing.join(", ")
    ))
}

/// Finds `T_ph` with `l_phi(T_ph) = width(T_ph)` in `[0.05 T_c, 2 T_c]` by
/// sampling for a sign change and bisecting in `ln T` along the softest axis.
/// If several crossings are sampled the lowest is returned and a warning
/// logged; without any, the bracket is extended geometrically.
pub fn find_tph(g: &TrapGeometry, n_atoms: usize, ensemble: Ensemble) -> Result<TphPoint> {
    find_tph_with_tolerance(g, n_atoms, ensemble, DEFAULT_TAIL_TOLERANCE)
}

/// [`find_tph`] with an explicit spectrum tail tolerance.
pub fn find_tph_with_tolerance(
    g: &TrapGeometry,
    n_atoms: usize,
    ensemble: Ensemble,
    tail_tolerance: f64,
) -> Result<TphPoint> {
    let Ensemble::Canonical = ensemble;
    const SAMPLES: usize = 9;
    const REL_TOL: f64 = 1e-6;
    const BRACKET_EXTENSIONS: usize = 12;
    let t_c = characteristic_temperature(g, n_atoms as u64)?;
    let axis = g.softest_axis();
    let (t_lo, t_hi) = (0.05 * t_c, 2.0 * t_c);

    let temps: Vec<f64> = (0..SAMPLES)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / (SAMPLES - 1) as f64))
        .collect();
    let values = temps
        .iter()
        .map(|&t| width_excess(g, n_atoms, t, axis, tail_tolerance))
        .collect::<Result<Vec<_>>>()?;
    let changes: Vec<usize> = (0..SAMPLES - 1)
        .filter(|&i| values[i] > 0.0 && values[i + 1] <= 0.0)
        .collect();
    let excess = |t: f64| width_excess(g, n_atoms, t, axis, tail_tolerance);
    let (mut lo, mut hi) = match changes.first() {
        Some(&first) => {
            let sign_flips = values.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
            if sign_flips > 1 {
                warn!("find_tph: {sign_flips} sign changes sampled for N = {n_atoms}; returning the lowest crossing");
            }
            (temps[first], temps[first + 1])
        }
        // Strongly anisotropic traps can cross outside a bracket scaled by the
        // geometric-mean T_c; extend it geometrically in the needed direction.
        None if values.iter().all(|v| *v <= 0.0) => {
            let mut hi = temps[0];
            let mut lo = hi / 4.0;
            let mut steps = 0;
            while excess(lo)? <= 0.0 {
                steps += 1;
                if steps >= BRACKET_EXTENSIONS {
                    return Err(no_crossing(&temps, &values));
                }
                hi = lo;
                lo /= 4.0;
            }
            (lo, hi)
        }
        None if values.iter().all(|v| *v > 0.0) => {
            let mut lo = temps[SAMPLES - 1];
            let mut hi = 2.0 * lo;
            let mut steps = 0;
            while excess(hi)? > 0.0 {
                steps += 1;
                if steps >= BRACKET_EXTENSIONS {
                    return Err(no_crossing(&temps, &values));
                }
                lo = hi;
                hi *= 2.0;
            }
            (lo, hi)
        }
        // only upward crossings: coherence improving with temperature
        None => return Err(no_crossing(&temps, &values)),
    };
    while hi / lo - 1.0 > REL_TOL {
        let mid = (lo * hi).sqrt();
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let temperature = (lo * hi).sqrt();
    let state = ThermalState::new(n_atoms, temperature)?;
    let table = crate::canonical::build_partition_table(g, &state)?;
    let n0 = table.ground_occupation();
    Ok(TphPoint {
        temperature,
        t_over_tc: temperature / t_c,
        ground_occupation: n0,
        ground_fraction: n0 / n_atoms as f64,
    })
}
