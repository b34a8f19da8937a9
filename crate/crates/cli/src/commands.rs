use log::warn;
use rayon::prelude::*;

use bosegas::{
    build_partition_table, characteristic_temperature, find_tph_with_tolerance, g1_profile, g1_profile_auto,
    leading_occupations, occupation_spectrum, sticking_ratio_gc, temperature_for_fraction, temperature_for_fraction_gc,
    Axis, AxisGrid, Ensemble, GcMode, SingleParticleSpectrum, ThermalState, TrapGeometry,
};

use crate::output::{real, Table};
use crate::sweep::{parse_atom_numbers, parse_values, Scale};
use crate::{
    AspectArgs, AxisChoice, EnsembleChoice, Failure, G1Args, GcModeChoice, OccupationsArgs, OutputArgs, StickingArgs,
    TemperatureArgs, TphArgs, TrapArgs,
};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn geometry(trap: &TrapArgs) -> Result<TrapGeometry, Failure> {
    let g = if let Some(d) = trap.dim {
        TrapGeometry::isotropic(d as usize)?
    } else if let Some(w) = &trap.omega {
        TrapGeometry::new(w)?
    } else if let Some(r) = trap.aspect_ratio {
        TrapGeometry::axially_symmetric(1.0, r)?
    } else {
        return Err(usage("one of --dim, --omega or --aspect-ratio is required"));
    };
    Ok(g)
}

fn describe(table: &mut Table, g: &TrapGeometry) {
    table.meta("dimension", g.dimension());
    let w: Vec<String> = g.frequencies().iter().map(|w| real(*w)).collect();
    table.meta("omega", w.join(" "));
}

fn check_output(out: &OutputArgs) -> Result<(), Failure> {
    if !(out.cutoff_tol > 0.0 && out.cutoff_tol < 1.0) {
        return Err(usage(format!(
            "--cutoff-tol must lie in (0, 1), got {}",
            out.cutoff_tol
        )));
    }
    Ok(())
}

fn common_meta(table: &mut Table, out: &OutputArgs) {
    table.meta("cutoff_tolerance", real(out.cutoff_tol));
    table.meta("canonical_cap", out.canonical_cap);
}

fn check_cap(n: u64, out: &OutputArgs) -> Result<usize, Failure> {
    if n > out.canonical_cap {
        return Err(usage(format!(
            "canonical ensemble is limited to N <= {} (--canonical-cap); got N = {n}",
            out.canonical_cap
        )));
    }
    Ok(n as usize)
}

fn single_atom_number(text: &str) -> Result<u64, Failure> {
    match parse_atom_numbers(text, Scale::Linear).map_err(usage)?[..] {
        [n] => Ok(n),
        _ => Err(usage(format!("expected a single atom number, got {text:?}"))),
    }
}

fn t_c_or_nan(g: &TrapGeometry, n: u64) -> f64 {
    characteristic_temperature(g, n).unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug)]
enum TemperaturePoint {
    Absolute(f64),
    RelativeToTc(f64),
    Fraction(f64),
}

fn temperature_points(args: &TemperatureArgs, scale: Scale) -> Result<(Vec<TemperaturePoint>, String), Failure> {
    let (text, make, label): (&String, fn(f64) -> TemperaturePoint, &str) = if let Some(s) = &args.temp {
        (s, TemperaturePoint::Absolute, "temp")
    } else if let Some(s) = &args.t_over_tc {
        (s, TemperaturePoint::RelativeToTc, "t_over_tc")
    } else if let Some(s) = &args.n0_frac {
        (s, TemperaturePoint::Fraction, "n0_frac")
    } else {
        return Err(usage("one of --temp, --t-over-tc or --n0-frac is required"));
    };
    let values = parse_values(text, scale).map_err(usage)?;
    for &v in &values {
        match label {
            "n0_frac" if !(v > 0.0 && v < 1.0) => {
                return Err(usage(format!("--n0-frac values must lie in (0, 1), got {v}")))
            }
            _ if v < 0.0 => {
                return Err(usage(format!(
                    "--{} values must be non-negative, got {v}",
                    label.replace('_', "-")
                )))
            }
            _ => {}
        }
    }
    Ok((values.into_iter().map(make).collect(), format!("{label} = {text}")))
}

fn resolve_temperature(g: &TrapGeometry, n: usize, t_c: f64, point: TemperaturePoint) -> Result<f64, Failure> {
    match point {
        TemperaturePoint::Absolute(t) => Ok(t),
        TemperaturePoint::RelativeToTc(x) if t_c.is_finite() => Ok(x * t_c),
        TemperaturePoint::RelativeToTc(_) => Err(usage("--t-over-tc needs N >= 2")),
        TemperaturePoint::Fraction(c) => Ok(temperature_for_fraction(g, n, c)?.temperature()),
    }
}

/// Collects per-point results in sweep order, stopping at the first failure.
fn in_order<T>(results: Vec<Result<T, Failure>>) -> Result<Vec<T>, Failure> {
    results.into_iter().collect()
}

pub fn occupations(args: &OccupationsArgs) -> Result<(), Failure> {
    check_output(&args.output)?;
    let g = geometry(&args.trap)?;
    let n_raw = single_atom_number(&args.natoms)?;
    let n = check_cap(n_raw, &args.output)?;
    let scale = args.output.scale.unwrap_or(Scale::Linear);
    let (points, sweep) = temperature_points(&args.temperature, scale)?;
    let t_c = t_c_or_nan(&g, n_raw);

    let rows = in_order(
        points
            .par_iter()
            .map(|&p| -> Result<Vec<String>, Failure> {
                let t = resolve_temperature(&g, n, t_c, p)?;
                if t == 0.0 {
                    return Ok(vec![real(0.0), real(0.0), real(1.0), real(0.0), real(0.0)]);
                }
                let state = ThermalState::new(n, t)?;
                let table = build_partition_table(&g, &state)?;
                let occ = leading_occupations(&g, &table, 2)?;
                let (n0, n1) = (occ[0].1, occ.get(1).map_or(0.0, |m| m.1));
                let nf = n as f64;
                Ok(vec![
                    real(t),
                    real(t / t_c),
                    real(n0 / nf),
                    real(n1 / nf),
                    real(n1 / n0),
                ])
            })
            .collect(),
    )?;

    let mut table = Table::new(
        "occupations",
        &["temperature", "t_over_tc", "n0_over_n", "n1_over_n", "n1_over_n0"],
    );
    describe(&mut table, &g);
    table.meta("n_atoms", n);
    table.meta("t_c", real(t_c));
    table.meta("sweep", format!("{sweep} ({})", scale.name()));
    table.meta("ensemble", "canonical");
    common_meta(&mut table, &args.output);
    rows.into_iter().for_each(|r| table.row(r));
    table.write(args.output.out.as_deref())?;
    Ok(())
}

pub fn sticking(args: &StickingArgs) -> Result<(), Failure> {
    check_output(&args.output)?;
    let g = geometry(&args.trap)?;
    let c = args.n0_frac;
    if !(c > 0.0 && c < 1.0) {
        return Err(usage(format!("--n0-frac must lie in (0, 1), got {c}")));
    }
    let scale = args.output.scale.unwrap_or(Scale::Log);
    let atoms = parse_atom_numbers(&args.natoms, scale).map_err(usage)?;
    let cap = args.output.canonical_cap;
    if args.ensemble == EnsembleChoice::Canonical {
        for &n in &atoms {
            check_cap(n, &args.output)?;
        }
    }
    let gc_mode = match args.gc_mode {
        GcModeChoice::Closed => GcMode::ClosedForm,
        GcModeChoice::Exact => GcMode::Exact,
    };

    let mut tasks = Vec::new();
    for &n in &atoms {
        if args.ensemble != EnsembleChoice::Grand && n <= cap {
            tasks.push((n, EnsembleChoice::Canonical));
        }
        if args.ensemble != EnsembleChoice::Canonical {
            tasks.push((n, EnsembleChoice::Grand));
        }
    }
    let rows = in_order(
        tasks
            .par_iter()
            .map(|&(n, ensemble)| -> Result<Vec<String>, Failure> {
                let (name, t, ratio) = if ensemble == EnsembleChoice::Canonical {
                    let state = temperature_for_fraction(&g, n as usize, c)?;
                    let table = build_partition_table(&g, &state)?;
                    let occ = leading_occupations(&g, &table, 2)?;
                    ("canonical", state.temperature(), occ[1].1 / occ[0].1)
                } else {
                    let sol = temperature_for_fraction_gc(&g, n as f64, c, gc_mode)?;
                    (
                        "grand",
                        sol.temperature,
                        sticking_ratio_gc(sol.fugacity, sol.temperature, &g)?,
                    )
                };
                Ok(vec![n.to_string(), name.to_string(), real(t), real(ratio)])
            })
            .collect(),
    )?;

    let mut table = Table::new("sticking", &["n_atoms", "ensemble", "temperature", "n1_over_n0"]);
    describe(&mut table, &g);
    table.meta("n0_frac", real(c));
    table.meta("natoms", format!("{} ({})", args.natoms, scale.name()));
    table.meta("ensemble", format!("{:?}", args.ensemble).to_lowercase());
    table.meta("gc_mode", format!("{:?}", args.gc_mode).to_lowercase());
    common_meta(&mut table, &args.output);
    if args.ensemble == EnsembleChoice::Both && atoms.iter().any(|&n| n > cap) {
        table.meta("note", format!("canonical rows omitted for N > {cap}"));
    }
    rows.into_iter().for_each(|r| table.row(r));
    table.write(args.output.out.as_deref())?;
    Ok(())
}

pub fn tph(args: &TphArgs) -> Result<(), Failure> {
    check_output(&args.output)?;
    let g = geometry(&args.trap)?;
    let scale = args.output.scale.unwrap_or(Scale::Log);
    let atoms = parse_atom_numbers(&args.natoms, scale).map_err(usage)?;
    for &n in &atoms {
        check_cap(n, &args.output)?;
        if n < 2 {
            return Err(usage("T_ph needs N >= 2"));
        }
    }
    let tol = args.output.cutoff_tol;
    let results: Vec<_> = atoms
        .par_iter()
        .map(|&n| (n, find_tph_with_tolerance(&g, n as usize, Ensemble::Canonical, tol)))
        .collect();

    let mut table = Table::new(
        "tph",
        &["n_atoms", "t_c", "t_ph", "t_ph_over_tc", "n0_ph_over_n", "status"],
    );
    describe(&mut table, &g);
    table.meta("natoms", format!("{} ({})", args.natoms, scale.name()));
    table.meta("ensemble", "canonical");
    table.meta("axis", g.softest_axis());
    common_meta(&mut table, &args.output);
    let mut failures = 0;
    for (n, result) in results {
        let t_c = t_c_or_nan(&g, n);
        match result {
            Ok(p) => table.row(vec![
                n.to_string(),
                real(t_c),
                real(p.temperature),
                real(p.t_over_tc),
                real(p.ground_fraction),
                "ok".into(),
            ]),
            Err(e) => {
                failures += 1;
                let nan = real(f64::NAN);
                table.row(vec![
                    n.to_string(),
                    real(t_c),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    format!("error: {e}"),
                ]);
            }
        }
    }
    table.write(args.output.out.as_deref())?;
    if failures > 0 {
        return Err(Failure::Numerical(format!(
            "T_ph not found for {failures} of {} atom numbers",
            atoms.len()
        )));
    }
    Ok(())
}

pub fn aspect(args: &AspectArgs) -> Result<(), Failure> {
    check_output(&args.output)?;
    let n = check_cap(args.natoms, &args.output)?;
    let c = args.n0_frac;
    if !(c > 0.0 && c < 1.0) {
        return Err(usage(format!("--n0-frac must lie in (0, 1), got {c}")));
    }
    let scale = args.output.scale.unwrap_or(Scale::Log);
    let ratios = parse_values(&args.aspect_ratio, scale).map_err(usage)?;
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0)) {
        return Err(usage(format!("aspect ratios must be positive, got {r}")));
    }
    let tol = args.output.cutoff_tol;

    let rows = in_order(
        ratios
            .par_iter()
            .map(|&r| -> Result<Vec<String>, Failure> {
                let g = TrapGeometry::axially_symmetric(1.0, r)?;
                let state = temperature_for_fraction(&g, n, c)?;
                let table = build_partition_table(&g, &state)?;
                let occ = leading_occupations(&g, &table, 3)?;
                let n0 = occ[0].1;
                let (mut per, mut along) = (f64::NAN, f64::NAN);
                if args.tph_markers {
                    match find_tph_with_tolerance(&g, n, Ensemble::Canonical, tol) {
                        Ok(p) => {
                            per = p.temperature;
                            along = p.temperature / r;
                        }
                        Err(e) => warn!("aspect ratio {r}: T_ph not found: {e}"),
                    }
                }
                Ok(vec![
                    real(r),
                    real(state.temperature()),
                    real(n0 / n as f64),
                    real(occ[1].1 / n0),
                    real(occ[2].1 / n0),
                    real(per),
                    real(along),
                ])
            })
            .collect(),
    )?;

    let mut table = Table::new(
        "aspect",
        &[
            "aspect_ratio",
            "temperature",
            "n0_over_n",
            "n1_over_n0",
            "n2_over_n0",
            "tph_over_omega_perp",
            "tph_over_omega_z",
        ],
    );
    table.meta("dimension", 3);
    table.meta("omega", "1 1 aspect_ratio");
    table.meta("n_atoms", n);
    table.meta("n0_frac", real(c));
    table.meta("aspect_ratio", format!("{} ({})", args.aspect_ratio, scale.name()));
    table.meta("tph_markers", args.tph_markers);
    table.meta("ensemble", "canonical");
    common_meta(&mut table, &args.output);
    rows.into_iter().for_each(|r| table.row(r));
    table.write(args.output.out.as_deref())?;
    Ok(())
}

pub fn g1(args: &G1Args) -> Result<(), Failure> {
    check_output(&args.output)?;
    let g = geometry(&args.trap)?;
    let n = check_cap(args.natoms, &args.output)?;
    let (points, sweep) = temperature_points(&args.temperature, Scale::Linear)?;
    let [point] = points[..] else {
        return Err(usage("g1 takes a single temperature"));
    };
    let t_c = t_c_or_nan(&g, args.natoms);
    let t = resolve_temperature(&g, n, t_c, point)?;
    if !(t > 0.0) {
        return Err(usage("g1 needs a positive temperature"));
    }
    let axis = match args.axis {
        None => g.softest_axis(),
        Some(AxisChoice::X) => Axis::X,
        Some(AxisChoice::Y) => Axis::Y,
        Some(AxisChoice::Z) => Axis::Z,
    };
    let state = ThermalState::new(n, t)?;
    let cutoff = g.default_cutoff(t, n as f64, args.output.cutoff_tol)?;
    let occupations = occupation_spectrum(&g, &state, &cutoff)?;
    let profile = if args.grid_extent.is_some() || args.grid_points.is_some() {
        let default = AxisGrid::default_for(&g, axis, t)?;
        let grid = AxisGrid::new(
            axis,
            args.grid_extent.unwrap_or(default.extent()),
            args.grid_points.unwrap_or(default.count()),
        )?;
        g1_profile(&occupations, &g, &grid)?
    } else {
        g1_profile_auto(&occupations, &g, axis)?
    };

    let mut table = Table::new("g1", &["x", "g1", "density"]);
    describe(&mut table, &g);
    table.meta("n_atoms", n);
    table.meta("temperature", real(t));
    table.meta("t_over_tc", real(t / t_c));
    table.meta("sweep", sweep);
    table.meta("axis", axis);
    table.meta("grid_extent", real(profile.grid.extent()));
    table.meta("grid_points", profile.grid.count());
    table.meta("ground_fraction", real(occupations.ground_occupation() / n as f64));
    table.meta("cutoff_max_energy", real(cutoff.max_energy));
    table.meta("captured_fraction", real(occupations.captured_fraction()));
    common_meta(&mut table, &args.output);
    for (i, x) in profile.grid.points().into_iter().enumerate() {
        table.row(vec![real(x), real(profile.g1[i]), real(profile.density[i])]);
    }
    table.footer("coherence_length", real(profile.coherence_length));
    table.footer("cloud_width", real(profile.cloud_width));
    table.write(args.output.out.as_deref())?;
    Ok(())
}
