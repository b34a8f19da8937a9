//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::Command;
use std::time::Instant;

use rayon::prelude::*;

use bosegas::{
    asymptotic_scaling_exponent, build_partition_table, characteristic_temperature, closed_form_sticking, find_tph,
    g1_profile_auto, leading_occupations, mean_occupation, occupancy_distribution, occupation_spectrum,
    temperature_for_fraction, Axis, DiscreteSpectrum, Ensemble, ModeIndex, ScalingFit, SingleParticleSpectrum,
    ThermalState, TrapGeometry,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

/// Relative error against the oracle; structural zeros (no configuration
/// contributes) are compared absolutely, on the probability scale of one.
fn oracle_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        rel(got, want)
    }
}

/// Every occupation vector of `n` bosons over the modes, with its Boltzmann weight.
fn configurations(energies: &[f64], n: usize, beta: f64) -> Vec<(Vec<usize>, f64)> {
    fn fill(e: &[f64], left: usize, beta: f64, prefix: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if prefix.len() == e.len() - 1 {
            prefix.push(left);
            let energy: f64 = prefix.iter().zip(e).map(|(k, e)| *k as f64 * e).sum();
            out.push((prefix.clone(), (-beta * energy).exp()));
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(e, left - k, beta, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(energies, n, beta, &mut Vec::new(), &mut out);
    out
}

/// Deterministic spectra with 1..=12 levels: irregular spacings, repeated
/// values and a non-zero minimum for some.
fn injected_spectra() -> Vec<Vec<f64>> {
    let golden = 0.618_033_988_749_894_9;
    (1..=12)
        .flat_map(|len: usize| {
            let irregular: Vec<f64> = (0..len)
                .map(|i| {
                    if i == 0 {
                        0.0
                    } else {
                        3.0 * ((i as f64 * golden + 0.1 * len as f64) % 1.0)
                    }
                })
                .collect();
            let mut degenerate = irregular.clone();
            if len > 2 {
                degenerate[2] = degenerate[1];
            }
            let shifted: Vec<f64> = (0..len).map(|i| 0.4 + 0.5 * i as f64).collect();
            [irregular, degenerate, shifted]
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut cases = 0;
    let mut note = |err: f64, what: String| {
        if err > worst.0 {
            worst = (err, what);
        }
    };
    for energies in injected_spectra() {
        let spectrum = DiscreteSpectrum::new(energies.clone()).unwrap();
        for n in 1..=4 {
            for beta in [0.25, 1.0, 4.0] {
                cases += 1;
                let state = ThermalState::new(n, 1.0 / beta).unwrap();
                let table = build_partition_table(&spectrum, &state).unwrap();
                let configs = configurations(&energies, n, beta);
                let z: f64 = configs.iter().map(|c| c.1).sum();
                note(
                    oracle_err(table.ln_z()[n].exp(), z),
                    format!("Z_{n} of {energies:?} at beta {beta}"),
                );
                for nu in 0..energies.len() {
                    let mode = ModeIndex::new(&[nu as u32]).unwrap();
                    let dist = occupancy_distribution(&spectrum, &state, &mode, &table).unwrap();
                    let mut mean = 0.0;
                    for k in 0..=n {
                        let p: f64 = configs.iter().filter(|c| c.0[nu] == k).map(|c| c.1).sum::<f64>() / z;
                        mean += k as f64 * p;
                        note(
                            oracle_err(dist.probabilities[k], p),
                            format!("P_{nu}({k}|{n}) at beta {beta}"),
                        );
                    }
                    let got = mean_occupation(&spectrum, &state, &mode, &table).unwrap();
                    note(oracle_err(got, mean), format!("N_{nu} for N={n} at beta {beta}"));
                }
            }
        }
    }
    outcome(
        worst.0 <= 1e-12,
        format!(
            "{cases} spectrum/N/beta cases, worst relative error {:.2e} ({})",
            worst.0, worst.1
        ),
    )
}

fn criterion_2() -> Outcome {
    let n = 1000;
    let results: Vec<(usize, f64, f64)> = (1..=3usize)
        .into_par_iter()
        .flat_map(|d| {
            let g = TrapGeometry::isotropic(d).unwrap();
            let t_c = characteristic_temperature(&g, n as u64).unwrap();
            (1..=20)
                .into_par_iter()
                .map(move |i| {
                    let t = 1.2 * t_c * i as f64 / 20.0;
                    let state = ThermalState::new(n, t).unwrap();
                    let cutoff = g.default_cutoff(t, n as f64, 1e-12).unwrap();
                    let spec = occupation_spectrum(&g, &state, &cutoff).unwrap();
                    let total: f64 = spec.levels().iter().map(|l| l.degeneracy as f64 * l.occupation).sum();
                    (d, t, total)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    // the upper end allows summation round-off of 1e-12 relative
    let bad: Vec<String> = results
        .iter()
        .filter(|(_, _, s)| !(*s >= n as f64 * (1.0 - 1e-6) && *s <= n as f64 * (1.0 + 1e-12)))
        .map(|(d, t, s)| format!("{d}D T={t:.4}: {s:.15}"))
        .collect();
    let lowest = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let highest = results.iter().map(|r| r.2).fold(0.0, f64::max);
    outcome(
        bad.is_empty(),
        format!(
            "60 points, sum N_nu / N in [1 - {:.2e}, 1 + {:.2e}]{}",
            1.0 - lowest / n as f64,
            highest / n as f64 - 1.0,
            fmt_bad(&bad)
        ),
    )
}

fn fmt_bad(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; out of range: {}", bad.join("; "))
    }
}

fn canonical_sticking(d: usize, n: usize, c: f64) -> f64 {
    let g = TrapGeometry::isotropic(d).unwrap();
    let state = temperature_for_fraction(&g, n, c).unwrap();
    let table = build_partition_table(&g, &state).unwrap();
    let occ = leading_occupations(&g, &table, 2).unwrap();
    occ[1].1 / occ[0].1
}

fn criterion_3() -> Outcome {
    let c = 0.2;
    let sizes = [50usize, 100, 200, 400, 800, 1600];
    let gaps: Vec<Vec<f64>> = (1..=3usize)
        .into_par_iter()
        .map(|d| {
            sizes
                .par_iter()
                .map(|&n| {
                    let canonical = canonical_sticking(d, n, c);
                    let grand = closed_form_sticking(d, n as f64, c).unwrap();
                    (canonical - grand).abs() / canonical
                })
                .collect()
        })
        .collect();

    let grand_1d: Vec<f64> = (0..=150)
        .map(|i| closed_form_sticking(1, 10f64.powf(i as f64 / 10.0).max(2.0), c).unwrap())
        .collect();
    let min_1d = grand_1d.iter().copied().fold(f64::INFINITY, f64::min);
    let a = min_1d > 0.1;

    let mut b = true;
    let mut notes = Vec::new();
    for d in [2, 3] {
        let g = &gaps[d - 1];
        let at_cap = g[sizes.len() - 1] <= 0.05;
        let decreasing = g.windows(2).all(|w| w[1] < w[0]);
        if !at_cap || !decreasing {
            b = false;
        }
        let listing: Vec<String> = g.iter().map(|x| format!("{:.4}", x)).collect();
        notes.push(format!(
            "{d}D gaps [{}] (<=5% at 1600: {at_cap}, decreasing: {decreasing})",
            listing.join(", ")
        ));
    }
    let c_ok = gaps[0][5] > gaps[1][5];
    notes.push(format!("1D gap at 1600 {:.4} vs 2D {:.4}", gaps[0][5], gaps[1][5]));
    outcome(
        a && b && c_ok,
        format!(
            "(a) min 1D grand N1/N0 up to 1e15 = {min_1d:.4}: {}; (b) {}; (c) {}; {}",
            pass_word(a),
            pass_word(b),
            pass_word(c_ok),
            notes.join("; ")
        ),
    )
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn criterion_4() -> Outcome {
    let c = 0.2;
    let powers: Vec<f64> = (0..=8).map(|i| 10f64.powf(8.0 + 0.5 * i as f64)).collect();
    let slope = |d| match asymptotic_scaling_exponent(d, &powers, c).unwrap() {
        ScalingFit::PowerLaw { exponent, .. } => exponent,
        other => panic!("unexpected fit {other:?}"),
    };
    let (s2, s3) = (slope(2), slope(3));
    let decades: Vec<f64> = (10..=15).map(|k| 10f64.powi(k)).collect();
    let change = match asymptotic_scaling_exponent(1, &decades, c).unwrap() {
        ScalingFit::Logarithmic {
            max_change_per_decade, ..
        } => max_change_per_decade.exp() - 1.0,
        other => panic!("unexpected fit {other:?}"),
    };
    let ok2 = (s2 + 0.5).abs() <= 0.05;
    let ok3 = (s3 + 2.0 / 3.0).abs() <= 0.05;
    let ok1 = change < 0.10;
    outcome(
        ok1 && ok2 && ok3,
        format!(
            "2D slope {s2:.4} ({}), 3D slope {s3:.4} ({}), 1D (N1/N0) ln N max change {:.2}% per decade ({})",
            pass_word(ok2),
            pass_word(ok3),
            100.0 * change,
            pass_word(ok1)
        ),
    )
}

fn criterion_5() -> Outcome {
    // high-precision reference values at N = 1000, C = 0.2
    let oracle = [
        0.427_920_687_588_026_35,
        0.096_860_313_477_454_42,
        0.039_382_276_042_870_87,
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (i, &want) in oracle.iter().enumerate() {
        let got = closed_form_sticking(i + 1, 1000.0, 0.2).unwrap();
        let err = rel(got, want);
        ok &= err <= 1e-6;
        notes.push(format!("{}D {got:.10} (rel err {err:.1e})", i + 1));
    }
    outcome(ok, notes.join(", "))
}

fn criterion_6() -> Outcome {
    let sizes = [100usize, 200, 400, 800, 1600];
    let points: Vec<Vec<(f64, f64)>> = [1usize, 3]
        .par_iter()
        .map(|&d| {
            let g = TrapGeometry::isotropic(d).unwrap();
            sizes
                .par_iter()
                .map(|&n| {
                    let p = find_tph(&g, n, Ensemble::Canonical).unwrap();
                    (p.ground_fraction, p.t_over_tc)
                })
                .collect()
        })
        .collect();
    let (one, three) = (&points[0], &points[1]);
    let above_half = one.iter().all(|p| p.0 > 0.5);
    let below_1d = three.iter().zip(one).all(|(a, b)| a.0 < b.0);
    // fractional drop per doubling of N
    let drop = |v: &[(f64, f64)], i: usize| 1.0 - v[i + 1].0 / v[i].0;
    let faster = (0..sizes.len() - 1).all(|i| drop(three, i) > drop(one, i));
    let hotter = three.iter().zip(one).all(|(a, b)| a.1 > b.1);
    let fmt = |v: &[(f64, f64)]| {
        v.iter()
            .map(|p| format!("{:.3}/{:.3}", p.0, p.1))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        above_half && below_1d && faster && hotter,
        format!(
            "1D N0/N > 0.5: {}; 3D below 1D: {}; 3D decreasing faster: {}; T_ph/T_c 3D > 1D: {}; N0/N and T_ph/T_c 1D [{}] 3D [{}]",
            pass_word(above_half),
            pass_word(below_1d),
            pass_word(faster),
            pass_word(hotter),
            fmt(one),
            fmt(three)
        ),
    )
}

fn leading_ratios(g: &TrapGeometry, n: usize, c: f64) -> (f64, f64) {
    let state = temperature_for_fraction(g, n, c).unwrap();
    let table = build_partition_table(g, &state).unwrap();
    let occ = leading_occupations(g, &table, 3).unwrap();
    (occ[1].1 / occ[0].1, occ[2].1 / occ[0].1)
}

fn criterion_7() -> Outcome {
    let (n, c) = (1000, 0.4);
    let ratios: Vec<f64> = (0..=160).map(|i| 10f64.powf(-4.0 + 0.05 * i as f64)).collect();
    let curve: Vec<(f64, f64)> = ratios
        .par_iter()
        .map(|&r| leading_ratios(&TrapGeometry::axially_symmetric(1.0, r).unwrap(), n, c))
        .collect();
    let one_d = leading_ratios(&TrapGeometry::isotropic(1).unwrap(), n, c);
    let two_d = leading_ratios(&TrapGeometry::isotropic(2).unwrap(), n, c);

    let iso = curve[80];
    let degenerate = rel(iso.0, iso.1) <= 1e-10;
    let first = curve[0];
    let last = curve[160];
    let lim_1d = rel(first.0, one_d.0).max(rel(first.1, one_d.1));
    let lim_2d = rel(last.0, two_d.0).max(rel(last.1, two_d.1));
    let limits = lim_1d <= 0.02 && lim_2d <= 0.02;

    // a jump is a step larger than 5% of the curve's full scale
    let mut worst_jump = 0.0f64;
    let mut worst_local = 0.0f64;
    for series in [|p: &(f64, f64)| p.0, |p: &(f64, f64)| p.1] {
        let values: Vec<f64> = curve.iter().map(series).collect();
        let scale = values.iter().copied().fold(0.0, f64::max);
        for w in values.windows(2) {
            worst_jump = worst_jump.max((w[1] - w[0]).abs() / scale);
            worst_local = worst_local.max(rel(w[1], w[0]));
        }
    }
    let continuous = worst_jump <= 0.05;
    outcome(
        degenerate && limits && continuous,
        format!(
            "ratio 1: N1/N0 {:.12} vs N2/N0 {:.12} ({}); limits 1D {:.2e} 2D {:.2e} ({}); largest step {:.2}% of full scale, {:.2}% relative to the local value ({})",
            iso.0,
            iso.1,
            pass_word(degenerate),
            lim_1d,
            lim_2d,
            pass_word(limits),
            100.0 * worst_jump,
            100.0 * worst_local,
            pass_word(continuous)
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let ideal = 2.0 * 2f64.ln().sqrt();
    for d in [1usize, 3] {
        let g = TrapGeometry::isotropic(d).unwrap();
        let n = 1000;
        let t = 0.02;
        let state = ThermalState::new(n, t).unwrap();
        let cutoff = g.default_cutoff(t, n as f64, 1e-12).unwrap();
        let spec = occupation_spectrum(&g, &state, &cutoff).unwrap();
        let p = g1_profile_auto(&spec, &g, Axis::X).unwrap();
        let dev = p.g1.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let width_err = (p.cloud_width - ideal).abs();
        ok &= dev <= 1e-10 && width_err <= 1e-4;
        notes.push(format!(
            "{d}D N0/N = {:.15}: max |g1 - 1| {dev:.1e}, ground FWHM error {width_err:.1e}",
            spec.ground_occupation() / n as f64
        ));
    }

    let evaluations: Vec<(bool, bool)> = (1..=3usize)
        .into_par_iter()
        .flat_map(|d| {
            let g = TrapGeometry::isotropic(d).unwrap();
            let t_c = characteristic_temperature(&g, 1000).unwrap();
            (1..=12)
                .into_par_iter()
                .map(move |i| {
                    let t = 0.1 * i as f64 * t_c;
                    let state = ThermalState::new(1000, t).unwrap();
                    let cutoff = g.default_cutoff(t, 1000.0, 1e-12).unwrap();
                    let spec = occupation_spectrum(&g, &state, &cutoff).unwrap();
                    let p = g1_profile_auto(&spec, &g, Axis::X).unwrap();
                    let len = p.g1.len();
                    let even = (0..len).all(|k| p.g1[k] == p.g1[len - 1 - k]);
                    let bounded = p.g1.iter().all(|v| v.abs() <= 1.0);
                    (even, bounded)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let even = evaluations.iter().all(|e| e.0);
    let bounded = evaluations.iter().all(|e| e.1);
    ok &= even && bounded;
    notes.push(format!(
        "{} profiles over 0.1..1.2 T_c: even {}, |g1| <= 1 {}",
        evaluations.len(),
        pass_word(even),
        pass_word(bounded)
    ));
    outcome(ok, notes.join("; "))
}

fn run_cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_bosegas"))
        .args(args)
        .env("BOSE_THREADS", threads)
        .output()
        .expect("run bosegas");
    assert!(
        out.status.success(),
        "bosegas {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn criterion_9() -> Outcome {
    let recipes: [&[&str]; 3] = [
        &["sticking", "--dim", "3", "--natoms", "50:800:5", "--ensemble", "both"],
        &[
            "occupations",
            "--dim",
            "2",
            "--natoms",
            "400",
            "--t-over-tc",
            "0:1.2:24",
        ],
        &["aspect", "--aspect-ratio", "1e-2:1e2:9", "--natoms", "300"],
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for args in recipes {
        let a = run_cli(args, "4");
        let b = run_cli(args, "4");
        let serial = run_cli(args, "1");
        let same = a == b && a == serial && !a.is_empty();
        ok &= same;
        notes.push(format!("{} ({} bytes): {}", args[0], a.len(), pass_word(same)));
    }
    outcome(
        ok,
        format!("4-thread runs twice and a 1-thread run: {}", notes.join(", ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", criterion_1),
        ("normalization", criterion_2),
        ("sticking ratio vs N", criterion_3),
        ("asymptotic exponents", criterion_4),
        ("spot values", criterion_5),
        ("quasicondensation point", criterion_6),
        ("aspect-ratio sweep", criterion_7),
        ("coherence sanity", criterion_8),
        ("determinism", criterion_9),
    ];
    let results: Vec<(Outcome, f64)> = criteria
        .par_iter()
        .map(|(_, f)| {
            let start = Instant::now();
            let o = f();
            (o, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut failed = 0;
    for (i, ((name, _), (o, secs))) in criteria.iter().zip(&results).enumerate() {
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} [{secs:.1}s]: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
