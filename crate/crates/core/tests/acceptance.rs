//! Acceptance gate: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use gapcov::correction::{auto_triples_direct, auto_triples_fft, cross_triples_direct, cross_triples_fft};
use gapcov::harness::{
    identity_deviations, run_bias_experiment, run_rms_experiment, ExperimentConfig, ExperimentKind, ExperimentResult,
    IdentityDeviations, SYMMETRY_TOLERANCE,
};
use gapcov::simgen::{GapModelSpec, ProcessSpec};
use gapcov::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    identities: Vec<IdentityDeviations>,
}

type Criterion = (usize, &'static str, fn() -> Outcome);

#[allow(clippy::too_many_arguments)]
fn config(
    process: ProcessSpec,
    gaps: GapModelSpec,
    n: Vec<usize>,
    realizations: usize,
    window: LagWindow,
    cross: Option<LagWindow>,
    estimators: &[&str],
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        schema: 1,
        name: None,
        experiment: ExperimentKind::Bias,
        process,
        gaps,
        n_samples: n,
        n_realizations: realizations,
        window,
        cross_window: cross,
        estimators: estimators.iter().map(|s| s.to_string()).collect(),
        output_dir: None,
        base_seed: seed,
        lomb_scargle_alpha: None,
        condition_threshold: None,
    }
}

fn all_identities(result: &ExperimentResult) -> Vec<IdentityDeviations> {
    result
        .sizes
        .iter()
        .flat_map(|s| s.estimators.iter())
        .flat_map(|e| std::iter::once(e.auto.identities).chain(e.cross.as_ref().map(|c| c.identities)))
        .collect()
}

fn within(mean: f64, target: f64, se: f64, sigmas: f64) -> bool {
    (mean - target).abs() <= sigmas * se
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize, valid: f64) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < valid { 1.0 } else { 0.0 })
            .collect();
        if w.iter().sum::<f64>() >= 2.0 {
            return w;
        }
    }
}

fn criterion_1() -> Outcome {
    let c = config(
        ProcessSpec::moving_average(vec![1.0], 8.0, 4.0),
        GapModelSpec::none(),
        vec![100],
        100_000,
        LagWindow::single(0),
        None,
        &["valid_only_raw", "valid_only_corrected"],
        1,
    );
    let r = run_bias_experiment(&c).expect("experiment runs");
    let s = &r.sizes[0];
    let raw = &s.estimator("valid_only_raw").unwrap().auto.covariance;
    let fixed = &s.estimator("valid_only_corrected").unwrap().auto.covariance;
    let ok_raw = within(raw.mean[0], 3.96, raw.std_error[0], 4.0);
    let ok_fixed = within(fixed.mean[0], 4.0, fixed.std_error[0], 4.0);
    Outcome {
        pass: ok_raw && ok_fixed && r.wall_time_seconds < 60.0,
        detail: format!(
            "raw C0 {:.5} (target 3.96, se {:.5}), corrected {:.5} (target 4, se {:.5}), {:.1}s",
            raw.mean[0], raw.std_error[0], fixed.mean[0], fixed.std_error[0], r.wall_time_seconds
        ),
        identities: all_identities(&r),
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn matrix_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    rel_diff(a.as_slice(), b.as_slice())
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut identities = Vec::new();
    let mut done = 0;
    let mut mismatched_errors = 0;
    while done < 100 {
        let nx = rng.random_range(8..=512usize);
        let ny = if rng.random_bool(0.5) {
            nx
        } else {
            rng.random_range(8..=512usize)
        };
        let valid = rng.random_range(0.3..1.0);
        let wx = random_weights(&mut rng, nx, valid);
        let wy = random_weights(&mut rng, ny, valid);
        let zx: Vec<f64> = (0..nx).map(|_| rng.random_range(-5.0..5.0)).collect();
        let zy: Vec<f64> = (0..ny).map(|_| rng.random_range(-5.0..5.0)).collect();
        let x = GappySeries::new(zx, wx.clone(), 1.0).unwrap();
        let y = GappySeries::new(zy, wy.clone(), 1.0).unwrap();
        let reach = (nx.min(ny) / 4).max(1) as i64;
        let k1 = rng.random_range(-reach..=0);
        let k2 = rng.random_range(0..=reach);
        let window = LagWindow::new(k1, k2).unwrap();
        let auto = (autocovariance_direct(&x, window), autocovariance_fft(&x, window));
        let cross = (
            crosscovariance_direct(&x, &y, window),
            crosscovariance_fft(&x, &y, window),
        );
        for pair in [auto, cross] {
            match pair {
                (Ok(a), Ok(b)) => {
                    worst = worst
                        .max(rel_diff(a.values(), b.values()))
                        .max(rel_diff(a.pair_weights(), b.pair_weights()));
                    for est in [&a, &b] {
                        let s = covariance_to_spectrum(est);
                        identities.push(identity_deviations(est.values(), &s, est.kind() == EstimateKind::Auto));
                    }
                }
                (Err(a), Err(b)) if a.code() == b.code() => {}
                _ => mismatched_errors += 1,
            }
        }
        let ta = (auto_triples_direct(&wx, window), auto_triples_fft(&wx, window));
        let tc = (
            cross_triples_direct(&wx, &wy, window),
            cross_triples_fft(&wx, &wy, window),
        );
        for (d, f) in [ta, tc] {
            worst = worst.max(matrix_diff(&d.g, &f.g)).max(matrix_diff(&d.h, &f.h));
        }
        done += 1;
    }
    Outcome {
        pass: worst <= 1e-10 && mismatched_errors == 0,
        detail: format!("100 instances, max relative difference {worst:.2e}, error mismatches {mismatched_errors}"),
        identities,
    }
}

/// Expectation of the mean-subtracted, pair-normalised estimate computed
/// straight from its definition, with `E[x_a y_b] = gamma(b - a)`.
fn brute_expectation(wx: &[f64], wy: &[f64], window: LagWindow, gamma: &dyn Fn(i64) -> f64) -> Vec<f64> {
    let dx: f64 = wx.iter().sum();
    let dy: f64 = wy.iter().sum();
    let (nx, ny) = (wx.len() as i64, wy.len() as i64);
    let mut both = 0.0;
    for j in 0..nx {
        for m in 0..ny {
            both += wx[j as usize] * wy[m as usize] * gamma(m - j);
        }
    }
    both /= dx * dy;
    window
        .lags()
        .map(|k| {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..nx {
                let l = i + k;
                if l < 0 || l >= ny {
                    continue;
                }
                let p = wx[i as usize] * wy[l as usize];
                if p == 0.0 {
                    continue;
                }
                let mut ymean = 0.0;
                for m in 0..ny {
                    ymean += wy[m as usize] * gamma(m - i);
                }
                let mut xmean = 0.0;
                for j in 0..nx {
                    xmean += wx[j as usize] * gamma(l - j);
                }
                num += p * (gamma(l - i) - ymean / dy - xmean / dx + both);
                den += p;
            }
            num / den
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 64;
    let mut worst = 0.0f64;
    let mut route_worst = 0.0f64;
    let mut count = 0;
    while count < 20 {
        let valid = rng.random_range(0.4..0.95);
        let wx = random_weights(&mut rng, n, valid);
        let wy = random_weights(&mut rng, n, valid);

        // auto: symmetric window, even gamma
        let m = rng.random_range(0..=10i64);
        let window = LagWindow::new(-m, m).unwrap();
        let half: Vec<f64> = (0..=m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = |k: i64| {
            if k.abs() <= m {
                half[k.unsigned_abs() as usize]
            } else {
                0.0
            }
        };
        let gamma: Vec<f64> = window.lags().map(g).collect();
        let Ok(a) = build_auto_matrix(&wx, window) else {
            continue;
        };
        let predicted = predict_expected_covariance(&a, &gamma).unwrap();
        let brute = brute_expectation(&wx, &wx, window, &g);
        let bias_route = expected_auto_covariance(&wx, window, &gamma).unwrap();
        let scale = gamma.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        worst = worst.max(max_abs_diff(&predicted, &brute) / scale);
        route_worst = route_worst.max(max_abs_diff(&predicted, &bias_route) / scale);

        // cross: any window up to 21 lags
        let k1 = rng.random_range(-15..=5i64);
        let k2 = k1 + rng.random_range(0..=20i64);
        let window = LagWindow::new(k1, k2).unwrap();
        let vals: Vec<f64> = window.lags().map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = |k: i64| window.index_of(k).map_or(0.0, |i| vals[i]);
        let Ok(a) = build_cross_matrix(&wx, &wy, window) else {
            continue;
        };
        let predicted = predict_expected_covariance(&a, &vals).unwrap();
        let brute = brute_expectation(&wx, &wy, window, &g);
        let bias_route = expected_cross_covariance(&wx, &wy, window, &vals).unwrap();
        let scale = vals.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        worst = worst.max(max_abs_diff(&predicted, &brute) / scale);
        route_worst = route_worst.max(max_abs_diff(&predicted, &bias_route) / scale);
        count += 1;
    }
    Outcome {
        pass: worst <= 1e-10 && route_worst <= 1e-10,
        detail: format!("20 patterns, matrix vs brute force {worst:.2e}, matrix vs bias expression {route_worst:.2e}"),
        identities: Vec::new(),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_4() -> Outcome {
    let c = config(
        ProcessSpec::benchmark(),
        GapModelSpec::markov(0.1),
        vec![100],
        1000,
        LagWindow::new(-25, 24).unwrap(),
        Some(LagWindow::new(-20, 29).unwrap()),
        &["valid_only_raw", "valid_only_corrected"],
        4,
    );
    let r = run_bias_experiment(&c).expect("experiment runs");
    let s = &r.sizes[0];
    let raw = s.estimator("valid_only_raw").unwrap();
    let fixed = s.estimator("valid_only_corrected").unwrap();
    let mut worst_fixed = 0.0f64;
    let mut worst_resid = 0.0f64;
    let mut offset = 0.0f64;
    for (ch_fixed, ch_raw, truth) in [
        (&fixed.auto, &raw.auto, &s.auto_truth.covariance),
        (
            fixed.cross.as_ref().unwrap(),
            raw.cross.as_ref().unwrap(),
            &s.cross_truth.as_ref().unwrap().covariance,
        ),
    ] {
        let c = &ch_fixed.covariance;
        for ((m, se), t) in c.mean.iter().zip(&c.std_error).zip(truth.iter()) {
            worst_fixed = worst_fixed.max((m - t).abs() / se);
        }
        let res = ch_raw.residual.as_ref().unwrap();
        for (i, t) in truth.iter().enumerate() {
            worst_resid = worst_resid.max(res.mean[i].abs() / res.std_error[i]);
            offset = offset.max(((ch_raw.covariance.mean[i] - t) / ch_raw.covariance.std_error[i]).abs());
        }
    }
    let excluded = fixed.auto.excluded + raw.auto.excluded;
    Outcome {
        pass: worst_fixed <= 4.0 && worst_resid <= 4.0 && r.wall_time_seconds < 300.0,
        detail: format!(
            "corrected max |mean-truth|/se {worst_fixed:.2}, raw minus forward map max {worst_resid:.2} se, raw offset up to {offset:.1} se, excluded {excluded}, {:.1}s",
            r.wall_time_seconds
        ),
        identities: all_identities(&r),
    }
}

fn criterion_5() -> Outcome {
    let mut c = config(
        ProcessSpec::benchmark(),
        GapModelSpec::bernoulli(0.5),
        vec![100],
        1000,
        LagWindow::new(-25, 24).unwrap(),
        None,
        &["lomb_scargle_raw", "lomb_scargle_corrected"],
        5,
    );
    c.lomb_scargle_alpha = Some(0.5);
    let r = run_bias_experiment(&c).expect("experiment runs");
    let s = &r.sizes[0];
    let raw = &s.estimator("lomb_scargle_raw").unwrap().auto.spectrum;
    let fixed = &s.estimator("lomb_scargle_corrected").unwrap().auto.spectrum;
    let truth = &s.auto_truth.spectrum;
    let zero = truth.len() / 2;
    let (mut worst_raw, mut worst_fixed, mut mean_offset) = (0.0f64, 0.0f64, 0.0);
    for i in (0..truth.len()).filter(|&i| i != zero) {
        // every realization subtracts its own constant, so the mean offset is
        // the difference of the two means
        let offset = raw.mean[i].re - fixed.mean[i].re;
        mean_offset += offset / (truth.len() - 1) as f64;
        worst_raw = worst_raw.max((raw.mean[i].re - truth[i].re - offset).abs() / raw.std_error_re[i]);
        worst_fixed = worst_fixed.max((fixed.mean[i].re - truth[i].re).abs() / fixed.std_error_re[i]);
    }
    Outcome {
        pass: worst_raw <= 4.0 && worst_fixed <= 4.0 && r.wall_time_seconds < 300.0,
        detail: format!(
            "mean offset {mean_offset:.3}, raw minus offset vs truth max {worst_raw:.2} se, corrected vs truth max {worst_fixed:.2} se, {:.1}s",
            r.wall_time_seconds
        ),
        identities: all_identities(&r),
    }
}

fn criterion_6() -> Outcome {
    let mut c = config(
        ProcessSpec::benchmark(),
        GapModelSpec::markov(0.1),
        vec![100, 10_000],
        1000,
        LagWindow::new(-25, 24).unwrap(),
        None,
        &["valid_only_corrected", "sample_and_hold"],
        6,
    );
    c.experiment = ExperimentKind::Rms;
    let r = run_rms_experiment(&c).expect("experiment runs");
    let small = r.size(100).unwrap();
    let large = r.size(10_000).unwrap();
    let zero = small.auto_truth.window.index_of(0).unwrap();
    let lag0 = |s: &gapcov::harness::SizeResult| s.estimator("valid_only_corrected").unwrap().auto.covariance.rms[zero];
    let ratio_fixed = lag0(small) / lag0(large);
    let freqs = &small.auto_truth.frequencies;
    let band = |s: &gapcov::harness::SizeResult| {
        let rms = &s.estimator("sample_and_hold").unwrap().auto.spectrum.rms;
        let sel: Vec<f64> = freqs
            .iter()
            .zip(rms)
            .filter(|(f, _)| f.abs() >= 0.4)
            .map(|(_, r)| r * r)
            .collect();
        (sel.iter().sum::<f64>() / sel.len() as f64).sqrt()
    };
    let ratio_hold = band(small) / band(large);
    Outcome {
        pass: (5.0..=20.0).contains(&ratio_fixed) && ratio_hold < 2.0 && r.wall_time_seconds < 900.0,
        detail: format!(
            "corrected lag-0 RMS ratio {ratio_fixed:.2}, sample-and-hold top-band RMS ratio {ratio_hold:.2}, {:.1}s",
            r.wall_time_seconds
        ),
        identities: all_identities(&r),
    }
}

fn criterion_7(collected: &[(usize, Vec<IdentityDeviations>)]) -> Outcome {
    // Symmetric-window run so reality is also checked on the corrected estimator.
    let c = config(
        ProcessSpec::benchmark(),
        GapModelSpec::markov(0.1),
        vec![100],
        200,
        LagWindow::new(-24, 24).unwrap(),
        None,
        &[
            "valid_only_raw",
            "valid_only_corrected",
            "sample_and_hold",
            "lomb_scargle_raw",
            "lomb_scargle_corrected",
        ],
        7,
    );
    let r = run_bias_experiment(&c).expect("experiment runs");
    let symmetric_run = all_identities(&r);
    let corrected_symmetric = r.sizes[0]
        .estimator("valid_only_corrected")
        .unwrap()
        .auto
        .identities
        .asymmetry
        <= SYMMETRY_TOLERANCE;
    let mut worst = IdentityDeviations::default();
    let mut total = 0;
    let mut real_checked = 0;
    let all = collected.iter().flat_map(|(_, v)| v.iter()).chain(symmetric_run.iter());
    for d in all {
        worst.zero_frequency = worst.zero_frequency.max(d.zero_frequency);
        worst.round_trip = worst.round_trip.max(d.round_trip);
        if let Some(im) = d.reality() {
            worst.imaginary = worst.imaginary.max(im);
            real_checked += 1;
        }
        total += 1;
    }
    let covered: Vec<String> = collected
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(c, _)| c.to_string())
        .collect();
    Outcome {
        pass: worst.max() <= 1e-12 && total > 0 && corrected_symmetric,
        detail: format!(
            "{total} summaries from criteria {} plus a symmetric-window run: zero-frequency {:.1e}, round trip {:.1e}, \
             imaginary {:.1e} over {real_checked} symmetric estimates, corrected symmetric on symmetric window: {corrected_symmetric}",
            covered.join(","),
            worst.zero_frequency,
            worst.round_trip,
            worst.imaginary
        ),
        identities: Vec::new(),
    }
}

fn expect_code<T>(label: &str, got: Result<T>, code: &str, misses: &mut Vec<String>) {
    match got {
        Err(e) if e.code() == code => {}
        Err(e) => misses.push(format!("{label}: got {}", e.code())),
        Ok(_) => misses.push(format!("{label}: no error")),
    }
}

fn criterion_8() -> Outcome {
    let mut misses = Vec::new();
    let run = catch_unwind(AssertUnwindSafe(|| {
        let m = &mut misses;
        expect_code(
            "all-invalid",
            GappySeries::new(vec![1.0, 2.0], vec![0.0, 0.0], 1.0),
            "all-invalid",
            m,
        );
        expect_code("empty", GappySeries::new(vec![], vec![], 1.0), "empty", m);
        expect_code(
            "negative weight",
            GappySeries::new(vec![1.0], vec![-1.0], 1.0),
            "negative-weight",
            m,
        );
        expect_code(
            "non-binary",
            GappySeries::binary(vec![1.0], vec![0.5], 1.0),
            "non-binary-weight",
            m,
        );
        expect_code(
            "length",
            GappySeries::new(vec![1.0], vec![1.0, 1.0], 1.0),
            "length-mismatch",
            m,
        );
        expect_code("dt", GappySeries::fully_valid(vec![1.0], 0.0), "non-positive-dt", m);
        expect_code(
            "nan",
            GappySeries::fully_valid(vec![f64::NAN], 1.0),
            "non-finite-value",
            m,
        );
        expect_code("window order", LagWindow::new(3, 1), "invalid-window", m);
        expect_code("window parse", "x:1".parse::<LagWindow>(), "config", m);

        let holes = GappySeries::new(vec![1.0, 0.0, 3.0, 0.0, 5.0], vec![1.0, 0.0, 1.0, 0.0, 1.0], 1.0).unwrap();
        let w = LagWindow::new(-1, 1).unwrap();
        expect_code(
            "coverage direct",
            autocovariance_direct(&holes, w),
            "insufficient-pair-coverage",
            m,
        );
        expect_code(
            "coverage fft",
            autocovariance_fft(&holes, w),
            "insufficient-pair-coverage",
            m,
        );
        expect_code(
            "coverage cross",
            crosscovariance_fft(&holes, &holes, w),
            "insufficient-pair-coverage",
            m,
        );
        expect_code(
            "coverage matrix",
            build_auto_matrix(holes.weights(), w),
            "insufficient-pair-coverage",
            m,
        );
        expect_code(
            "estimable",
            autocovariance_fft(&holes, LagWindow::new(-5, 0).unwrap()),
            "window-out-of-range",
            m,
        );

        let s = GappySeries::fully_valid((0..12).map(|i| ((i * i) % 7) as f64).collect(), 1.0).unwrap();
        let full = LagWindow::new(-11, 11).unwrap();
        expect_code(
            "singular auto",
            build_auto_matrix(s.weights(), full),
            "singular-window",
            m,
        );
        expect_code(
            "singular cross",
            build_cross_matrix(s.weights(), s.weights(), full),
            "singular-window",
            m,
        );
        let w = LagWindow::new(-2, 2).unwrap();
        let raw = autocovariance_fft(&s, w).unwrap();
        let other = build_auto_matrix(&[1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], w).unwrap();
        let opts = CorrectionOptions::default();
        expect_code(
            "fingerprint",
            correct_covariance(&raw, &other, &opts),
            "fingerprint-mismatch",
            m,
        );
        let narrow = build_auto_matrix(s.weights(), LagWindow::new(-1, 1).unwrap()).unwrap();
        expect_code(
            "window mismatch",
            correct_covariance(&raw, &narrow, &opts),
            "window-mismatch",
            m,
        );
        let cross_m = build_cross_matrix(s.weights(), s.weights(), w).unwrap();
        expect_code("kind", correct_covariance(&raw, &cross_m, &opts), "kind-mismatch", m);
        let own = build_auto_matrix(s.weights(), w).unwrap();
        let tight = CorrectionOptions {
            condition_threshold: 1.0,
        };
        expect_code(
            "condition",
            correct_covariance(&raw, &own, &tight),
            "ill-conditioned",
            m,
        );
        expect_code(
            "prediction size",
            predict_expected_covariance(&own, &[1.0]),
            "dimension-mismatch",
            m,
        );
        expect_code(
            "mean variance",
            mean_estimator_variance(s.weights(), w, &[0.0; 5], false),
            "window-too-narrow",
            m,
        );
        let fixed = correct_covariance(&raw, &own, &opts).unwrap().estimate;
        expect_code(
            "moments fingerprint",
            corrected_variance(&holes, &fixed),
            "fingerprint-mismatch",
            m,
        );

        expect_code(
            "spectrum size",
            spectrum::spectrum_from_values(w, 1.0, EstimateKind::Auto, vec![Complex64::new(0.0, 0.0); 2]),
            "dimension-mismatch",
            m,
        );
        let lone = GappySeries::new(vec![1.0, 2.0], vec![1.0, 0.0], 1.0).unwrap();
        expect_code("ls samples", lomb_scargle(&lone, &[0.1]), "too-few-valid-samples", m);
        expect_code("ls zero", lomb_scargle(&s, &[0.0]), "invalid-frequency", m);
        let ls = lomb_scargle(&s, &[0.1]).unwrap();
        expect_code(
            "ls alpha",
            lomb_scargle_offset_correct(&ls, &s, Some(0.0)),
            "alpha-out-of-range",
            m,
        );
        let once = lomb_scargle_offset_correct(&ls, &s, None).unwrap();
        expect_code(
            "ls twice",
            lomb_scargle_offset_correct(&once, &s, None),
            "already-corrected",
            m,
        );

        use gapcov::simgen::*;
        expect_code(
            "short",
            generate_pair(&ProcessSpec::benchmark(), 20),
            "series-too-short",
            m,
        );
        expect_code(
            "probability",
            apply_gaps(&s, &GapModelSpec::markov(2.0)),
            "invalid-probability",
            m,
        );
        expect_code(
            "gap kind",
            apply_gaps(
                &s,
                &GapModelSpec {
                    kind: "x".into(),
                    ..GapModelSpec::none()
                },
            ),
            "unknown-name",
            m,
        );
        expect_code(
            "nothing left",
            apply_gaps(&s, &GapModelSpec::bernoulli(0.0)),
            "all-invalid",
            m,
        );
        expect_code(
            "mask",
            apply_gaps(&s, &GapModelSpec::static_mask(vec![1.0])),
            "dimension-mismatch",
            m,
        );
        expect_code(
            "ar",
            generate_pair(&ProcessSpec::autoregressive(vec![1.1], 0.0, 1.0), 50),
            "invalid-process",
            m,
        );
        let unknown = ProcessSpec {
            kind: "arma".into(),
            ..ProcessSpec::benchmark()
        };
        expect_code("process kind", generate_pair(&unknown, 50), "unknown-name", m);

        expect_code("csv", io::read_series("0,1,1\n1,x,1\n".as_bytes(), 1.0), "parse", m);
        expect_code(
            "missing file",
            io::read_series_file("/nonexistent/series.csv", 1.0),
            "io",
            m,
        );
        expect_code("json", ExperimentConfig::from_json("{"), "json", m);
        let mut bad = config(
            ProcessSpec::benchmark(),
            GapModelSpec::none(),
            vec![100],
            1,
            LagWindow::single(0),
            None,
            &["valid_only_raw"],
            0,
        );
        bad.schema = 7;
        expect_code("schema", ExperimentConfig::from_json(&bad.to_json()), "config", m);
        bad.schema = 1;
        bad.estimators = vec!["kalman".into()];
        expect_code(
            "estimator",
            ExperimentConfig::from_json(&bad.to_json()),
            "unknown-name",
            m,
        );
        bad.estimators = vec!["valid_only_raw".into()];
        expect_code("rms sizes", run_rms_experiment(&bad), "config", m);
    }));
    let panicked = run.is_err();
    Outcome {
        pass: misses.is_empty() && !panicked,
        detail: if panicked {
            "panicked".to_string()
        } else if misses.is_empty() {
            "every error case returned its named error".to_string()
        } else {
            misses.join("; ")
        },
        identities: Vec::new(),
    }
}

fn main() {
    let mut failed = 0;
    let mut collected = Vec::new();
    let mut report = |id: usize, name: &str, o: Outcome, secs: f64| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id} ({name}): {} [{secs:.1}s]", o.detail);
        if !o.pass {
            failed += 1;
        }
        o.identities
    };
    let criteria: [Criterion; 6] = [
        (1, "closed-form Bessel factor", criterion_1),
        (2, "direct and FFT routes agree", criterion_2),
        (3, "forward map equals brute-force expectation", criterion_3),
        (4, "bias-free correction under correlated gaps", criterion_4),
        (5, "Lomb-Scargle offset", criterion_5),
        (6, "consistency and RMS floors", criterion_6),
    ];
    let only: Option<Vec<usize>> = std::env::var("GAPCOV_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |id: usize| only.as_ref().is_none_or(|o| o.contains(&id));
    for (id, name, f) in criteria {
        if !wanted(id) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let ids = report(id, name, o, t.elapsed().as_secs_f64());
        collected.push((id, ids));
    }
    if wanted(7) {
        let t = Instant::now();
        let o = criterion_7(&collected);
        report(7, "spectrum identities on every estimate", o, t.elapsed().as_secs_f64());
    }
    if wanted(8) {
        let t = Instant::now();
        let o = criterion_8();
        report(8, "degenerate inputs return named errors", o, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
