//! Brute-force and hand-evaluated oracles against the public API.

use gapcov::baselines::sample_and_hold;
use gapcov::correction::{auto_triples_direct, auto_triples_fft, cross_triples_direct, cross_triples_fft};
use gapcov::covariance::pair_counts_all;
use gapcov::simgen::{benchmark_kernel, generate_pair, ProcessSpec, ProcessTruth};
use gapcov::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn at(w: &[f64], i: i64) -> f64 {
    if i < 0 || i as usize >= w.len() {
        0.0
    } else {
        w[i as usize]
    }
}

fn brute_g(a: &[f64], b: &[f64], k: i64, j: i64) -> f64 {
    (0..a.len() as i64)
        .map(|i| at(a, i) * at(b, i + j) * at(b, i + k))
        .sum()
}

fn brute_h(a: &[f64], b: &[f64], k: i64, j: i64) -> f64 {
    (0..a.len() as i64)
        .map(|i| at(a, i) * at(b, i + j) * at(a, i + j - k))
        .sum()
}

fn soft_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random::<f64>() * 2.0
            }
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn auto_triples_match_brute_force_for_real_valued_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [5usize, 17, 40] {
        let w = soft_weights(&mut rng, n);
        let window = LagWindow::new(-(n as i64) / 3, n as i64 / 3).unwrap();
        for t in [auto_triples_direct(&w, window), auto_triples_fft(&w, window)] {
            for (r, k) in window.lags().enumerate() {
                for (c, j) in window.lags().enumerate() {
                    assert!(close(t.g[(r, c)], brute_g(&w, &w, k, j), 1e-12), "G n={n} k={k} j={j}");
                    assert!(close(t.h[(r, c)], brute_h(&w, &w, k, j), 1e-12), "H n={n} k={k} j={j}");
                }
            }
        }
    }
}

#[test]
fn cross_triples_match_brute_force_for_unequal_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let wx = soft_weights(&mut rng, 23);
    let wy = soft_weights(&mut rng, 31);
    let window = LagWindow::new(-9, 14).unwrap();
    for t in [
        cross_triples_direct(&wx, &wy, window),
        cross_triples_fft(&wx, &wy, window),
    ] {
        for (r, k) in window.lags().enumerate() {
            for (c, j) in window.lags().enumerate() {
                assert!(close(t.g[(r, c)], brute_g(&wx, &wy, k, j), 1e-12), "G k={k} j={j}");
                let h: f64 = (0..wx.len() as i64)
                    .map(|i| at(&wx, i) * at(&wy, i + j) * at(&wx, i + j - k))
                    .sum();
                assert!(close(t.h[(r, c)], h, 1e-12), "H k={k} j={j}");
            }
        }
    }
}

#[test]
fn all_valid_triples_have_the_closed_form() {
    for n in [4usize, 9, 64] {
        let w = vec![1.0; n];
        let m = n as i64 / 2;
        let window = LagWindow::new(-m, m - 1).unwrap();
        let t = auto_triples_direct(&w, window);
        for (r, k) in window.lags().enumerate() {
            for (c, j) in window.lags().enumerate() {
                let expect = n as i64 - 0.max(j).max(k) + 0.min(j).min(k);
                assert_eq!(t.g[(r, c)], expect.max(0) as f64, "n={n} k={k} j={j}");
            }
        }
    }
}

#[test]
fn pair_counts_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let w = soft_weights(&mut rng, 29);
    let counts = pair_counts_all(&w);
    let n = w.len() as i64;
    assert_eq!(counts.len(), 2 * w.len() - 1);
    for (idx, k) in (-(n - 1)..n).enumerate() {
        let brute: f64 = (0..n).map(|i| at(&w, i) * at(&w, i + k)).sum();
        assert!(close(counts[idx], brute, 1e-12), "k={k}");
    }
    let d: f64 = w.iter().sum();
    assert!(close(counts.iter().sum(), d * d, 1e-12));
}

#[test]
fn matrix_hand_examples() {
    let m = build_auto_matrix(&[1.0; 4], LagWindow::new(-1, 1).unwrap()).unwrap();
    assert!(close(m.entry(0, 0).unwrap(), 0.75, 1e-15));
    let m = build_auto_matrix(&[1.0, 0.0, 0.0, 1.0], LagWindow::single(0)).unwrap();
    assert!(close(m.entry(0, 0).unwrap(), 0.5, 1e-15));
    let m = build_cross_matrix(&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], LagWindow::single(0)).unwrap();
    assert!(close(m.entry(0, 0).unwrap(), 0.25, 1e-15));
    for n in [2usize, 7, 33, 64] {
        let w = vec![1.0; n];
        let expect = 1.0 - 1.0 / n as f64;
        let m = build_auto_matrix(&w, LagWindow::single(0)).unwrap();
        assert!(close(m.entry(0, 0).unwrap(), expect, 1e-14), "auto n={n}");
        let m = build_cross_matrix(&w, &w, LagWindow::single(0)).unwrap();
        assert!(close(m.entry(0, 0).unwrap(), expect, 1e-14), "cross n={n}");
    }
}

#[test]
fn cross_matrix_of_identical_weights_is_auto_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let w: Vec<f64> = (0..60)
        .map(|_| if rng.random::<f64>() < 0.6 { 1.0 } else { 0.0 })
        .collect();
    let window = LagWindow::new(-6, 6).unwrap();
    let a = build_auto_matrix(&w, window).unwrap();
    let c = build_cross_matrix(&w, &w, window).unwrap();
    assert!((a.entries() - c.entries()).abs().max() <= 1e-14);
}

#[test]
fn moment_and_covariance_hand_examples() {
    let s = GappySeries::new(vec![1.0, 2.0, 3.0, 100.0], vec![1.0, 1.0, 1.0, 0.0], 1.0).unwrap();
    assert_eq!(weighted_mean(&s), 2.0);
    let s = GappySeries::new(vec![1.0, 2.0, 3.0, 999.0], vec![1.0, 1.0, 1.0, 0.0], 1.0).unwrap();
    assert!(close(weighted_variance(&s), 2.0 / 3.0, 1e-15));
    let s = GappySeries::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 0.0, 1.0, 1.0], 1.0).unwrap();
    let c = autocovariance_direct(&s, LagWindow::single(1)).unwrap();
    assert!(close(c.values()[0], 4.0 / 9.0, 1e-15));
    let x = GappySeries::fully_valid(vec![1.0, 2.0], 1.0).unwrap();
    let y = GappySeries::fully_valid(vec![10.0, 20.0], 1.0).unwrap();
    let c = crosscovariance_direct(&x, &y, LagWindow::single(0)).unwrap();
    assert!(close(c.values()[0], 2.5, 1e-15));
}

#[test]
fn bessel_example_from_three_samples() {
    let s = GappySeries::fully_valid(vec![1.0, 2.0, 3.0], 1.0).unwrap();
    let window = LagWindow::single(0);
    let raw = autocovariance_direct(&s, window).unwrap();
    let m = build_auto_matrix(s.weights(), window).unwrap();
    let fixed = correct_covariance(&raw, &m, &CorrectionOptions::default()).unwrap();
    assert!(close(fixed.estimate.values()[0], 1.0, 1e-14));
    let summary = corrected_variance(&s, &fixed.estimate).unwrap();
    assert!(close(summary.raw_variance, 2.0 / 3.0, 1e-14));
    assert!(close(summary.corrected_variance, 1.0, 1e-14));
}

#[test]
fn mean_variance_of_white_noise_on_alternate_samples() {
    let window = LagWindow::new(-3, 3).unwrap();
    let gamma: Vec<f64> = window.lags().map(|k| if k == 0 { 4.0 } else { 0.0 }).collect();
    let v = mean_estimator_variance(&[1.0, 0.0, 1.0, 0.0], window, &gamma, false).unwrap();
    assert!(close(v, 2.0, 1e-15));
}

#[test]
fn fft_route_matches_direct_on_non_power_of_two_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 257;
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0 - 3.0).collect();
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.7 { 1.0 } else { 0.0 })
        .collect();
    let s = GappySeries::new(z, w, 1.0).unwrap();
    let window = LagWindow::new(-40, 40).unwrap();
    let d = autocovariance_direct(&s, window).unwrap();
    let f = autocovariance_fft(&s, window).unwrap();
    let cmax = d.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in d.values().iter().zip(f.values()) {
        assert!((a - b).abs() <= 1e-10 * cmax);
    }
}

#[test]
fn delayed_copy_peaks_at_the_delay() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for d in [0usize, 3, 7] {
        let base: Vec<f64> = (0..120).map(|_| rng.random::<f64>() - 0.5).collect();
        let x = GappySeries::fully_valid(base[10..110].to_vec(), 1.0).unwrap();
        let y = GappySeries::fully_valid(base[10 - d..110 - d].to_vec(), 1.0).unwrap();
        let window = LagWindow::new(-10, 10).unwrap();
        let c = crosscovariance_direct(&x, &y, window).unwrap();
        let (best, _) = c
            .lags()
            .zip(c.values())
            .fold((0, f64::MIN), |acc, (k, v)| if *v > acc.1 { (k, *v) } else { acc });
        assert_eq!(best, d as i64);
    }
}

#[test]
fn swapping_arguments_mirrors_lags() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mk = |rng: &mut ChaCha8Rng, n: usize| {
        let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.8 { 1.0 } else { 0.0 })
            .collect();
        GappySeries::new(z, w, 1.0).unwrap()
    };
    let x = mk(&mut rng, 30);
    let y = mk(&mut rng, 30);
    let window = LagWindow::new(-5, 5).unwrap();
    let xy = crosscovariance_direct(&x, &y, window).unwrap();
    let yx = crosscovariance_direct(&y, &x, window).unwrap();
    for k in window.lags() {
        assert!(close(xy.value_at(k).unwrap(), yx.value_at(-k).unwrap(), 1e-14), "k={k}");
    }
}

#[test]
fn expected_covariance_matches_definitional_double_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let n = 12usize;
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.7 { 1.0 } else { 0.0 })
        .collect();
    let window = LagWindow::new(-4, 4).unwrap();
    let gamma: Vec<f64> = window
        .lags()
        .map(|k| (-(k.abs() as f64) / 2.0).exp() * (1.0 + 0.3 * (k * k) as f64).recip())
        .collect();
    let g = |k: i64| window.index_of(k).map_or(0.0, |i| gamma[i]);
    let d: f64 = w.iter().sum();
    // E[(z_i - zbar)(z_{i+k} - zbar)] expanded with zbar = sum w_j z_j / D.
    let brute: Vec<f64> = window
        .lags()
        .map(|k| {
            let mut num = 0.0;
            let mut wk = 0.0;
            for i in 0..n as i64 {
                let (a, b) = (at(&w, i), at(&w, i + k));
                if a * b == 0.0 {
                    continue;
                }
                let mut e = g(k);
                for j in 0..n as i64 {
                    e -= at(&w, j) * (g(j - i) + g(j - i - k)) / d;
                    for l in 0..n as i64 {
                        e += at(&w, j) * at(&w, l) * g(l - j) / (d * d);
                    }
                }
                num += a * b * e;
                wk += a * b;
            }
            num / wk
        })
        .collect();
    let m = build_auto_matrix(&w, window).unwrap();
    let via_matrix = predict_expected_covariance(&m, &gamma).unwrap();
    let via_bias = expected_auto_covariance(&w, window, &gamma).unwrap();
    for i in 0..window.len() {
        assert!(close(via_matrix[i], brute[i], 1e-12), "matrix lag index {i}");
        assert!(close(via_bias[i], brute[i], 1e-12), "bias lag index {i}");
    }
}

#[test]
fn cosine_covariance_gives_spectral_lines() {
    let k = 16usize;
    let window = LagWindow::new(-8, 7).unwrap();
    let m = 3;
    let c = 2.5;
    let dt = 0.5;
    let values: Vec<f64> = window
        .lags()
        .map(|l| c * (2.0 * std::f64::consts::PI * (l * m) as f64 / k as f64).cos())
        .collect();
    let cov = CovarianceEstimate::new(
        window,
        values,
        vec![1.0; k],
        dt,
        EstimateKind::Auto,
        Fingerprint::of_weights(&[]),
    )
    .unwrap();
    let spec = covariance_to_spectrum(&cov);
    let fm = m as f64 / (k as f64 * dt);
    for (f, s) in spec.frequencies().iter().zip(spec.values()) {
        let expect = if (f.abs() - fm).abs() < 1e-12 {
            c * k as f64 * dt / 2.0
        } else {
            0.0
        };
        assert!((s.re - expect).abs() < 1e-12 && s.im.abs() < 1e-12, "f={f}");
    }
}

#[test]
fn lomb_scargle_matches_periodogram_and_sinusoid_peak() {
    let n = 64usize;
    let dt = 0.25;
    let a = 3.0;
    let m = 5;
    let z: Vec<f64> = (0..n)
        .map(|i| a * (2.0 * std::f64::consts::PI * (m * i) as f64 / n as f64).cos())
        .collect();
    let s = GappySeries::fully_valid(z.clone(), dt).unwrap();
    let freqs: Vec<f64> = (1..n / 2).map(|j| j as f64 / (n as f64 * dt)).collect();
    let ls = lomb_scargle(&s, &freqs).unwrap();
    assert!(close(ls.values[m - 1], a * a * n as f64 * dt / 4.0, 1e-10));
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mean = z.iter().sum::<f64>() / n as f64;
    let s = GappySeries::fully_valid(z.clone(), dt).unwrap();
    let ls = lomb_scargle(&s, &freqs).unwrap();
    for (j, v) in (1..n / 2).zip(&ls.values) {
        let (re, im) = z.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, zi)| {
            let ph = -2.0 * std::f64::consts::PI * (i * j) as f64 / n as f64;
            (re + (zi - mean) * ph.cos(), im + (zi - mean) * ph.sin())
        });
        assert!((v - dt / n as f64 * (re * re + im * im)).abs() <= 1e-8, "j={j}");
    }
}

#[test]
fn lomb_scargle_offset_is_the_plug_in_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let n = 200;
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0).collect();
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 })
        .collect();
    let s = GappySeries::new(z, w, 1.0).unwrap();
    let s2 = weighted_variance(&s);
    assert!(close(lomb_scargle_offset(&s, 0.5), s2, 1e-12));
    assert!(close(lomb_scargle_offset(&s, 0.25), 3.0 * s2, 1e-12));
}

#[test]
fn sample_and_hold_fills_from_the_previous_valid_sample() {
    let s = GappySeries::new(vec![9.0, 1.0, 5.0, 7.0, 2.0], vec![0.0, 1.0, 0.0, 0.0, 1.0], 1.0).unwrap();
    let h = sample_and_hold(&s).unwrap();
    assert_eq!(h.values(), &[1.0, 1.0, 1.0, 1.0, 2.0]);
    assert!(h.weights().iter().all(|w| *w == 1.0));
}

#[test]
fn process_truth_closed_forms() {
    let k = vec![1.0 / 2f64.sqrt(); 2];
    let truth = ProcessTruth::from_spec(&ProcessSpec::moving_average(k, 0.0, 4.0)).unwrap();
    assert!(close(truth.autocovariance(0), 4.0, 1e-14));
    assert!(close(truth.autocovariance(1), 2.0, 1e-14));
    assert!(close(truth.autocovariance(-1), 2.0, 1e-14));
    assert_eq!(truth.autocovariance(2), 0.0);
    let bench = ProcessTruth::from_spec(&ProcessSpec::benchmark()).unwrap();
    assert!(close(bench.autocovariance(0), 4.0, 1e-13));
    assert!(close(bench.cross_covariance(10), 3.0, 1e-13));
    assert_eq!(benchmark_kernel().len(), 18);
    let pair = generate_pair(&ProcessSpec::benchmark(), 50).unwrap();
    assert_eq!(pair.x.len(), 50);
    assert_eq!(pair.y.len(), 50);
}
