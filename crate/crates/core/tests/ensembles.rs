//! Statistical checks on seeded ensembles. Every ensemble is deterministic,
//! so these are regression tests with tolerances taken from the expected
//! sampling spread, not flaky Monte Carlo runs.

mod common;

use dfakit_core::experiments::{
    alpha_vs_length_study, crossover_calibration_study, member_seed, trend_ensemble_curves,
};
use dfakit_core::fluctuation::{ensemble_curves, mean_square_curve};
use dfakit_core::scaling::{fit_alpha, local_slopes, CrossoverSearch};
use dfakit_core::{
    default_scale_grid, downsample, fluctuation_curve, generate_crossover, generate_power_law,
    series_stats, shuffle_boxes, CrossoverSpec, FluctuationCurve, GeneratorSpec, Method, Series,
    TrendSpec,
};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

const SEED: u64 = 1;

fn power_law_ensemble(
    n: usize,
    alpha: f64,
    members: usize,
    methods: &[Method],
) -> Vec<FluctuationCurve> {
    let grids: Vec<_> = methods
        .iter()
        .map(|&m| (m, default_scale_grid(n, m).unwrap()))
        .collect();
    ensemble_curves(members, n, &grids, |i| {
        generate_power_law(&GeneratorSpec::new(n, alpha, member_seed(SEED, i)))
    })
    .unwrap()
}

/// The two decades of scale centred (geometrically) on the grid.
fn central_decades(c: &FluctuationCurve) -> (f64, f64) {
    let s = c.scales.scales();
    let mid = ((s[0] as f64) * (*s.last().unwrap() as f64)).sqrt();
    (mid / 10.0, mid * 10.0)
}

#[test]
fn white_noise_scaling_of_fa_and_rs() {
    let n = 50_000;
    let curves = power_law_ensemble(n, 0.5, 100, &[Method::Fa, Method::Rs]);
    let fa = fit_alpha(&curves[0], 10.0, n as f64 / 4.0).unwrap().alpha;
    assert!((fa - 0.5).abs() <= 0.02, "FA {fa}");
    let (lo, hi) = central_decades(&curves[1]);
    let rs = fit_alpha(&curves[1], lo, hi).unwrap().alpha;
    assert!((rs - 0.5).abs() <= 0.03, "R/S {rs}");
}

#[test]
fn fa_and_rs_saturate_at_one() {
    let n = 50_000;
    let curves = power_law_ensemble(n, 1.2, 100, &[Method::Fa, Method::Rs]);
    for c in &curves {
        let (lo, hi) = central_decades(c);
        let a = fit_alpha(c, lo, hi).unwrap().alpha;
        assert!((a - 1.0).abs() <= 0.05, "{}: {a}", c.method);
    }
}

#[test]
fn cma_is_steadier_than_dfa_at_large_scales() {
    let n = 50_000;
    let curves = power_law_ensemble(n, 0.7, 100, &[Method::Dfa(1), Method::Cma]);
    let spread = |c: &FluctuationCurve| {
        let tail: Vec<f64> = local_slopes(c)
            .unwrap()
            .into_iter()
            .filter(|p| p.0 >= n as f64 / 20.0)
            .map(|p| p.1)
            .collect();
        let m = common::mean(&tail);
        (tail.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / tail.len() as f64).sqrt()
    };
    let (dfa, cma) = (spread(&curves[0]), spread(&curves[1]));
    assert!(cma < dfa, "CMA {cma} vs DFA1 {dfa}");
}

#[test]
fn generator_hits_its_exponent_on_short_series() {
    // 1000 series of N = 5000, DFA1 fitted over [10, N/2] one by one
    let n = 5000;
    let grid = default_scale_grid(n, Method::Dfa(1)).unwrap();
    let alphas: Vec<f64> = (0..1000)
        .map(|i| {
            let x = generate_power_law(&GeneratorSpec::new(n, 0.7, member_seed(SEED, i))).unwrap();
            let f = mean_square_curve(&x, Method::Dfa(1), &grid).unwrap();
            let c = FluctuationCurve::from_points(
                Method::Dfa(1),
                grid.scales().to_vec(),
                f.into_iter().map(f64::sqrt).collect(),
                n,
            )
            .unwrap();
            fit_alpha(&c, 10.0, n as f64 / 2.0).unwrap().alpha
        })
        .collect();
    let m = common::mean(&alphas);
    assert!((m - 0.7).abs() <= 0.02, "{m}");
}

#[test]
fn normalized_output_has_unit_moments() {
    for seed in 0..20 {
        let x = generate_power_law(&GeneratorSpec::new(3001 + seed as usize, 1.1, seed)).unwrap();
        let (m, sd) = series_stats(&x);
        assert!(m.abs() < 1e-12, "{m}");
        assert!((sd * sd - 1.0).abs() < 1e-9);
    }
}

#[test]
fn averaged_periodogram_has_the_target_slope() {
    // N deliberately not a power of two, so truncation is exercised
    let n = 10_000;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut power = vec![0.0; n / 2 + 1];
    for i in 0..100 {
        let x = generate_power_law(&GeneratorSpec::new(n, 0.7, member_seed(SEED, i))).unwrap();
        let mut buf: Vec<Complex<f64>> = x.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            *p += buf[k].norm_sqr();
        }
    }
    // central two decades of the frequency axis k = 1..N/2
    let kc = ((n / 2) as f64).sqrt();
    let (lo, hi) = ((kc / 10.0).ceil() as usize, (kc * 10.0).floor() as usize);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .map(|k| ((k as f64 / n as f64).ln(), power[k].ln()))
        .unzip();
    let slope = common::ols_slope(&xs, &ys);
    assert!((slope + 0.4).abs() <= 0.05, "{slope}");
}

#[test]
fn box_shuffling_destroys_long_range_correlations() {
    let n = 20_000;
    let su = 20;
    let grid = default_scale_grid(n, Method::Dfa(1)).unwrap();
    let curves = ensemble_curves(100, n, &[(Method::Dfa(1), grid)], |i| {
        let x = generate_power_law(&GeneratorSpec::new(n, 0.8, member_seed(SEED, i)))?;
        shuffle_boxes(&x, su, member_seed(SEED + 1, i))
    })
    .unwrap();
    // the transition to 0.5 is not sharp: a decade above s_u the slope has settled
    let settled = fit_alpha(&curves[0], 10.0 * su as f64, n as f64 / 4.0)
        .unwrap()
        .alpha;
    assert!((settled - 0.5).abs() <= 0.05, "{settled}");
    let near = fit_alpha(&curves[0], 2.0 * su as f64, n as f64 / 4.0)
        .unwrap()
        .alpha;
    assert!(near > settled, "{near} vs {settled}");
    let below = fit_alpha(&curves[0], 4.0, su as f64).unwrap().alpha;
    assert!((below - 0.8).abs() <= 0.1, "{below}");
}

#[test]
fn decimation_keeps_the_asymptotic_exponent() {
    // every 10th sample keeps the power-law tail of the correlations but adds an
    // uncorrelated part, so the exponent only shows up at large scales
    let n = 500_000;
    let short = n / 10;
    let m = Method::Cma;
    let grid = default_scale_grid(short, m).unwrap();
    let down = ensemble_curves(100, short, &[(m, grid)], |i| {
        let x = generate_power_law(&GeneratorSpec::new(n, 0.8, member_seed(SEED, i)))?;
        downsample(&x, 10)
    })
    .unwrap();
    let large = fit_alpha(&down[0], short as f64 / 40.0, short as f64 / 4.0)
        .unwrap()
        .alpha;
    assert!((large - 0.8).abs() <= 0.05, "{large}");
    let small = fit_alpha(&down[0], 4.0, 40.0).unwrap().alpha;
    assert!(small < large - 0.1, "{small} vs {large}");
}

#[test]
fn trends_bend_rs_but_not_dfa2() {
    let n = 20_000;
    let methods = [Method::Rs, Method::Dfa(2)];
    let grids: Vec<_> = methods
        .iter()
        .map(|&m| (m, default_scale_grid(n, m).unwrap()))
        .collect();
    let curves = trend_ensemble_curves(0.65, TrendSpec::linear(50.0), n, 50, &grids, SEED).unwrap();
    let large = |c: &FluctuationCurve| {
        fit_alpha(c, n as f64 / 100.0, n as f64 / 4.0)
            .unwrap()
            .alpha
    };
    let rs = large(&curves[0]);
    let dfa2 = large(&curves[1]);
    assert!((rs - 0.65).abs() > 0.1, "R/S {rs}");
    assert!((dfa2 - 0.65).abs() <= 0.05, "DFA2 {dfa2}");
}

#[test]
fn crossover_surrogates_show_both_exponents() {
    let n = 50_000;
    let methods = [Method::Dfa(1), Method::Cma, Method::Mdfa(1)];
    let grids: Vec<_> = methods
        .iter()
        .map(|&m| (m, default_scale_grid(n, m).unwrap()))
        .collect();
    let curves = ensemble_curves(50, n, &grids, |i| {
        generate_crossover(&CrossoverSpec {
            length: n,
            alpha1: 0.8,
            alpha2: 0.5,
            s_cross: 200,
            seed: member_seed(SEED, i),
        })
    })
    .unwrap();
    for c in &curves {
        let est = *CrossoverSearch::for_length(n)
            .detect(c)
            .unwrap()
            .found()
            .unwrap();
        assert!(
            (est.alpha_below - 0.8).abs() <= 0.06,
            "{}: {est:?}",
            c.method
        );
        assert!(
            (est.alpha_above - 0.5).abs() <= 0.06,
            "{}: {est:?}",
            c.method
        );
        if c.method == Method::Dfa(1) {
            assert!(est.s_observed > 200.0, "{est:?}");
        }
    }
}

#[test]
fn ensemble_average_is_taken_over_squares() {
    let n = 1000;
    let m = Method::Mdfa(1);
    let grid = default_scale_grid(n, m).unwrap();
    let set: Vec<Series> = (0..7)
        .map(|i| generate_power_law(&GeneratorSpec::new(n, 0.9, i)).unwrap())
        .collect();
    let curve = fluctuation_curve(&set, m, &grid).unwrap();
    let per: Vec<Vec<f64>> = set
        .iter()
        .map(|x| mean_square_curve(x, m, &grid).unwrap())
        .collect();
    for (k, v) in curve.values.iter().enumerate() {
        let manual = (per.iter().map(|p| p[k]).sum::<f64>() / set.len() as f64).sqrt();
        assert!(common::rel_err(*v, manual) < 1e-14);
        let mean_of_roots = per.iter().map(|p| p[k].sqrt()).sum::<f64>() / set.len() as f64;
        assert!(*v >= mean_of_roots);
    }
    assert_eq!(curve.ensemble_size, 7);

    let one = fluctuation_curve(&set[..1], m, &grid).unwrap();
    for (k, v) in one.values.iter().enumerate() {
        assert_eq!(*v, per[0][k].sqrt());
    }
    let twice = fluctuation_curve(&[set[0].clone(), set[0].clone()], m, &grid).unwrap();
    for (a, b) in twice.values.iter().zip(&one.values) {
        assert!(common::rel_err(*a, *b) < 1e-15);
    }
    let short = generate_power_law(&GeneratorSpec::new(n - 1, 0.9, 1)).unwrap();
    assert!(fluctuation_curve(&[set[0].clone(), short], m, &grid).is_err());
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| power_law_ensemble(4096, 0.7, 16, &[Method::Dfa(1), Method::Cma]))
    };
    let a = run(1);
    let b = run(4);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(
            x.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn generation_and_studies_are_reproducible() {
    let spec = GeneratorSpec::new(3333, 0.6, 99);
    let a = generate_power_law(&spec).unwrap();
    let b = generate_power_law(&spec).unwrap();
    assert_eq!(
        a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_ne!(
        a.values(),
        generate_power_law(&GeneratorSpec::new(3333, 0.6, 100))
            .unwrap()
            .values()
    );

    let methods = [Method::Dfa(1), Method::Cma, Method::Mdfa(1)];
    let study = || alpha_vs_length_study(0.7, &[50, 200], 40, &methods, 5).unwrap();
    let (s1, s2) = (study(), study());
    assert_eq!(s1.summary_csv(), s2.summary_csv());
    assert_eq!(s1.histogram_csv(), s2.histogram_csv());

    let cal = || {
        crossover_calibration_study(
            0.8,
            0.5,
            &[40, 80],
            2000,
            4,
            &methods,
            5,
            &CrossoverSearch::for_length(2000),
        )
        .unwrap()
    };
    let (c1, c2) = (cal(), cal());
    assert_eq!(c1.cells_csv(), c2.cells_csv());
    assert_eq!(c1.fits_csv(), c2.fits_csv());
}

#[test]
fn short_series_use_the_clamped_range() {
    // N = 50: the fixed-lower range degenerates to [10, 25]
    let st = alpha_vs_length_study(0.7, &[50], 30, &[Method::Dfa(1)], 3).unwrap();
    let s = st.stats_for(50, Method::Dfa(1)).unwrap();
    assert_eq!(s.n_series + s.n_failed, 30);
    let x = generate_power_law(&GeneratorSpec::new(50, 0.7, member_seed(3, 0))).unwrap();
    let grid = default_scale_grid(50, Method::Dfa(1)).unwrap();
    let f: Vec<f64> = mean_square_curve(&x, Method::Dfa(1), &grid)
        .unwrap()
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let c = FluctuationCurve::from_points(Method::Dfa(1), grid.scales().to_vec(), f, 50).unwrap();
    let manual = fit_alpha(&c, 10.0, 25.0).unwrap();
    assert_eq!(
        st.sample_for(50, Method::Dfa(1)).unwrap().alphas[0],
        Some(manual.alpha)
    );
}
