use chrono::NaiveDate;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use fairvol::estimate::{
    classify_series, estimate_hurst, historical_vol, hurst_ci, theoretical_vol, HurstSeries, RollingConfig,
};
use fairvol::pipeline::{read_prices, run_analysis, PricePath};
use fairvol::simulate::{
    gen_fbm, gen_fgn, simulate, HurstPathSpec, MpreSpec, NuPathSpec, ProcessSpec, SimulationSpec,
};
use fairvol::specfun::{
    a_const, fbm_covariance, fgn_autocov, gamma_fn, i_cosine, i_cosine_closed_form, j_integral, v_const, Hurst,
    VhVariant,
};
use fairvol::stats::{adf_test, efficiency_metrics, sample_acf, straddle_payoff, summary_stats};
use fairvol::{Regime, VolatilitySeries};

fn hurst() -> impl Strategy<Value = f64> {
    0.05f64..0.95
}

fn series(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len).prop_filter("non-constant", |v| {
        v.iter().any(|x| (x - v[0]).abs() > 1e-3)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vh_variants_agree(h in hurst()) {
        let hh = Hurst::new(h).unwrap();
        let sine = v_const(hh, VhVariant::SineForm).unwrap();
        for v in VhVariant::ALL {
            if v.is_singular_at_half() && (h - 0.5).abs() < 1e-3 {
                continue;
            }
            let x = v_const(hh, v).unwrap();
            prop_assert!(((x - sine) / sine).abs() <= 1e-10, "{v:?} at {h}: {x} vs {sine}");
        }
    }

    #[test]
    fn a_const_factorises(h in hurst()) {
        let hh = Hurst::new(h).unwrap();
        let g = gamma_fn(h + 0.5).unwrap();
        let want = v_const(hh, VhVariant::SineForm).unwrap() * g * g;
        prop_assert!((a_const(hh) - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn quadrature_identities(h in hurst()) {
        let hh = Hurst::new(h).unwrap();
        prop_assert!((j_integral(hh).unwrap() + 0.5 / h - a_const(hh)).abs() <= 1e-6);
        prop_assert!((i_cosine(hh).unwrap() - i_cosine_closed_form(hh)).abs() <= 1e-6);
    }

    #[test]
    fn brownian_increments_are_uncorrelated(k in 1usize..500, step in 1e-4f64..1.0) {
        prop_assert_eq!(fgn_autocov(k, step, Hurst::new(0.5).unwrap()), 0.0);
    }

    #[test]
    fn fbm_gram_matrix_is_symmetric_psd(
        h in hurst(),
        mut times in prop::collection::vec(0.0f64..5.0, 2..64),
    ) {
        times.sort_by(f64::total_cmp);
        let hh = Hurst::new(h).unwrap();
        let n = times.len();
        let g = DMatrix::from_fn(n, n, |i, j| fbm_covariance(times[i], times[j], hh));
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
        let min = SymmetricEigen::new(g).eigenvalues.min();
        prop_assert!(min >= -1e-9, "smallest eigenvalue {min}");
    }

    #[test]
    fn band_is_symmetric_about_half(delta in 5usize..500, n in 30usize..100_000, alpha in 0.001f64..0.5) {
        let (lo, hi) = hurst_ci(delta, n, alpha).unwrap();
        prop_assert_eq!(lo + hi, 1.0);
        prop_assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn historical_vol_is_sign_symmetric(x in series(25..200)) {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert_eq!(historical_vol(&x, 20).unwrap(), historical_vol(&neg, 20).unwrap());
    }

    #[test]
    fn theoretical_vol_monotone(h in 0.06f64..0.94, nu in 0.1f64..5.0, n in 50usize..30_000) {
        let up = theoretical_vol(&[h, h], &[nu, nu * 1.01], n).unwrap();
        prop_assert!(up[1] > up[0]);
        // decreasing in H wherever d/dH [H ln(step) + ln A(H)/2] < 0
        let step = 1.0 / (n - 1) as f64;
        let eps = 1e-4;
        let g = |x: f64| x * step.ln() + 0.5 * a_const(Hurst::new(x).unwrap()).ln();
        if (g(h + eps) - g(h - eps)) / (2.0 * eps) < -1e-6 {
            let v = theoretical_vol(&[h - eps, h + eps], &[nu, nu], n).unwrap();
            prop_assert!(v[1] < v[0]);
        }
    }

    #[test]
    fn straddle_is_symmetric_about_strike(s in 0.0f64..200.0, k in 50.0f64..150.0, c in 0.0f64..10.0, p in 0.0f64..10.0) {
        prop_assume!(2.0 * k - s >= 0.0);
        let a = straddle_payoff(s, k, c, p).unwrap();
        let b = straddle_payoff(2.0 * k - s, k, c, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn acf_is_affine_invariant(x in series(10..200), a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in -100.0f64..100.0) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let (rx, ry) = (sample_acf(&x, 5).unwrap(), sample_acf(&y, 5).unwrap());
        for (u, v) in rx.iter().zip(&ry) {
            prop_assert!((u - v).abs() <= 1e-8, "{u} vs {v}");
        }
    }

    #[test]
    fn shape_moments_are_location_scale_invariant(x in series(10..200), a in 0.1f64..5.0, b in -100.0f64..100.0) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let (sx, sy) = (summary_stats(&x).unwrap(), summary_stats(&y).unwrap());
        prop_assert!((sx.kurtosis - sy.kurtosis).abs() <= 1e-8 * sx.kurtosis.abs().max(1.0));
        prop_assert!((sx.skewness - sy.skewness).abs() <= 1e-8 * sx.skewness.abs().max(1.0));
    }

    #[test]
    fn adf_statistic_is_scale_invariant(x in series(40..300), a in 0.01f64..100.0) {
        let y: Vec<f64> = x.iter().map(|v| a * v).collect();
        if let (Ok(rx), Ok(ry)) = (adf_test(&x, 1), adf_test(&y, 1)) {
            prop_assert!((rx.statistic - ry.statistic).abs() <= 1e-7 * rx.statistic.abs().max(1.0));
        }
    }

    #[test]
    fn efficiency_metrics_ignore_time_labels(
        h in prop::collection::vec(0.3f64..0.7, 5..100),
        gaps in prop::collection::vec(1usize..10, 100),
    ) {
        let len = h.len();
        let relabelled: Vec<usize> = gaps[..len].iter().scan(0, |t, g| { *t += g; Some(*t) }).collect();
        let base = hurst_series(&h, (0..len).collect());
        let moved = hurst_series(&h, relabelled.clone());
        let vol = |t_index: Vec<usize>| VolatilitySeries {
            t_index,
            sigma_hist: h.iter().map(|x| x * 0.02).collect(),
            sigma_theo: vec![0.01; len],
            nu_hat: vec![1.0; len],
            nu_raw: vec![1.0; len],
            fair_lo: vec![0.008; len],
            fair_hi: vec![0.012; len],
        };
        let a = efficiency_metrics(&base, &vol((0..len).collect())).unwrap();
        let b = efficiency_metrics(&moved, &vol(relabelled)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), h in hurst(), n in 2usize..300) {
        let hh = Hurst::new(h).unwrap();
        for process in [ProcessSpec::Fbm { h: hh }, ProcessSpec::Fgn { h: hh }, ProcessSpec::Ar1 { phi: h - 0.5 }] {
            let spec = SimulationSpec { process, n, seed };
            let (a, b) = (simulate(&spec).unwrap(), simulate(&spec).unwrap());
            prop_assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert!(a.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn price_csv_round_trips(closes in prop::collection::vec(1e-3f64..1e6, 1..100), start in 0i64..10_000) {
        let day0 = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + chrono::Duration::days(start);
        let dates: Vec<NaiveDate> = (0..closes.len() as i64).map(|i| day0 + chrono::Duration::days(2 * i)).collect();
        let p = PricePath::new("X", dates, closes).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = read_prices(buf.as_slice(), "X").unwrap();
        prop_assert_eq!(back.dropped_blank, 0);
        prop_assert_eq!(back.prices, p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mpre_paths_are_finite_and_reproducible(seed in any::<u64>(), h in 0.1f64..0.9, nu in 0.2f64..3.0) {
        let spec = MpreSpec::new(HurstPathSpec::constant(Hurst::new(h).unwrap()), NuPathSpec::Constant(nu));
        let s = SimulationSpec { process: ProcessSpec::Mpre(spec), n: 129, seed };
        let (a, b) = (simulate(&s).unwrap(), simulate(&s).unwrap());
        prop_assert!(a.values.iter().all(|v| v.is_finite()));
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn regimes_survive_rescaling(seed in any::<u64>(), c in 0.5f64..2.0) {
        let x = gen_fbm(2049, Hurst::new(0.5).unwrap(), seed).unwrap().increments();
        let y: Vec<f64> = x.iter().map(|v| c * v).collect();
        let cfg = RollingConfig::default();
        let (a, b) = (estimate_hurst(&x, &cfg).unwrap(), estimate_hurst(&y, &cfg).unwrap());
        let same = classify_series(&a).iter().zip(classify_series(&b)).filter(|(p, q)| **p == *q).count();
        prop_assert!(same as f64 >= 0.95 * a.len() as f64, "{same} of {}", a.len());
    }

    #[test]
    fn analysis_is_pure(seed in any::<u64>()) {
        let r: Vec<f64> = gen_fgn(600, Hurst::new(0.5).unwrap(), seed).unwrap().values.iter().map(|v| v * 0.25).collect();
        let p = PricePath::from_log_returns("P", NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), 10.0, &r).unwrap();
        let cfg = RollingConfig::default();
        let a = serde_json::to_vec(&run_analysis(&p, &cfg).unwrap()).unwrap();
        let b = serde_json::to_vec(&run_analysis(&p, &cfg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn hurst_series(h: &[f64], t_index: Vec<usize>) -> HurstSeries {
    let (ci_lo, ci_hi) = hurst_ci(20, 1000, 0.05).unwrap();
    let regime = h
        .iter()
        .map(|&x| fairvol::estimate::classify_regime(x, ci_lo, ci_hi))
        .collect::<Vec<Regime>>();
    HurstSeries {
        t_index,
        h_hat: h.to_vec(),
        h_raw: h.to_vec(),
        clamped: vec![false; h.len()],
        ci_lo,
        ci_hi,
        regime,
        n: 1000,
        delta: 20,
        alpha: 0.05,
        scale: 1.0,
    }
}
