use std::f64::consts::PI;

use capsobolev::caps::CapAverageContext;
use capsobolev::coeffs::{harmonic_dim, HarmonicCoeffs};
use capsobolev::legendre::{eval_p, taylor_coeff};
use capsobolev::remainders::{SweepResult, SweepRow};
use capsobolev::sobolev::{poisson, tk_apply, tk_inverse, Branch, NormReport};
use capsobolev::sphere2::SphericalGrid;
use capsobolev::weights::{fine_condition_ratio, validate, Weight, WeightSpec};
use proptest::prelude::*;

fn coeffs_strategy(d: usize, band: usize) -> impl Strategy<Value = HarmonicCoeffs> {
    let total: usize = (0..=band).map(|l| harmonic_dim(d, l)).sum();
    prop::collection::vec(-1.0f64..1.0, total).prop_map(move |flat| {
        let mut it = flat.into_iter();
        let blocks = (0..=band)
            .map(|l| it.by_ref().take(harmonic_dim(d, l)).collect())
            .collect();
        HarmonicCoeffs::from_blocks(d, blocks).unwrap()
    })
}

fn weight_strategy() -> impl Strategy<Value = Weight> {
    prop_oneof![
        (1.0f64..PI).prop_map(|span| Weight::constant(span).unwrap()),
        (0.05f64..0.45, 0.55f64..0.95).prop_map(|(a, b)| Weight::indicator(PI, a * PI, b * PI).unwrap()),
        (0.0f64..3.0).prop_map(|p| Weight::power(2.0, p).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_is_bounded_and_one_at_one(d in 2usize..7, l in 0usize..200, s in -1.0f64..=1.0) {
        prop_assert!(eval_p(d, l, s).unwrap().abs() <= 1.0 + 1e-12);
        prop_assert!((eval_p(d, l, 1.0).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn taylor_signs_alternate_then_vanish(d in 2usize..7, l in 0usize..40, k in 0usize..45) {
        let c = taylor_coeff(d, k, l).unwrap();
        if k == 0 {
            prop_assert_eq!(c, 1.0);
        } else if k > l {
            prop_assert_eq!(c, 0.0);
        } else {
            prop_assert!(c != 0.0);
            prop_assert_eq!(c < 0.0, k % 2 == 1);
        }
    }

    #[test]
    fn multipliers_bounded_with_unit_constant(d in 2usize..6, w in weight_strategy(), frac in 0.001f64..=1.0) {
        let ctx = CapAverageContext::with_defaults(d, w).unwrap();
        let t = frac * ctx.span();
        let m = ctx.multipliers(60, t).unwrap();
        prop_assert!((m[0] - 1.0).abs() <= 1e-13);
        for v in m {
            prop_assert!(v.abs() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn averaging_and_poisson_contract(f in coeffs_strategy(3, 12), w in weight_strategy(), frac in 0.01f64..=1.0, r in 0.0f64..1.0) {
        let ctx = CapAverageContext::with_defaults(3, w).unwrap();
        let norm = f.norm_sq();
        let avg = ctx.apply_multiplier(&f, frac * ctx.span()).unwrap();
        prop_assert!(avg.norm_sq() <= norm * (1.0 + 1e-10));
        prop_assert!(poisson(&f, r).unwrap().norm_sq() <= norm * (1.0 + 1e-14));
    }

    #[test]
    fn analysis_inverts_synthesis(f in coeffs_strategy(3, 10)) {
        let grid = SphericalGrid::new(10);
        let back = grid.analysis(&grid.synthesis(&f).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&f).unwrap() <= 1e-12);
    }

    #[test]
    fn tk_inverse_undoes_tk(f in coeffs_strategy(4, 10), k in 1usize..4) {
        // T_k annihilates degrees below k
        let f = f.map_degrees(|l| if l < k { 0.0 } else { 1.0 });
        let back = tk_inverse(&tk_apply(&f, k).unwrap(), k).unwrap();
        prop_assert!(back.max_abs_diff(&f).unwrap() <= 1e-10);
    }

    #[test]
    fn coeff_json_round_trips(f in coeffs_strategy(3, 6)) {
        let back = HarmonicCoeffs::from_json(&f.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn weight_json_round_trips(span in 0.1f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let spec = WeightSpec::indicator(span, a * span, b * span);
        let back = WeightSpec::from_json(&spec.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn validation_reports_instead_of_panicking(
        span in prop::num::f64::ANY,
        t0 in prop::num::f64::ANY,
        tp in prop::num::f64::ANY,
        p in prop::num::f64::ANY,
        pts in prop::collection::vec((prop::num::f64::ANY, prop::num::f64::ANY), 0..6),
    ) {
        let specs = [
            WeightSpec::constant(span),
            WeightSpec::indicator(span, t0, tp),
            WeightSpec::power(span, p).with_markers(t0, tp),
            WeightSpec::table(span, pts.iter().map(|&(a, b)| [a, b]).collect()),
        ];
        for spec in &specs {
            let report = validate(spec);
            prop_assert_eq!(report.is_valid(), Weight::from_spec(spec).is_ok());
        }
    }

    #[test]
    fn fine_ratio_matches_closed_form(d in 2usize..7, n in 1usize..5, r in 0.02f64..0.98) {
        let w = Weight::indicator(PI, r * 2.0, 2.0).unwrap();
        let (df, nf) = (d as f64, n as f64);
        let want = (df + 1.0) / (2.0 * nf + df + 1.0)
            * (1.0 + r.powf(2.0 * nf + 2.0 * df) - r.powf(2.0 * nf + df + 1.0) - r.powf(df - 1.0))
            / (1.0 + r.powf(2.0 * nf + 2.0 * df) - r.powf(2.0 * nf + df - 1.0) - r.powf(df + 1.0));
        let got = fine_condition_ratio(&w, d, n).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn report_json_is_bit_exact(
        alpha in 0.01f64..10.0,
        lhs in 0.0f64..1e300,
        rhs in 0.0f64..1e300,
        values in prop::collection::vec(0.0f64..1e12, 1..6),
        slope in prop::option::of(-10.0f64..10.0),
    ) {
        let report = NormReport {
            alpha,
            lhs,
            rhs,
            ratio: (rhs > 0.0).then(|| lhs / rhs),
            branch: Branch::Fractional,
            warnings: vec!["w".into()],
        };
        let back: NormReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, report);

        let rows: Vec<SweepRow> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| SweepRow { l: 16 + i, value: v, normalized: v / (16.0 + i as f64).powf(alpha) })
            .collect();
        let sweep = SweepResult {
            mode: "I".into(),
            d: 3,
            alpha,
            n: 0,
            weight: "constant".into(),
            power: 2.0 * alpha,
            rows,
            slope,
            window: slope.map(|_| (16, 20)),
            warnings: vec![],
            failure: None,
        };
        let back: SweepResult = serde_json::from_str(&serde_json::to_string(&sweep).unwrap()).unwrap();
        prop_assert_eq!(back, sweep);
    }
}
