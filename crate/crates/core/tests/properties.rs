//! Property tests for algebraic and structural invariants.

use proptest::prelude::*;

use temclu::cluster::{greedy_matching, symmetrized};
use temclu::deformed::{
    exp_t, exp_t_star, log_t, log_t_star, t_add, t_div, t_mul, t_sub, tsallis_bregman,
};
use temclu::diagram::Viewport;
use temclu::divergence::{conformal, conformal_closed_form, conformal_vec, AxisFactor};
use temclu::minimizer::{
    left_loss, left_minimizer, right_loss, right_minimizer, WeightedPopulation,
};
use temclu::{NaturalParam, TemFamily, Temper};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn fam(kind: u8, t: f64) -> TemFamily {
    let tp = Temper::new(t).unwrap();
    if kind == 0 {
        TemFamily::t_exponential(tp)
    } else {
        TemFamily::t_gaussian(tp)
    }
}

proptest! {
    #[test]
    fn tempered_log_inverts_exp(t in 0.0..=1.0f64, s in 0.0..1.0f64) {
        let tp = Temper::new(t).unwrap();
        let lo = if t < 1.0 { (-0.95 / (1.0 - t)).max(-30.0) } else { -30.0 };
        let z = lo + s * (5.0 - lo);
        prop_assert!(rel(log_t(tp, exp_t(tp, z)).unwrap(), z) < 1e-11);
    }

    #[test]
    fn dual_log_inverts_dual_exp(t in 0.0..=1.0f64, x in 1e-3..1e3f64) {
        let tp = Temper::new(t).unwrap();
        prop_assert!(rel(exp_t_star(tp, log_t_star(tp, x).unwrap()), x) < 1e-11);
    }

    #[test]
    fn tempered_sum_is_a_product(t in 0.0..=1.0f64, x in -0.9..3.0f64, y in -0.9..3.0f64) {
        let tp = Temper::new(t).unwrap();
        prop_assert!(rel(exp_t(tp, t_add(tp, x, y)), exp_t(tp, x) * exp_t(tp, y)) < 1e-11);
        prop_assert!(rel(exp_t(tp, t_sub(tp, x, y).unwrap()), exp_t(tp, x) / exp_t(tp, y)) < 1e-11);
    }

    #[test]
    fn tempered_product_adds_logs(t in 0.0..=1.0f64, x in 1.0..50.0f64, y in 1.0..50.0f64) {
        let tp = Temper::new(t).unwrap();
        let (lx, ly) = (log_t(tp, x).unwrap(), log_t(tp, y).unwrap());
        prop_assert!(rel(log_t(tp, t_mul(tp, x, y).unwrap()).unwrap(), lx + ly) < 1e-11);
        // x ⊘ y stays unclamped when x >= y
        let (a, b) = if x >= y { (x, y) } else { (y, x) };
        let (la, lb) = (log_t(tp, a).unwrap(), log_t(tp, b).unwrap());
        prop_assert!(rel(log_t(tp, t_div(tp, a, b).unwrap()).unwrap(), la - lb) < 1e-11);
    }

    #[test]
    fn tsallis_bregman_is_nonnegative(t in 0.0..=1.0f64, u in 0.0..5.0f64, v in 1e-3..5.0f64) {
        let tp = Temper::new(t).unwrap();
        prop_assert!(tsallis_bregman(tp, u, v).unwrap() >= -1e-12);
    }

    #[test]
    fn conformal_divergence_is_nonnegative_and_zero_on_diagonal(
        kind in 0u8..2, t in 0.0..=1.0f64, a in -8.0..-0.05f64, b in -8.0..-0.05f64,
    ) {
        let f = fam(kind, t);
        let d = conformal(&f, a, b).unwrap().value;
        prop_assert!(d >= -1e-12, "{d}");
        prop_assert!(conformal(&f, a, a).unwrap().value.abs() < 1e-14);
        prop_assert!((d - conformal_closed_form(&f, a, b).unwrap()).abs() < 1e-9 * d.max(1.0));
    }

    #[test]
    fn per_axis_divergence_is_a_sum(
        kind in 0u8..2, t in 0.0..=1.0f64,
        a in prop::collection::vec(-5.0..-0.1f64, 3), b in prop::collection::vec(-5.0..-0.1f64, 3),
    ) {
        let f = fam(kind, t);
        let whole = conformal_vec(&f, &a, &b, AxisFactor::PerAxis).unwrap();
        let parts: f64 = a.iter().zip(&b).map(|(&x, &y)| conformal(&f, x, y).unwrap().value).sum();
        prop_assert!((whole - parts).abs() < 1e-12 * whole.max(1.0));
    }

    #[test]
    fn minimizers_beat_nearby_candidates(
        kind in 0u8..2, t in 0.0..=1.0f64,
        xs in prop::collection::vec(-3.0..-0.3f64, 2..12), dx in -0.05..0.05f64,
    ) {
        let f = fam(kind, t);
        let pop = WeightedPopulation::uniform(xs.iter().map(|&x| NaturalParam::scalar(x)).collect()).unwrap();
        let l = left_minimizer(&f, &pop).unwrap().theta_l;
        let r = right_minimizer(&f, &pop).unwrap();
        let moved = |c: &NaturalParam| NaturalParam::scalar((c.0[0] + dx).min(-0.01));
        let ll = left_loss(&f, &pop, &l).unwrap();
        prop_assert!(ll <= left_loss(&f, &pop, &moved(&l)).unwrap() + 1e-12 * ll.max(1.0));
        let rl = right_loss(&f, &pop, &r).unwrap();
        prop_assert!(rl <= right_loss(&f, &pop, &moved(&r)).unwrap() + 1e-12 * rl.max(1.0));
    }

    #[test]
    fn population_weights_only_matter_relatively(
        kind in 0u8..2, t in 0.0..=1.0f64,
        xs in prop::collection::vec(-3.0..-0.3f64, 2..8), scale in 0.1..10.0f64,
    ) {
        let f = fam(kind, t);
        let pts: Vec<NaturalParam> = xs.iter().map(|&x| NaturalParam::scalar(x)).collect();
        let w: Vec<f64> = (0..pts.len()).map(|i| 1.0 + i as f64).collect();
        let a = WeightedPopulation::new(pts.clone(), w.clone()).unwrap();
        let b = WeightedPopulation::new(pts, w.iter().map(|v| v * scale).collect()).unwrap();
        let la = left_minimizer(&f, &a).unwrap().theta_l.0[0];
        let lb = left_minimizer(&f, &b).unwrap().theta_l.0[0];
        prop_assert!((la - lb).abs() < 1e-10);
    }

    #[test]
    fn pixel_mapping_round_trips(i in 0usize..64, j in 0usize..48) {
        let vp = Viewport { x_min: -4.0, x_max: -0.5, y_min: -3.0, y_max: -0.1, width_px: 64, height_px: 48 };
        let p = vp.point(i, j);
        prop_assert!(vp.contains(p));
        prop_assert_eq!(vp.nearest_pixel(p).unwrap(), (i, j));
        let px = vp.to_pixel(p);
        prop_assert!((px[0] - i as f64).abs() < 1e-9 && (px[1] - j as f64).abs() < 1e-9);
    }
}

fn brute_force_total(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], i: usize, used: &mut [bool]) -> f64 {
        if i == cost.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(cost[i][j] + go(cost, i + 1, used));
                used[j] = false;
            }
        }
        best
    }
    go(cost, 0, &mut vec![false; cost[0].len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_matching_against_optimal(
        k in 2usize..=6, t in 0.0..=1.0f64,
        coords in prop::collection::vec((-4.0..-0.2f64, -4.0..-0.2f64), 6),
        jitter in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6),
        tight in any::<bool>(),
    ) {
        let f = fam(0, t);
        let truth: Vec<NaturalParam> = coords[..k].iter().map(|c| NaturalParam(vec![c.0, c.1])).collect();
        // tight: learned centers are tiny perturbations of the truth, reversed
        let eps = if tight { 1e-6 } else { 0.5 };
        let learned: Vec<NaturalParam> = truth
            .iter()
            .zip(&jitter)
            .rev()
            .map(|(c, j)| NaturalParam(vec![(c.0[0] + eps * j.0).min(-0.05), (c.0[1] + eps * j.1).min(-0.05)]))
            .collect();
        let m = greedy_matching(&f, &truth, &learned, AxisFactor::PerAxis).unwrap();
        prop_assert_eq!(m.len(), k);
        let greedy: f64 = m.iter().map(|x| x.2).sum();
        let cost: Vec<Vec<f64>> = truth
            .iter()
            .map(|a| learned.iter().map(|b| symmetrized(&f, a, b, AxisFactor::PerAxis).unwrap()).collect())
            .collect();
        let best = brute_force_total(&cost);
        prop_assert!(greedy >= best - 1e-12);
        let well_separated = (0..k).all(|i| (0..k).all(|j| i == j || cost[i][k - 1 - i] * 1e3 < cost[i][k - 1 - j]));
        if tight && well_separated {
            prop_assert!((greedy - best).abs() < 1e-12);
        }
    }
}
