mod common;

use common::*;
use indsup::cli::{build_scenario, canonical_config, parse_config};
use indsup::complexity::gamma_bar;
use indsup::learning::{erm, summarize, theorem_bound, CurveRecord};
use indsup::separation::{pairwise_separation, separation_degree};
use indsup::spaces::{kl, total_variation, Distribution};
use proptest::prelude::*;

fn dist(seed: u64, s: usize, zeros: bool) -> Distribution {
    Distribution::from_weights(&random_probs(&mut rng(seed), s, zeros)).unwrap()
}

fn tiny() -> TinySpec {
    TinySpec {
        n: 1..=3,
        c: 2..=4,
        s: 2..=5,
        t: 1..=4,
        max_tables: 12,
        all_functions: false,
        zeros: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kl_is_nonnegative_and_zero_on_the_diagonal(a in any::<u64>(), b in any::<u64>(), s in 2usize..8) {
        let (p, q) = (dist(a, s, true), dist(b, s, true));
        prop_assert!(kl(&p, &q).unwrap().value() >= 0.0);
        prop_assert_eq!(kl(&p, &p).unwrap().value(), 0.0);
        let reference = naive_kl(p.probs(), q.probs());
        prop_assert!(close(kl(&p, &q).unwrap().value(), reference, 1e-12));
    }

    #[test]
    fn total_variation_is_a_metric_below_pinsker(a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), s in 2usize..8) {
        let (p, q, r) = (dist(a, s, true), dist(b, s, true), dist(c, s, true));
        let pq = total_variation(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert_eq!(pq, total_variation(&q, &p).unwrap());
        prop_assert!(pq <= total_variation(&p, &r).unwrap() + total_variation(&r, &q).unwrap() + 1e-15);
        prop_assert!(2.0 * pq * pq <= kl(&p, &q).unwrap().value() + 1e-12);
    }

    #[test]
    fn separation_matches_the_definition(seed in any::<u64>()) {
        let scn = random_scenario(&mut rng(seed), &tiny());
        let report = separation_degree(&scn);
        prop_assert!(close(report.gamma.value(), naive_separation(&scn), 1e-12));
        if let Some(w) = report.witness {
            let a = scn.tclass().get(w.t_i).unwrap().row(w.x, w.i).unwrap();
            let b = scn.tclass().get(w.t_j).unwrap().row(w.x, w.j).unwrap();
            prop_assert_eq!(naive_kl(a.probs(), b.probs()), report.gamma.value());
            prop_assert_eq!(scn.h0()[w.x], w.i);
        }
        for p in &report.pairwise {
            prop_assert!(p.value.value() >= report.gamma.value());
            prop_assert_eq!(&pairwise_separation(&scn, p.from, p.to).unwrap(), p);
        }
    }

    #[test]
    fn erm_never_loses_to_the_truth(seed in any::<u64>(), m in 1usize..60) {
        let scn = random_scenario(&mut rng(seed), &tiny());
        let data = scn.sample_dataset(m, seed).unwrap();
        let fit = erm(&scn, &data).unwrap();
        let truth = naive_empirical_risk(scn.h0(), scn.t0(), &data, scn.loss());
        prop_assert!(fit.empirical_risk <= truth + 1e-12);
        prop_assert!(fit.ties >= 1);
        prop_assert_eq!(scn.sample_dataset(m, seed).unwrap(), data);
    }

    #[test]
    fn gamma_bar_respects_sauer(m in 1u64..3000, d in 0u64..40) {
        let g = gamma_bar(m, d).unwrap();
        let k = d.min(m);
        prop_assert!(g >= std::f64::consts::LN_2);
        prop_assert!(g <= gamma_bar(m, d + 1).unwrap());
        if k == m {
            prop_assert!((g - (m as f64 + 1.0) * std::f64::consts::LN_2).abs() <= 1e-9 * g);
        } else if k > 0 {
            let sauer = std::f64::consts::LN_2 + k as f64 * (std::f64::consts::E * m as f64 / k as f64).ln();
            prop_assert!(g <= sauer + 1e-12);
        }
    }

    #[test]
    fn gamma_bar_log_space_agrees_with_exact(m in 2001u64..6000, extra in 0u64..50) {
        // d above 2000 takes the log-space path; its neighbour below is exact
        let hi = gamma_bar(m, 2001 + extra).unwrap();
        let lo = gamma_bar(m, 2000).unwrap();
        prop_assert!(hi >= lo - 1e-9);
        prop_assert!(hi <= (m as f64 + 1.0) * std::f64::consts::LN_2 + 1e-9);
    }

    #[test]
    fn bound_is_positive_and_linear_in_b(b in 0.01f64..5.0, eta in 0.01f64..2.0, d in 0u64..20, m in 1u64..100_000, delta in 0.001f64..0.999) {
        let v = theorem_bound(b, eta, d, m, delta).unwrap();
        prop_assert!(v > 0.0 && v.is_finite());
        let doubled = theorem_bound(2.0 * b, eta, d, m, delta).unwrap();
        prop_assert!((doubled - 2.0 * v).abs() <= 1e-12 * doubled);
    }

    #[test]
    fn summary_quantiles_are_ordered(risks in proptest::collection::vec(0.0f64..1.0, 1..50)) {
        let records: Vec<CurveRecord> = risks
            .iter()
            .enumerate()
            .map(|(k, &risk)| CurveRecord { m: 10, trial: k as u64, seed: k as u64, risk, bound: 1.0, b: 1.0, eta: 1.0, d: 1, delta: 0.05, ties: 1 })
            .collect();
        let s = &summarize(&records)[0];
        let lo = risks.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = risks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= s.q05 && s.q05 <= s.q95 && s.q95 <= hi);
        prop_assert!(lo - 1e-12 <= s.mean_risk && s.mean_risk <= hi + 1e-12);
    }

    #[test]
    fn generated_configs_round_trip(seed in any::<u64>(), rows in 2usize..4, cols in 2usize..4, members in 1usize..3) {
        let mut r = rng(seed);
        let matrices: Vec<Vec<Vec<f64>>> = (0..members).map(|_| random_matrix(&mut r, rows, cols, false)).collect();
        let h0: Vec<String> = (0..2).map(|x| format!("\"y{}\"", x % rows)).collect();
        let text = format!(
            "seed = {seed}\n[scenario]\ninstances = 2\nlabels = {rows}\nh0 = [{}]\nt0 = 0\n\
             [scenario.hypotheses]\nkind = \"all_functions\"\n\
             [scenario.transitions]\nkind = \"explicit\"\nmatrices = {:?}\n",
            h0.join(", "),
            matrices
        );
        let cfg = parse_config(&text).unwrap();
        let canon = canonical_config(&cfg).unwrap();
        let again = parse_config(&canon).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(canonical_config(&again).unwrap(), canon);
        prop_assert!(build_scenario(&cfg.scenario).is_ok());
    }
}
