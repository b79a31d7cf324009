use ddcolor::cover::{dsatur, extract_coloring, verify_cover};
use ddcolor::dd::{compile_exact, count_paths, enumerate_paths, validate, DdError, DEFAULT_NODE_LIMIT};
use ddcolor::flow::{
    build_flow_model, cover_to_flow, decompose_paths, flow_to_cover, solve_fractional, solve_integral,
    IntegralOptions, WeightedCover,
};
use ddcolor::graph::{make_gnp, Graph, OrderingKind, VertexOrdering};
use ddcolor::oracle::{chromatic_number_bf, enumerate_stable_sets, vclp_basic_optimum};
use ddcolor::ratlp::{lp_solve, Rational};
use num_bigint::BigUint;
use proptest::prelude::*;

fn density() -> impl Strategy<Value = Rational> {
    prop_oneof![
        Just(Rational::new(1, 5).unwrap()),
        Just(Rational::new(1, 2).unwrap()),
        Just(Rational::new(4, 5).unwrap()),
    ]
}

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n, density(), any::<u64>()).prop_map(|(n, p, seed)| make_gnp(n, &p, seed))
}

fn identity_dd(g: &Graph) -> ddcolor::dd::DecisionDiagram {
    compile_exact(g, &VertexOrdering::identity(g.n()), DEFAULT_NODE_LIMIT).unwrap()
}

/// Random weighted maximal stable sets, topped up so every vertex is
/// covered at least once.
fn random_cover(g: &Graph, picks: &[(usize, u8)]) -> WeightedCover {
    let sets = enumerate_stable_sets(g, true).unwrap();
    let mut entries: Vec<(Vec<usize>, Rational)> = picks
        .iter()
        .map(|&(k, w)| (sets[k % sets.len()].clone(), Rational::new(i64::from(w % 7) + 1, 3).unwrap()))
        .collect();
    let coverage = WeightedCover::new(entries.clone()).coverage(g.n());
    for (v, c) in coverage.iter().enumerate() {
        if *c < Rational::one() {
            let s = sets.iter().find(|s| s.contains(&v)).unwrap().clone();
            entries.push((s, Rational::one()));
        }
    }
    WeightedCover::new(entries)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_relaxation_matches_set_cover_lp(g in graph(10)) {
        let d = identity_dd(&g);
        let (vclp, _) = vclp_basic_optimum(&g).unwrap();
        prop_assert_eq!(solve_fractional(&d, &g).unwrap().chi_f, vclp);
    }

    #[test]
    fn fractional_lp_certifies(g in graph(9)) {
        let d = identity_dd(&g);
        let model = build_flow_model(&d, &g, true).unwrap();
        let sol = lp_solve(&model.lp).unwrap();
        prop_assert!(sol.certify(&model.lp));
    }

    #[test]
    fn round_trip_preserves_weight(g in graph(9), picks in prop::collection::vec((0usize..64, any::<u8>()), 0..6)) {
        let d = identity_dd(&g);
        let z = random_cover(&g, &picks);
        prop_assert!(verify_cover(&g, &z).passed());
        let y = cover_to_flow(&z, &d).unwrap();
        let model = build_flow_model(&d, &g, true).unwrap();
        prop_assert!(model.lp.is_feasible(&y) || y.iter().any(|v| v > &Rational::from(g.n())));
        let back = flow_to_cover(&y, &d).unwrap();
        prop_assert_eq!(back.total_weight(), z.total_weight());
        prop_assert!(verify_cover(&g, &back).passed());
    }

    #[test]
    fn basic_cover_support_is_at_most_n_squared(g in graph(10)) {
        let d = identity_dd(&g);
        let (_, basic) = vclp_basic_optimum(&g).unwrap();
        prop_assert!(basic.len() <= g.n());
        prop_assert!(basic.entries().iter().all(|(_, w)| w <= &Rational::one()));
        let y = cover_to_flow(&basic, &d).unwrap();
        let support = y.iter().filter(|v| v.is_positive()).count();
        prop_assert!(support <= g.n() * g.n());
    }

    #[test]
    fn lp_flow_decomposes_into_a_valid_cover(g in graph(10)) {
        let d = identity_dd(&g);
        let frac = solve_fractional(&d, &g).unwrap();
        let paths = decompose_paths(&frac.flow, &d).unwrap();
        prop_assert!(paths.len() <= d.arc_count());
        let cover = flow_to_cover(&frac.flow, &d).unwrap();
        prop_assert_eq!(cover.total_weight(), frac.chi_f);
        prop_assert!(verify_cover(&g, &cover).passed());
    }

    #[test]
    fn integral_flow_gives_chromatic_number(g in graph(9)) {
        let d = identity_dd(&g);
        let chi = chromatic_number_bf(&g).unwrap();
        let frac = solve_fractional(&d, &g).unwrap().chi_f;
        prop_assert!(Rational::from(chi) >= frac.ceil());
        let s = solve_integral(&d, &g, &IntegralOptions::default()).unwrap();
        prop_assert_eq!(s.chi(), Some(chi));
        let cover = flow_to_cover(s.flow.as_ref().unwrap(), &d).unwrap();
        let coloring = extract_coloring(&g, &cover).unwrap();
        prop_assert!(coloring.is_proper(&g));
        prop_assert!(coloring.color_count() <= chi);
        prop_assert!(dsatur(&g).color_count() >= chi);
    }

    #[test]
    fn paths_are_exactly_the_stable_sets(g in graph(14)) {
        let d = identity_dd(&g);
        let mut paths = enumerate_paths(&d, 1 << 20).unwrap();
        paths.sort();
        prop_assert_eq!(paths, enumerate_stable_sets(&g, false).unwrap());
        prop_assert!(validate(&d, &g, 1 << 20).is_valid());
    }

    #[test]
    fn path_count_ignores_ordering(g in graph(12)) {
        let counts: Vec<BigUint> = [OrderingKind::Identity, OrderingKind::DegreeDescending, OrderingKind::Reverse]
            .into_iter()
            .map(|k| {
                let d = compile_exact(&g, &VertexOrdering::of_kind(k, &g), DEFAULT_NODE_LIMIT).unwrap();
                prop_assert!(validate(&d, &g, 1 << 20).is_valid());
                Ok(count_paths(&d))
            })
            .collect::<Result<_, TestCaseError>>()?;
        prop_assert!(counts.windows(2).all(|w| w[0] == w[1]));
        let chi_f: Vec<Rational> = [OrderingKind::Identity, OrderingKind::Reverse]
            .into_iter()
            .map(|k| {
                let d = compile_exact(&g, &VertexOrdering::of_kind(k, &g), DEFAULT_NODE_LIMIT).unwrap();
                solve_fractional(&d, &g).unwrap().chi_f
            })
            .collect();
        prop_assert_eq!(&chi_f[0], &chi_f[1]);
    }

    #[test]
    fn node_limit_is_monotone(g in graph(12), small in 1usize..80, extra in 0usize..80) {
        let ordering = VertexOrdering::identity(g.n());
        let at_small = compile_exact(&g, &ordering, small);
        let at_large = compile_exact(&g, &ordering, small + extra);
        if at_small.is_ok() {
            prop_assert!(at_large.is_ok());
        }
        let full = identity_dd(&g).node_count();
        match at_small {
            Ok(d) => prop_assert_eq!(d.node_count(), full),
            Err(DdError::NodeLimitExceeded { limit, nodes, .. }) => {
                prop_assert_eq!(limit, small);
                prop_assert!(nodes > small);
                prop_assert!(full > small);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
