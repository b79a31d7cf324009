use ddcolor::cover::{dsatur, extract_coloring, verify_cover};
use ddcolor::dd::{compile_exact, count_paths, enumerate_paths, validate, DecisionDiagram, DEFAULT_NODE_LIMIT};
use ddcolor::flow::{
    build_flow_model, cover_to_flow, flow_to_cover, solve_fractional, solve_integral, IntegralOptions, WeightedCover,
};
use ddcolor::graph::{
    make_complete, make_cycle, make_edgeless, make_mycielski, make_petersen, make_queen, parse_dimacs, Graph,
    VertexOrdering,
};
use ddcolor::oracle::{count_stable_sets, vclp_basic_optimum, vclp_solve};
use ddcolor::ratlp::{ilp_solve, lp_solve, IlpOptions, LpModel, Rational, Relation};
use num_bigint::BigUint;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

/// The 4-vertex graph with edges 13, 34, 42, 21, 32 (1-based).
fn fig1() -> Graph {
    parse_dimacs("p edge 4 5\ne 1 3\ne 3 4\ne 4 2\ne 2 1\ne 3 2\n").unwrap()
}

fn dd(g: &Graph) -> DecisionDiagram {
    compile_exact(g, &VertexOrdering::identity(g.n()), DEFAULT_NODE_LIMIT).unwrap()
}

fn sorted_paths(d: &DecisionDiagram) -> Vec<Vec<usize>> {
    let mut paths = enumerate_paths(d, 100).unwrap();
    paths.sort();
    paths
}

#[test]
fn parsing() {
    let g = parse_dimacs("p edge 3 2\ne 1 2\ne 2 3").unwrap();
    assert_eq!(g.n(), 3);
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    let g = parse_dimacs("c hi\np edge 2 2\ne 1 2\ne 2 1").unwrap();
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    let m3 = make_mycielski(3);
    assert_eq!((m3.n(), m3.m()), (11, 20));
    assert_eq!(parse_dimacs(&m3.to_dimacs()).unwrap().m(), 20);
}

#[test]
fn generators() {
    let c5 = make_cycle(5);
    assert_eq!((c5.n(), c5.m()), (5, 5));
    assert!((0..5).all(|v| c5.degree(v) == 2));
    assert_eq!(make_complete(4).m(), 6);
    let p = make_petersen();
    assert_eq!((p.n(), p.m()), (10, 15));
    assert!((0..10).all(|v| p.degree(v) == 3));
}

#[test]
fn diagram_examples() {
    let g = fig1();
    let d = dd(&g);
    assert_eq!(d.layer_sizes(), vec![1, 2, 3, 2, 1]);
    assert_eq!(d.node_count(), 9);
    assert_eq!(d.nodes()[d.root()].state.iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert_eq!(count_paths(&d), BigUint::from(6u32));
    assert_eq!(
        sorted_paths(&d),
        vec![vec![], vec![0], vec![0, 3], vec![1], vec![2], vec![3]]
    );
    assert!(validate(&d, &g, 1 << 20).is_valid());

    let e3 = dd(&make_edgeless(3));
    assert_eq!(e3.node_count(), 4);
    assert_eq!(e3.arc_count(), 6);
    assert_eq!(count_paths(&e3), BigUint::from(8u32));
    assert_eq!(count_paths(&dd(&make_complete(4))), BigUint::from(5u32));
    assert_eq!(
        sorted_paths(&dd(&make_complete(3))),
        vec![vec![], vec![0], vec![1], vec![2]]
    );
    assert_eq!(
        sorted_paths(&dd(&make_edgeless(2))),
        vec![vec![], vec![0], vec![0, 1], vec![1]]
    );

    for g in [make_mycielski(3), make_queen(5, 5)] {
        let d = dd(&g);
        let stable = count_stable_sets(&g, usize::MAX).unwrap();
        assert_eq!(count_paths(&d), BigUint::from(stable));
    }
}

#[test]
fn lp_examples() {
    let mut m = LpModel::new();
    let x = m.add_var(q("0"), Some(q("10")), q("1"));
    m.add_constraint([(x, q("1"))], Relation::Ge, q("1"));
    assert_eq!(lp_solve(&m).unwrap().objective, q("1"));

    let mut m = LpModel::new();
    let x = m.add_var(q("0"), Some(q("1")), q("1"));
    let y = m.add_var(q("0"), Some(q("2")), q("1"));
    m.add_constraint([(x, q("1")), (y, q("1"))], Relation::Ge, q("5/2"));
    let s = lp_solve(&m).unwrap();
    assert_eq!(s.objective, q("5/2"));
    assert!(s.certify(&m));

    let mut m = LpModel::new();
    let x = m.add_var(q("0"), Some(q("10")), q("1"));
    m.add_constraint([(x, q("1"))], Relation::Ge, q("3/2"));
    let r = ilp_solve(&m, &[x], &IlpOptions::default()).unwrap();
    assert_eq!(r.incumbent.unwrap().objective, q("2"));

    assert_eq!(vclp_solve(&make_cycle(5)).unwrap(), q("5/2"));
}

#[test]
fn flow_model_examples() {
    let g = fig1();
    let m = build_flow_model(&dd(&g), &g, true).unwrap();
    assert_eq!(
        (m.lp.num_vars(), m.cover_rows.len(), m.conservation_rows.len()),
        (12, 4, 7)
    );
    let e1 = make_edgeless(1);
    let m = build_flow_model(&dd(&e1), &e1, true).unwrap();
    assert_eq!(
        (m.lp.num_vars(), m.cover_rows.len(), m.conservation_rows.len()),
        (2, 1, 0)
    );
    let k4 = make_complete(4);
    assert_eq!(solve_fractional(&dd(&k4), &k4).unwrap().chi_f, q("4"));
    let c5 = make_cycle(5);
    assert_eq!(solve_fractional(&dd(&c5), &c5).unwrap().chi_f, q("5/2"));
    let p = make_petersen();
    assert_eq!(solve_fractional(&dd(&p), &p).unwrap().chi_f, q("5/2"));
}

#[test]
fn integral_examples() {
    for (g, chi) in [(fig1(), 3), (make_mycielski(3), 4), (make_queen(5, 5), 5)] {
        let d = dd(&g);
        let s = solve_integral(&d, &g, &IntegralOptions::default()).unwrap();
        assert_eq!(s.chi(), Some(chi));
        let cover = flow_to_cover(s.flow.as_ref().unwrap(), &d).unwrap();
        let report = verify_cover(&g, &cover);
        assert!(report.passed());
        assert_eq!(report.total, Rational::from(chi));
        let coloring = extract_coloring(&g, &cover).unwrap();
        assert!(coloring.is_proper(&g));
        assert!(coloring.color_count() <= chi);
    }
}

#[test]
fn transformation_examples() {
    let g = fig1();
    let d = dd(&g);
    let model = build_flow_model(&d, &g, true).unwrap();
    let z = WeightedCover::new(vec![(vec![0, 3], q("1")), (vec![1], q("1")), (vec![2], q("1"))]);
    let y = cover_to_flow(&z, &d).unwrap();
    assert!(model.lp.is_feasible(&y));
    assert_eq!(model.lp.objective_value(&y), q("3"));
    assert_eq!(flow_to_cover(&y, &d).unwrap().total_weight(), q("3"));

    let empty = WeightedCover::new(vec![(vec![], q("1"))]);
    let y = cover_to_flow(&empty, &d).unwrap();
    assert!(!model.lp.is_feasible(&y));

    let c5 = make_cycle(5);
    let d5 = dd(&c5);
    let (_, basic) = vclp_basic_optimum(&c5).unwrap();
    let y = cover_to_flow(&basic, &d5).unwrap();
    let m5 = build_flow_model(&d5, &c5, true).unwrap();
    assert!(m5.lp.is_feasible(&y));
    assert_eq!(m5.lp.objective_value(&y), q("5/2"));

    let frac = solve_fractional(&d5, &c5).unwrap();
    let cover = flow_to_cover(&frac.flow, &d5).unwrap();
    assert_eq!(cover.total_weight(), q("5/2"));
    assert!(verify_cover(&c5, &cover).passed());
}

#[test]
fn cover_examples() {
    let g = fig1();
    let good = WeightedCover::new(vec![(vec![0, 3], q("1")), (vec![1], q("1")), (vec![2], q("1"))]);
    let r = verify_cover(&g, &good);
    assert!(r.passed());
    assert_eq!(r.total, q("3"));
    // {2,3} in 1-based ids
    let bad = WeightedCover::new(vec![(vec![1, 2], q("1"))]);
    assert!(!verify_cover(&g, &bad).stable_ok());
    let halves = WeightedCover::new(vec![(vec![0], q("1/2")), (vec![0], q("1/2"))]);
    let r = verify_cover(&make_edgeless(1), &halves);
    assert!(r.passed());
    assert_eq!(r.total, q("1"));

    let e = make_edgeless(5);
    let all = WeightedCover::new(vec![((0..5).collect(), q("1"))]);
    assert_eq!(extract_coloring(&e, &all).unwrap().color_count(), 1);

    assert_eq!(dsatur(&make_complete(4)).color_count(), 4);
    assert_eq!(dsatur(&make_cycle(5)).color_count(), 3);
    assert_eq!(dsatur(&make_mycielski(3)).color_count(), 4);
}
