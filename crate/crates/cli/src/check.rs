//! Seeded property suite over random graphs.

use anyhow::anyhow;

use ddcolor::cover::verify_cover;
use ddcolor::dd::{compile_exact, validate, DEFAULT_NODE_LIMIT};
use ddcolor::flow::{cover_to_flow, flow_to_cover, solve_fractional, solve_integral, IntegralOptions};
use ddcolor::graph::{make_gnp, Graph, VertexOrdering};
use ddcolor::oracle::{chromatic_number_bf, vclp_basic_optimum, CHROMATIC_MAX_N, ENUMERATION_MAX_N};
use ddcolor::ratlp::Rational;

use crate::{CmdResult, Exit};

#[derive(clap::Args)]
pub struct CheckArgs {
    /// Largest vertex count; trials cycle through 4..=max-n.
    #[arg(long, default_value_t = 10)]
    max_n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const CHECKS: [&str; 5] = ["equivalence", "round_trip", "support_bound", "integrality", "dd_exactness"];
const DENSITIES: [(i64, i64); 3] = [(1, 5), (1, 2), (4, 5)];

struct Trial {
    n: usize,
    p: Rational,
    seed: u64,
}

/// Instance parameters of trial `t`: sizes cycle fastest, densities next.
fn trial(t: usize, max_n: usize, seed: u64) -> Trial {
    let min_n = 4.min(max_n);
    let span = max_n - min_n + 1;
    let (num, den) = DENSITIES[(t / span) % DENSITIES.len()];
    Trial {
        n: min_n + t % span,
        p: Rational::new(num, den).expect("nonzero denominator"),
        seed: seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(t as u64),
    }
}

/// One entry per check in [`CHECKS`]: `None` when it passed, otherwise
/// the reason it failed.
fn run_checks(g: &Graph) -> anyhow::Result<Vec<Option<String>>> {
    let n = g.n();
    let d = compile_exact(g, &VertexOrdering::identity(n), DEFAULT_NODE_LIMIT)?;
    let mut out = vec![None; CHECKS.len()];

    let frac = solve_fractional(&d, g)?;
    let (vclp, basic) = vclp_basic_optimum(g)?;
    if frac.chi_f != vclp {
        out[0] = Some(format!("flow LP {} vs set-cover LP {}", frac.chi_f, vclp));
    }

    let y = cover_to_flow(&basic, &d)?;
    let back = flow_to_cover(&y, &d)?;
    let lp_cover = flow_to_cover(&frac.flow, &d)?;
    if back.total_weight() != basic.total_weight() || !verify_cover(g, &back).passed() {
        out[1] = Some("cover -> flow -> cover changed the weight or broke the cover".into());
    } else if lp_cover.total_weight() != frac.chi_f || !verify_cover(g, &lp_cover).passed() {
        out[1] = Some("decomposed LP flow is not a valid cover of value chi_f".into());
    }

    let support = y.iter().filter(|v| v.is_positive()).count();
    if support > n * n {
        out[2] = Some(format!("{support} positive arcs exceed n^2 = {}", n * n));
    }

    let chi = chromatic_number_bf(g)?;
    let ilp = solve_integral(&d, g, &IntegralOptions::default())?;
    let chi_f_ceil = frac.chi_f.ceil();
    if ilp.chi() != Some(chi) {
        out[3] = Some(format!("integral flow gives {:?}, chromatic number is {chi}", ilp.chi()));
    } else if Rational::from(chi) < chi_f_ceil {
        out[3] = Some(format!("chi {chi} below ceil(chi_f) {chi_f_ceil}"));
    } else if !frac.chi_f.is_integer() && Rational::from(chi) <= frac.chi_f {
        out[3] = Some(format!("chi {chi} not above non-integral chi_f {}", frac.chi_f));
    }

    let report = validate(&d, g, usize::MAX);
    if !report.is_valid() {
        out[4] = Some(format!("{:?}", report.violations.first()));
    }
    Ok(out)
}

pub fn run(args: &CheckArgs) -> CmdResult {
    let cap = CHROMATIC_MAX_N.min(ENUMERATION_MAX_N);
    if args.max_n == 0 || args.max_n > cap {
        return Err(anyhow!("--max-n must be between 1 and {cap}").into());
    }
    let mut passes = [0usize; CHECKS.len()];
    let mut all_pass = 0usize;
    let mut first_failure: Option<String> = None;
    for t in 0..args.trials {
        let tr = trial(t, args.max_n, args.seed);
        let g = make_gnp(tr.n, &tr.p, tr.seed);
        let results = run_checks(&g).unwrap_or_else(|e| vec![Some(format!("error: {e:#}")); CHECKS.len()]);
        for (k, r) in results.iter().enumerate() {
            if r.is_none() {
                passes[k] += 1;
            }
        }
        if results.iter().all(Option::is_none) {
            all_pass += 1;
        } else if first_failure.is_none() {
            let (k, why) = results
                .iter()
                .enumerate()
                .find_map(|(k, r)| r.as_ref().map(|w| (k, w)))
                .expect("some check failed");
            first_failure = Some(format!(
                "counterexample trial {t} n={} p={} seed={} check={}: {why}\n{}",
                tr.n,
                tr.p,
                tr.seed,
                CHECKS[k],
                g.to_dimacs()
            ));
        }
    }
    println!("check max_n={} trials={} seed={}", args.max_n, args.trials, args.seed);
    for (name, p) in CHECKS.iter().zip(passes) {
        println!("{name:<14}{p}/{}", args.trials);
    }
    let ok = all_pass == args.trials;
    println!("result {} ({all_pass}/{} trials)", if ok { "pass" } else { "fail" }, args.trials);
    if let Some(f) = first_failure {
        print!("{f}");
    }
    Ok(if ok { Exit::Ok } else { Exit::Failure })
}
