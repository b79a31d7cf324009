mod check;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ddcolor::cover::{dsatur, extract_coloring, verify_cover};
use ddcolor::dd::{compile_exact, DdError, DecisionDiagram, DEFAULT_NODE_LIMIT};
use ddcolor::flow::{
    flow_to_cover, solve_fractional_until, solve_integral, FlowError, IntegralOptions, WeightedCover,
};
use ddcolor::graph::{parse_dimacs_with_warnings, Graph, OrderingKind, VertexOrdering};
use ddcolor::ratlp::{IlpStatus, LpError, Rational};

#[derive(Parser)]
#[command(name = "ddcolor", version, about = "Coloring bounds from decision diagrams of stable sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fractional and integral chromatic bounds for a DIMACS graph.
    Bounds(SolveArgs),
    /// Optimal coloring from the integral flow model, in DIMACS solution format.
    Color(SolveArgs),
    /// Property suite on seeded random graphs.
    Check(check::CheckArgs),
    /// Check a weighted stable-set cover against a graph.
    VerifyCover { graph: PathBuf, cover: PathBuf },
    /// Print the exact decision diagram of a graph.
    Dump {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Order::Identity)]
        order: Order,
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        node_limit: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Lp,
    Ilp,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Identity,
    Degree,
    Reverse,
}

impl From<Order> for OrderingKind {
    fn from(o: Order) -> Self {
        match o {
            Order::Identity => OrderingKind::Identity,
            Order::Degree => OrderingKind::DegreeDescending,
            Order::Reverse => OrderingKind::Reverse,
        }
    }
}

#[derive(clap::Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    #[arg(long, value_enum, default_value_t = Order::Identity)]
    order: Order,
    /// Solver time limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Exit {
    Ok = 0,
    Failure = 1,
    Parse = 2,
    NodeLimit = 3,
    Timeout = 4,
}

struct Failed {
    code: Exit,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failed {
    fn from(error: anyhow::Error) -> Self {
        Failed {
            code: Exit::Failure,
            error,
        }
    }
}

type CmdResult = Result<Exit, Failed>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(args) => cmd_bounds(&args),
        Command::Color(args) => cmd_color(&args),
        Command::Check(args) => check::run(&args),
        Command::VerifyCover { graph, cover } => cmd_verify_cover(&graph, &cover),
        Command::Dump {
            file,
            order,
            node_limit,
        } => cmd_dump(&file, order, node_limit),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code as u8)
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph, Failed> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = parse_dimacs_with_warnings(&text).map_err(|e| Failed {
        code: Exit::Parse,
        error: anyhow!(e).context(format!("parsing {}", path.display())),
    })?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.graph)
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn secs(d: Duration) -> f64 {
    (d.as_secs_f64() * 1000.0).round() / 1000.0
}

#[derive(Serialize)]
struct RationalJson {
    num: String,
    den: String,
}

#[derive(Serialize)]
struct BoundsReport {
    instance: String,
    status: &'static str,
    n: usize,
    m: usize,
    dd_nodes: Option<usize>,
    dd_arcs: Option<usize>,
    dd_time_s: f64,
    chi_f: Option<RationalJson>,
    chi_lb: Option<usize>,
    chi_ub: usize,
    dsatur_ub: usize,
    ilp_status: Option<&'static str>,
    solve_time_s: f64,
    #[serde(skip)]
    chi_f_exact: Option<Rational>,
}

fn ilp_status_name(s: IlpStatus) -> &'static str {
    match s {
        IlpStatus::Optimal => "optimal",
        IlpStatus::Infeasible => "infeasible",
        IlpStatus::Unbounded => "unbounded",
        IlpStatus::TimedOut => "timeout",
    }
}

fn compile(g: &Graph, order: Order, node_limit: usize) -> Result<(DecisionDiagram, Duration), DdError> {
    let start = Instant::now();
    let ordering = VertexOrdering::of_kind(order.into(), g);
    let d = compile_exact(g, &ordering, node_limit)?;
    Ok((d, start.elapsed()))
}

fn cmd_bounds(args: &SolveArgs) -> CmdResult {
    let g = load_graph(&args.file)?;
    let dsatur_ub = dsatur(&g).color_count();
    let mut report = BoundsReport {
        instance: instance_name(&args.file),
        status: "ok",
        n: g.n(),
        m: g.m(),
        dd_nodes: None,
        dd_arcs: None,
        dd_time_s: 0.0,
        chi_f: None,
        chi_lb: None,
        chi_ub: dsatur_ub,
        dsatur_ub,
        ilp_status: None,
        solve_time_s: 0.0,
        chi_f_exact: None,
    };
    let code = fill_bounds(args, &g, &mut report)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
    } else {
        print_bounds(&report);
    }
    Ok(code)
}

fn fill_bounds(args: &SolveArgs, g: &Graph, report: &mut BoundsReport) -> Result<Exit, Failed> {
    let dd_start = Instant::now();
    let d = match compile(g, args.order, args.node_limit) {
        Ok((d, _)) => d,
        Err(e @ DdError::NodeLimitExceeded { .. }) => {
            report.dd_time_s = secs(dd_start.elapsed());
            report.status = "node_limit";
            eprintln!("error: {e}");
            return Ok(Exit::NodeLimit);
        }
        Err(e) => return Err(anyhow!(e).into()),
    };
    report.dd_time_s = secs(dd_start.elapsed());
    report.dd_nodes = Some(d.node_count());
    report.dd_arcs = Some(d.arc_count());

    let solve_start = Instant::now();
    let deadline = solve_start + Duration::from_secs_f64(args.time_limit.max(0.0));
    let mut code = Exit::Ok;
    if args.mode != Mode::Ilp {
        match solve_fractional_until(&d, g, Some(deadline)) {
            Ok(sol) => {
                let lb = usize::try_from(sol.chi_f.ceil().to_i64().unwrap_or(0)).unwrap_or(0);
                report.chi_lb = Some(lb);
                report.chi_f = Some(RationalJson {
                    num: sol.chi_f.numer().to_string(),
                    den: sol.chi_f.denom().to_string(),
                });
                report.chi_f_exact = Some(sol.chi_f);
            }
            Err(FlowError::Lp(LpError::TimeLimit)) => {
                report.status = "timeout";
                code = Exit::Timeout;
            }
            Err(e) => return Err(anyhow!(e).into()),
        }
    }
    if args.mode != Mode::Lp && code == Exit::Ok {
        let opts = IntegralOptions {
            time_limit: Some(deadline.saturating_duration_since(Instant::now())),
            dsatur_incumbent: true,
        };
        let sol = solve_integral(&d, g, &opts).map_err(|e| anyhow!(e))?;
        report.ilp_status = Some(ilp_status_name(sol.status));
        if let Some(best) = sol.best {
            report.chi_ub = report.chi_ub.min(best);
        }
        if let Some(lb) = sol.lower_bound {
            report.chi_lb = Some(report.chi_lb.map_or(lb, |x| x.max(lb)));
        }
        if sol.status == IlpStatus::TimedOut {
            report.status = "timeout";
            code = Exit::Timeout;
        }
    }
    report.solve_time_s = secs(solve_start.elapsed());
    Ok(code)
}

fn print_bounds(r: &BoundsReport) {
    let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    println!("instance     {}", r.instance);
    println!("status       {}", r.status);
    println!("vertices     {}", r.n);
    println!("edges        {}", r.m);
    println!("dd_nodes     {}", opt(r.dd_nodes));
    println!("dd_arcs      {}", opt(r.dd_arcs));
    println!("dd_time_s    {:.3}", r.dd_time_s);
    if let Some(q) = &r.chi_f_exact {
        println!("chi_f        {} ({})", q, q.to_decimal_truncated(2));
    }
    println!("chi_lb       {}", opt(r.chi_lb));
    println!("chi_ub       {}", r.chi_ub);
    println!("dsatur_ub    {}", r.dsatur_ub);
    if let Some(s) = r.ilp_status {
        println!("ilp_status   {s}");
    }
    println!("solve_time_s {:.3}", r.solve_time_s);
}

fn cmd_color(args: &SolveArgs) -> CmdResult {
    let g = load_graph(&args.file)?;
    let d = match compile(&g, args.order, args.node_limit) {
        Ok((d, _)) => d,
        Err(e @ DdError::NodeLimitExceeded { .. }) => {
            eprintln!("error: {e}");
            println!("c dsatur_ub {}", dsatur(&g).color_count());
            return Ok(Exit::NodeLimit);
        }
        Err(e) => return Err(anyhow!(e).into()),
    };
    let opts = IntegralOptions {
        time_limit: Some(Duration::from_secs_f64(args.time_limit.max(0.0))),
        dsatur_incumbent: true,
    };
    let sol = solve_integral(&d, &g, &opts).map_err(|e| anyhow!(e))?;
    let Some(flow) = &sol.flow else {
        return Err(anyhow!("no integral flow found ({})", ilp_status_name(sol.status)).into());
    };
    let cover = flow_to_cover(flow, &d).map_err(|e| anyhow!(e))?;
    let coloring = extract_coloring(&g, &cover).map_err(|e| anyhow!(e))?;
    if !coloring.is_proper(&g) {
        return Err(anyhow!("extracted coloring is not proper").into());
    }
    let optimal = sol.status == IlpStatus::Optimal;
    println!("c status {}", if optimal { "optimal" } else { "non-optimal" });
    println!("c verified proper");
    print!("{}", coloring.to_dimacs());
    Ok(if optimal { Exit::Ok } else { Exit::Timeout })
}

fn cmd_verify_cover(graph: &Path, cover: &Path) -> CmdResult {
    let g = load_graph(graph)?;
    let text = fs::read_to_string(cover).with_context(|| format!("reading {}", cover.display()))?;
    let z = WeightedCover::parse(&text).map_err(|e| Failed {
        code: Exit::Parse,
        error: anyhow!(e).context(format!("parsing {}", cover.display())),
    })?;
    let r = verify_cover(&g, &z);
    let verdict = |ok: bool| if ok { "pass" } else { "fail" };
    println!("stable   {}", verdict(r.stable_ok()));
    for (s, (u, v)) in &r.unstable {
        let ids: Vec<String> = s.iter().map(|x| (x + 1).to_string()).collect();
        println!("  set {{{}}} contains edge {}-{}", ids.join(","), u + 1, v + 1);
    }
    for v in &r.out_of_range {
        println!("  vertex {} out of range", v + 1);
    }
    println!("coverage {}", verdict(r.coverage_ok()));
    for (v, c) in &r.undercovered {
        println!("  vertex {} covered {}", v + 1, c);
    }
    if r.nonpositive_weights > 0 {
        println!("weights  fail");
        println!("  {} nonpositive weights", r.nonpositive_weights);
    }
    println!("total    {}", r.total);
    Ok(if r.passed() { Exit::Ok } else { Exit::Failure })
}

fn cmd_dump(file: &Path, order: Order, node_limit: usize) -> CmdResult {
    let g = load_graph(file)?;
    match compile(&g, order, node_limit) {
        Ok((d, _)) => {
            print!("{}", d.dump());
            Ok(Exit::Ok)
        }
        Err(e @ DdError::NodeLimitExceeded { .. }) => Err(Failed {
            code: Exit::NodeLimit,
            error: anyhow!(e),
        }),
        Err(e) => Err(anyhow!(e).into()),
    }
}
