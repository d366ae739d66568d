//! `algebroid` — load a groupoid chart (built-in or from a TOML file), run
//! the groupoid and algebroid verification suites, extract structure data,
//! compute section brackets and invert elements.
//!
//! Exit codes: 0 on success, 1 on verification or convergence failure, 2 on
//! usage, parse or domain errors.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use algebroid::chart::{DEFAULT_NEWTON_MAX_ITERATIONS, DEFAULT_NEWTON_TOLERANCE};
use algebroid::structure::{self, SectionSpec};
use algebroid::{axioms, chartfile, gallery, CheckResult, LocalGroupoidChart, SamplePlan};

#[derive(Parser)]
#[command(
    name = "algebroid",
    version,
    about = "Verify groupoid charts and extract Lie algebroid structure data",
    after_help = "The RAYON_NUM_THREADS environment variable overrides the worker count \
                  used by the verification suites."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct ChartSource {
    /// Built-in gallery entry name (see `list`).
    #[arg(long, conflicts_with = "chart_file")]
    example: Option<String>,
    /// Pair-groupoid dimension (only with `--example pair`).
    #[arg(long, requires = "example")]
    dim: Option<usize>,
    /// Chart file in TOML format.
    #[arg(long, required_unless_present = "example")]
    chart_file: Option<std::path::PathBuf>,
}

impl ChartSource {
    fn load(&self) -> algebroid::Result<LocalGroupoidChart> {
        match (&self.example, &self.chart_file) {
            (Some(name), _) => Ok(gallery::get_entry(name, self.dim)?.chart),
            (None, Some(path)) => chartfile::load_chart(path),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    /// Number of sample points per check.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Seed of the deterministic sample stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shrink factor applied to the domain radii when sampling, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    shrink: f64,
}

impl SampleArgs {
    fn plan(&self) -> algebroid::Result<SamplePlan> {
        SamplePlan::new(self.seed, self.samples).with_shrink(self.shrink)
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in gallery entries.
    List {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run the groupoid and algebroid verification suites.
    Verify {
        #[command(flatten)]
        source: ChartSource,
        #[command(flatten)]
        sampling: SampleArgs,
        /// Residual tolerance for the identity checks.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Extract anchor, structure functions (and optionally the bilinear
    /// term) at given or sampled base points.
    Extract {
        #[command(flatten)]
        source: ChartSource,
        /// Base point as comma-separated coordinates; repeatable. Sampled
        /// when omitted.
        #[arg(long = "point-u", value_name = "COORDS", allow_hyphen_values = true)]
        point_u: Vec<String>,
        /// Number of sampled base points when no --point-u is given.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the full bilinear tensor B in the output.
        #[arg(long)]
        full: bool,
        /// Jet truncation order for the extraction (2 or 3; results are
        /// identical, higher order exists for diagnostics).
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Bracket of two sections given by m coefficient expressions each.
    Bracket {
        #[command(flatten)]
        source: ChartSource,
        /// Coefficient expression of xi in the frame; repeat m times.
        #[arg(long, required = true, value_name = "EXPR", allow_hyphen_values = true)]
        xi: Vec<String>,
        /// Coefficient expression of eta in the frame; repeat m times.
        #[arg(long, required = true, value_name = "EXPR", allow_hyphen_values = true)]
        eta: Vec<String>,
        #[arg(long = "point-u", value_name = "COORDS", allow_hyphen_values = true)]
        point_u: Vec<String>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Invert a groupoid element by Newton iteration and report the
    /// second-order expansion diagnostics.
    Invert {
        #[command(flatten)]
        source: ChartSource,
        #[arg(long = "point-u", value_name = "COORDS", allow_hyphen_values = true)]
        point_u: Option<String>,
        /// Fiber coordinates of the element, comma-separated.
        #[arg(long, value_name = "COORDS", allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value_t = DEFAULT_NEWTON_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_NEWTON_MAX_ITERATIONS)]
        max_iterations: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Serialize)]
struct ChartInfo {
    name: String,
    n: usize,
    m: usize,
}

impl ChartInfo {
    fn of(chart: &LocalGroupoidChart) -> Self {
        ChartInfo {
            name: chart.name().to_string(),
            n: chart.n(),
            m: chart.m(),
        }
    }
}

#[derive(Serialize)]
struct ConfigInfo {
    seed: u64,
    samples: usize,
    tol: f64,
}

#[derive(Serialize)]
struct VerifyOutput {
    chart: ChartInfo,
    config: ConfigInfo,
    checks: Vec<CheckResult>,
}

#[derive(Serialize)]
struct StructureEntry {
    u: Vec<f64>,
    anchor: Vec<Vec<f64>>,
    c: structure::Tensor3,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<structure::Tensor3>,
}

#[derive(Serialize)]
struct ExtractOutput {
    chart: ChartInfo,
    config: ConfigInfo,
    structure: Vec<StructureEntry>,
}

#[derive(Serialize)]
struct BracketEntry {
    u: Vec<f64>,
    value: Vec<f64>,
}

#[derive(Serialize)]
struct BracketOutput {
    chart: ChartInfo,
    config: ConfigInfo,
    xi: Vec<String>,
    eta: Vec<String>,
    bracket: Vec<BracketEntry>,
}

#[derive(Serialize)]
struct InvertOutput {
    chart: ChartInfo,
    u: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    residual: f64,
    expansion_residual: f64,
    iterations: usize,
}

fn parse_point(text: &str) -> Result<Vec<f64>, String> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate `{part}`: {e}"))
        })
        .collect()
}

fn emit<T: Serialize>(value: &T) {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization");
    text.push('\n');
    print!("{text}");
}

fn base_points(
    chart: &LocalGroupoidChart,
    point_u: &[String],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, String> {
    if point_u.is_empty() {
        let plan = SamplePlan::new(seed, samples);
        return Ok(algebroid::chart::sample_base_points(chart, &plan));
    }
    let mut points = Vec::with_capacity(point_u.len());
    for text in point_u {
        let p = parse_point(text)?;
        if p.len() != chart.n() {
            return Err(format!(
                "--point-u has {} coordinates, chart base dimension is {}",
                p.len(),
                chart.n()
            ));
        }
        points.push(p);
    }
    Ok(points)
}

fn print_check_table(checks: &[CheckResult]) {
    println!(
        "  {:<22} {:>8} {:>14} {:>10}   result",
        "check", "samples", "max residual", "tolerance"
    );
    for c in checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        let note = match &c.note {
            Some(n) => format!("  ({n})"),
            None => String::new(),
        };
        println!(
            "  {:<22} {:>8} {:>14.3e} {:>10.1e}   {}{}",
            c.name, c.samples, c.max_residual, c.tolerance, status, note
        );
    }
}

fn print_matrix(label: &str, rows: &[Vec<f64>]) {
    println!("  {label}:");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>12.6}")).collect();
        println!("    [{}]", cells.join(", "));
    }
}

fn print_tensor_nonzeros(label: &str, t: &structure::Tensor3) {
    println!("  {label} (nonzero entries, [k][i][j]):");
    let mut any = false;
    for (k, tk) in t.iter().enumerate() {
        for (i, tki) in tk.iter().enumerate() {
            for (j, value) in tki.iter().enumerate() {
                if value.abs() > 1e-14 {
                    println!("    [{k}][{i}][{j}] = {value:.12}");
                    any = true;
                }
            }
        }
    }
    if !any {
        println!("    (all zero)");
    }
}

fn run() -> Result<i32, (i32, String)> {
    let cli = Cli::parse();
    match cli.command {
        Command::List { format } => {
            let names = gallery::list_entries();
            match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Entry {
                        name: &'static str,
                        n: usize,
                        m: usize,
                        note: String,
                    }
                    let entries: Vec<Entry> = names
                        .iter()
                        .map(|name| {
                            let e = gallery::get_entry(name, None).expect("gallery entry");
                            Entry {
                                name,
                                n: e.chart.n(),
                                m: e.chart.m(),
                                note: e.note,
                            }
                        })
                        .collect();
                    emit(&entries);
                }
                Format::Text => {
                    println!("{:<18} {:>3} {:>3}  description", "name", "n", "m");
                    for name in names {
                        let e = gallery::get_entry(name, None).expect("gallery entry");
                        println!("{:<18} {:>3} {:>3}  {}", name, e.chart.n(), e.chart.m(), e.note);
                    }
                }
            }
            Ok(0)
        }
        Command::Verify {
            source,
            sampling,
            tol,
            format,
        } => {
            let chart = source.load().map_err(usage)?;
            let plan = sampling.plan().map_err(usage)?;
            let groupoid = axioms::run_groupoid_suite(&chart, &plan, tol);
            let algebroid_report = structure::run_algebroid_suite(&chart, &plan, tol);
            let all_pass = groupoid.all_pass() && algebroid_report.all_pass();
            let checks: Vec<CheckResult> = groupoid
                .checks
                .into_iter()
                .chain(algebroid_report.checks)
                .collect();
            match format {
                Format::Json => emit(&VerifyOutput {
                    chart: ChartInfo::of(&chart),
                    config: ConfigInfo {
                        seed: plan.seed(),
                        samples: plan.count(),
                        tol,
                    },
                    checks,
                }),
                Format::Text => {
                    println!(
                        "chart {} (n={}, m={}), {} samples, seed {}",
                        chart.name(),
                        chart.n(),
                        chart.m(),
                        plan.count(),
                        plan.seed()
                    );
                    print_check_table(&checks);
                    println!("overall: {}", if all_pass { "pass" } else { "FAIL" });
                }
            }
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::Extract {
            source,
            point_u,
            samples,
            seed,
            full,
            order,
            format,
        } => {
            let chart = source.load().map_err(usage)?;
            let order = match order {
                None => 2,
                Some(k @ 2..=3) => k,
                Some(k) => {
                    return Err((
                        2,
                        format!("--order {k} unsupported: bilinear extraction needs order 2 or 3"),
                    ))
                }
            };
            let points = base_points(&chart, &point_u, samples, seed).map_err(|m| (2, m))?;
            let mut entries = Vec::with_capacity(points.len());
            for u in &points {
                let data =
                    structure::structure_data_at_with_order(&chart, u, order).map_err(usage)?;
                entries.push(StructureEntry {
                    u: data.u,
                    anchor: data.anchor,
                    c: data.c,
                    b: full.then_some(data.bilinear),
                });
            }
            match format {
                Format::Json => emit(&ExtractOutput {
                    chart: ChartInfo::of(&chart),
                    config: ConfigInfo {
                        seed,
                        samples: points.len(),
                        tol: 0.0,
                    },
                    structure: entries,
                }),
                Format::Text => {
                    println!("chart {} (n={}, m={})", chart.name(), chart.n(), chart.m());
                    for e in &entries {
                        println!("at u = {:?}", e.u);
                        print_matrix("anchor (rows: sections, cols: base)", &e.anchor);
                        print_tensor_nonzeros("c", &e.c);
                        if let Some(b) = &e.b {
                            print_tensor_nonzeros("B", b);
                        }
                    }
                }
            }
            Ok(0)
        }
        Command::Bracket {
            source,
            xi,
            eta,
            point_u,
            samples,
            seed,
            format,
        } => {
            let chart = source.load().map_err(usage)?;
            let m = chart.m();
            for (flag, list) in [("--xi", &xi), ("--eta", &eta)] {
                if list.len() != m {
                    return Err((
                        2,
                        format!("{flag} given {} times, chart fiber dimension is {m}", list.len()),
                    ));
                }
            }
            let xi_spec = SectionSpec::parse(
                chart.n(),
                &xi.iter().map(String::as_str).collect::<Vec<_>>(),
            )
            .map_err(usage)?;
            let eta_spec = SectionSpec::parse(
                chart.n(),
                &eta.iter().map(String::as_str).collect::<Vec<_>>(),
            )
            .map_err(usage)?;
            let points = base_points(&chart, &point_u, samples, seed).map_err(|m| (2, m))?;
            let mut entries = Vec::with_capacity(points.len());
            for u in &points {
                let value = structure::bracket_sections_full(&chart, &xi_spec, &eta_spec, u)
                    .map_err(usage)?;
                entries.push(BracketEntry {
                    u: u.clone(),
                    value,
                });
            }
            match format {
                Format::Json => emit(&BracketOutput {
                    chart: ChartInfo::of(&chart),
                    config: ConfigInfo {
                        seed,
                        samples: entries.len(),
                        tol: 0.0,
                    },
                    xi,
                    eta,
                    bracket: entries,
                }),
                Format::Text => {
                    println!(
                        "chart {} bracket [xi, eta] with xi = {:?}, eta = {:?}",
                        chart.name(),
                        xi,
                        eta
                    );
                    for e in &entries {
                        println!("  at u = {:?}: {:?}", e.u, e.value);
                    }
                }
            }
            Ok(0)
        }
        Command::Invert {
            source,
            point_u,
            v,
            tol,
            max_iterations,
            format,
        } => {
            let chart = source.load().map_err(usage)?;
            let u = match point_u {
                Some(text) => parse_point(&text).map_err(|m| (2, m))?,
                None => Vec::new(),
            };
            if u.len() != chart.n() {
                return Err((
                    2,
                    format!(
                        "--point-u has {} coordinates, chart base dimension is {}",
                        u.len(),
                        chart.n()
                    ),
                ));
            }
            let v = parse_point(&v).map_err(|m| (2, m))?;
            let outcome = chart
                .invert_at(&u, &v, tol, max_iterations)
                .map_err(|e| (if e.is_usage() { 2 } else { 1 }, e.to_string()))?;
            // Expansion diagnostic: w should equal -v + B(u, v, v) up to
            // third order in v.
            let b = structure::bilinear_at(&chart, &u).map_err(usage)?;
            let bvv = structure::contract_bilinear(&b, &v, &v);
            let expansion_residual = outcome
                .w
                .iter()
                .zip(v.iter().zip(bvv.iter()))
                .fold(0.0f64, |acc, (w, (vi, bi))| acc.max((w - (-vi + bi)).abs()));
            let out = InvertOutput {
                chart: ChartInfo::of(&chart),
                u,
                v,
                w: outcome.w,
                residual: outcome.residual,
                expansion_residual,
                iterations: outcome.iterations,
            };
            match format {
                Format::Json => emit(&out),
                Format::Text => {
                    println!("chart {}", out.chart.name);
                    println!("  u          = {:?}", out.u);
                    println!("  v          = {:?}", out.v);
                    println!("  inverse w  = {:?}", out.w);
                    println!("  residual ‖p(u,v,w)‖ = {:.3e}", out.residual);
                    println!(
                        "  expansion residual ‖w - (-v + B(u,v,v))‖ = {:.3e}",
                        out.expansion_residual
                    );
                    println!("  iterations = {}", out.iterations);
                }
            }
            Ok(0)
        }
    }
}

fn usage(e: algebroid::Error) -> (i32, String) {
    (if e.is_usage() { 2 } else { 1 }, e.to_string())
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
