//! Command-line front end: sampling, counting, solving, atlas reproduction,
//! scaling fits, constant estimation, and exports.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical or solver
//! error, 4 search budget exceeded.

use clap::{Args, Parser, Subcommand};
use girg_motifs::config::ExperimentConfig;
use girg_motifs::counting::{count_in_class, count_ordered, CountRow, Mode, VertexClassSpec};
use girg_motifs::experiment::{
    atlas_dot_files, run_atlas, run_scaling_experiment, run_tree_compare, write_count_csv,
    write_scaling_csv, ExperimentError,
};
use girg_motifs::girg::{sample_girg, Gamma, GirgParams};
use girg_motifs::milp::{build_milp, solve_instance, MilpError, OptInstance, SolveReport};
use girg_motifs::pattern::parse_pattern;
use girg_motifs::theory::{
    constant_report_json, hamiltonian_regime, mc_geo_constant, mc_nongeo_constant, Regime,
    TheoryError,
};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "girg-motifs", version, about = "Geometric scale-free graphs: sampling, motif counts, dominant structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct CommonOpts {
    /// Config file with [experiment] sections; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pattern text, e.g. "k=3; edges=1-2,2-3,1-3".
    #[arg(long)]
    pattern: Option<String>,
    /// Pattern size for census commands.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Kernel exponent (> 1) or "inf".
    #[arg(long)]
    gamma: Option<Gamma>,
    #[arg(long)]
    d: Option<usize>,
    /// general or induced.
    #[arg(long)]
    mode: Option<Mode>,
    /// Graph sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Grid-oracle lattice spacing.
    #[arg(long)]
    step: Option<f64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<u64>,
    /// Truncation radius for the geometric constant.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-vertex class exponents for restricted counting.
    #[arg(long, value_delimiter = ',')]
    class_alpha: Vec<f64>,
    /// Per-pair class exponents, row-major upper triangle.
    #[arg(long, value_delimiter = ',')]
    class_beta: Vec<f64>,
}

impl CommonOpts {
    fn as_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            pattern: self.pattern.clone(),
            k: self.k,
            tau: self.tau,
            gamma: self.gamma,
            d: self.d,
            mode: self.mode,
            n_grid: self.n.clone(),
            seeds: self.seeds,
            seed_base: self.seed_base,
            eps: self.eps,
            step: self.step,
            samples: self.samples,
            radius: self.radius,
            out: self.out.clone(),
            class_alpha: self.class_alpha.clone(),
            class_beta: self.class_beta.clone(),
        }
    }

    /// Flags merged over every section of the config file (or just the
    /// flags when no file is given).
    fn resolve_all(&self) -> Result<Vec<ExperimentConfig>, CliError> {
        let flags = self.as_config();
        match &self.config {
            None => Ok(vec![flags]),
            Some(path) => {
                let sections =
                    ExperimentConfig::parse_file(path).map_err(|e| CliError::config(e.to_string()))?;
                Ok(sections.iter().map(|s| flags.clone().over(s)).collect())
            }
        }
    }

    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        Ok(self.resolve_all()?.remove(0))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the dominant-structure program for one pattern.
    Solve(CommonOpts),
    /// Solve every connected pattern of a size; write JSON and DOT files.
    Atlas(CommonOpts),
    /// Sample one instance; write edge list and sidecar JSON.
    Sample(CommonOpts),
    /// Count a pattern on sampled instances; write counting CSV.
    Count(CommonOpts),
    /// Scaling experiment: counts across an n-grid plus a log-log fit.
    Scaling(CommonOpts),
    /// Monte Carlo estimate of the limiting constant for a pattern.
    Constants {
        #[command(flatten)]
        common: CommonOpts,
        /// geo, nongeo, or auto (pick from the regime).
        #[arg(long, default_value = "auto")]
        family: String,
    },
    /// Paired GIRG/IRG counts of a tree pattern.
    TreeCompare(CommonOpts),
    /// Render a solve report (JSON) as a DOT structure diagram.
    ExportDot {
        /// Path to a report produced by `solve --out`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the model for a pattern in LP text format.
    ExportLp(CommonOpts),
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }

    fn budget(message: impl Into<String>) -> Self {
        CliError { code: 4, message: message.into() }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match &e {
            ExperimentError::Config(_) | ExperimentError::Pattern(_) | ExperimentError::NotATree(_) => {
                CliError::config(e.to_string())
            }
            ExperimentError::Girg(girg_motifs::girg::GirgError::InvalidParams(_)) => {
                CliError::config(e.to_string())
            }
            ExperimentError::Milp(m) => milp_error(m),
            _ => CliError::numerical(e.to_string()),
        }
    }
}

fn milp_error(e: &MilpError) -> CliError {
    match e {
        MilpError::BudgetExceeded { .. } => CliError::budget(e.to_string()),
        MilpError::InvalidInstance(_) | MilpError::DimensionMismatch { .. } => {
            CliError::config(e.to_string())
        }
        _ => CliError::numerical(e.to_string()),
    }
}

fn theory_error(e: TheoryError) -> CliError {
    match &e {
        TheoryError::InvalidParams(_)
        | TheoryError::RegimePrecondition(_)
        | TheoryError::NotApplicable(_) => CliError::config(e.to_string()),
        _ => CliError::numerical(e.to_string()),
    }
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, contents)
            .map_err(|e| CliError::numerical(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{contents}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn require<T: Clone>(value: &Option<T>, key: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::config(format!("missing required option --{key}")))
}

fn instance_from(cfg: &ExperimentConfig) -> Result<OptInstance, CliError> {
    let pattern = parse_pattern(&require(&cfg.pattern, "pattern")?)
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(OptInstance {
        pattern,
        tau: require(&cfg.tau, "tau")?,
        gamma: require(&cfg.gamma, "gamma")?,
        dim: cfg.d.unwrap_or(1),
        variant: cfg.mode.unwrap_or(Mode::General),
    })
}

fn cmd_solve(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let inst = instance_from(&cfg)?;
    let report = solve_instance(&inst).map_err(|e| milp_error(&e))?;
    let json = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    write_output(cfg.out.as_deref(), &format!("{json}\n"))?;
    eprintln!(
        "f* = {:.9}  unique = {}  ({} nodes, {} LP iterations)",
        report.f_star, report.unique, report.stats.nodes, report.stats.lp_iters
    );
    Ok(())
}

fn cmd_atlas(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let k = require(&cfg.k, "k")?;
    let tau = require(&cfg.tau, "tau")?;
    let gamma = require(&cfg.gamma, "gamma")?;
    let d = cfg.d.unwrap_or(1);
    let mode = cfg.mode.unwrap_or(Mode::General);
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("atlas"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::numerical(format!("cannot create {}: {e}", out_dir.display())))?;

    let (atlas, reports) = run_atlas(k, tau, gamma, d, mode)?;
    let json_path = out_dir.join(format!("atlas_k{k}_tau{tau}_{mode}.json"));
    std::fs::write(&json_path, atlas.to_json_string())
        .map_err(|e| CliError::numerical(e.to_string()))?;
    for (name, dot) in atlas_dot_files(&atlas, &reports) {
        std::fs::write(out_dir.join(name), dot).map_err(|e| CliError::numerical(e.to_string()))?;
    }
    for row in &atlas.rows {
        println!(
            "{:<10} f*={:<10.6} unique={:<20} classes={:?}",
            row.name,
            row.f_star,
            row.unique.to_string(),
            row.alpha_classes
        );
    }
    eprintln!("wrote {}", json_path.display());
    Ok(())
}

fn cmd_sample(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let n = *cfg.n_grid.first().ok_or_else(|| CliError::config("missing --n"))?;
    let params = GirgParams {
        n,
        d: cfg.d.unwrap_or(1),
        tau: require(&cfg.tau, "tau")?,
        gamma: require(&cfg.gamma, "gamma")?,
        seed: cfg.seed_base.unwrap_or(0),
    };
    let g = sample_girg(&params).map_err(|e| CliError::config(e.to_string()))?;
    let prefix = cfg.out.clone().unwrap_or_else(|| PathBuf::from("girg"));
    let edges_path = prefix.with_extension("edges");
    let json_path = prefix.with_extension("json");
    std::fs::write(&edges_path, g.graph.edge_list_text())
        .map_err(|e| CliError::numerical(e.to_string()))?;
    std::fs::write(&json_path, serde_json::to_string(&g.sidecar_json()).unwrap())
        .map_err(|e| CliError::numerical(e.to_string()))?;
    println!(
        "n={} edges={} mean_degree={:.4} -> {}, {}",
        g.n(),
        g.graph.num_edges(),
        g.mean_degree(),
        edges_path.display(),
        json_path.display()
    );
    Ok(())
}

fn cmd_count(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let pattern_text = require(&cfg.pattern, "pattern")?;
    let pattern = parse_pattern(&pattern_text).map_err(|e| CliError::config(e.to_string()))?;
    let tau = require(&cfg.tau, "tau")?;
    let gamma = require(&cfg.gamma, "gamma")?;
    let d = cfg.d.unwrap_or(1);
    let mode = cfg.mode.unwrap_or(Mode::General);
    if cfg.n_grid.is_empty() {
        return Err(CliError::config("missing --n"));
    }
    let seeds = cfg.seeds.unwrap_or(1);
    let seed_base = cfg.seed_base.unwrap_or(0);
    let class_spec = if cfg.class_alpha.is_empty() {
        None
    } else {
        Some(VertexClassSpec {
            alpha: cfg.class_alpha.clone(),
            beta: cfg.class_beta.clone(),
            eps: cfg.eps.unwrap_or(0.3),
        })
    };

    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        for s in 0..seeds {
            let started = Instant::now();
            let g = sample_girg(&GirgParams { n, d, tau, gamma, seed: seed_base + s })
                .map_err(|e| CliError::config(e.to_string()))?;
            let count = match &class_spec {
                None => count_ordered(&g.graph, &pattern, mode),
                Some(spec) => count_in_class(&g, &pattern, mode, spec),
            }
            .map_err(|e| CliError::numerical(e.to_string()))?;
            rows.push(CountRow {
                n,
                seed: seed_base + s,
                pattern: pattern_text.clone(),
                mode,
                count,
                elapsed_ms: started.elapsed().as_millis(),
            });
        }
    }
    let mut buf = Vec::new();
    write_count_csv(&mut buf, &rows).map_err(CliError::from)?;
    write_output(cfg.out.as_deref(), &String::from_utf8(buf).unwrap())
}

fn cmd_scaling(common: &CommonOpts) -> Result<(), CliError> {
    let sections = common.resolve_all()?;
    let many = sections.len() > 1;
    for (idx, cfg) in sections.iter().enumerate() {
        let outcome = run_scaling_experiment(cfg)?;
        let mut buf = Vec::new();
        write_scaling_csv(&mut buf, &outcome.rows).map_err(CliError::from)?;
        let out = cfg.out.as_ref().map(|p| {
            if many {
                p.with_file_name(format!(
                    "{}-{}.{}",
                    p.file_stem().and_then(|s| s.to_str()).unwrap_or("scaling"),
                    idx + 1,
                    p.extension().and_then(|s| s.to_str()).unwrap_or("csv"),
                ))
            } else {
                p.clone()
            }
        });
        write_output(out.as_deref(), &String::from_utf8(buf).unwrap())?;
        eprintln!(
            "run {}: slope = {:.4}  f* = {:.6}  intercept = {:.4}",
            idx + 1,
            outcome.slope,
            outcome.f_star,
            outcome.intercept
        );
        for (n, r) in &outcome.residuals {
            eprintln!("  n={n}: residual {r:+.4}");
        }
        if !outcome.excluded.is_empty() {
            eprintln!("  excluded zero-count sizes: {:?}", outcome.excluded);
        }
    }
    Ok(())
}

fn cmd_constants(common: &CommonOpts, family: &str) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let inst = instance_from(&cfg)?;
    let samples = cfg.samples.unwrap_or(1_000_000);
    let radius = cfg.radius.unwrap_or(256.0);
    let seed = cfg.seed_base.unwrap_or(0);
    let k = inst.pattern.k();

    let family = match family {
        "geo" | "nongeo" => family.to_string(),
        "auto" => {
            if inst.pattern.is_tree() {
                "geo".to_string()
            } else {
                let verdict = hamiltonian_regime(k, inst.tau).map_err(theory_error)?;
                match verdict.regime {
                    Regime::Geometric => "geo".to_string(),
                    Regime::NonGeometricOdd => "nongeo".to_string(),
                    other => {
                        return Err(CliError::config(format!(
                            "no proven constant in regime {other}; pass --family explicitly"
                        )))
                    }
                }
            }
        }
        other => return Err(CliError::config(format!("unknown family {other:?}"))),
    };

    let (est, regime_label) = if family == "geo" {
        (
            mc_geo_constant(
                &inst.pattern,
                inst.tau,
                inst.gamma,
                inst.dim,
                inst.variant,
                samples,
                radius,
                seed,
            )
            .map_err(theory_error)?,
            "geometric",
        )
    } else {
        (
            mc_nongeo_constant(
                &inst.pattern,
                inst.tau,
                inst.gamma,
                inst.dim,
                inst.variant,
                samples,
                seed,
            )
            .map_err(theory_error)?,
            "non-geometric",
        )
    };
    let json = constant_report_json(&inst.pattern, inst.variant, regime_label, &est);
    write_output(
        cfg.out.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()),
    )
}

fn cmd_tree_compare(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let pattern = parse_pattern(&require(&cfg.pattern, "pattern")?)
        .map_err(|e| CliError::config(e.to_string()))?;
    let n = *cfg.n_grid.first().ok_or_else(|| CliError::config("missing --n"))?;
    let out = run_tree_compare(
        &pattern,
        require(&cfg.tau, "tau")?,
        require(&cfg.gamma, "gamma")?,
        cfg.d.unwrap_or(1),
        n,
        cfg.seeds.unwrap_or(10),
        cfg.seed_base.unwrap_or(0),
    )?;
    println!("seed,girg_count,irg_count,ratio");
    for row in &out.rows {
        println!("{},{},{},{}", row.seed, row.girg_count, row.irg_count, row.ratio);
    }
    eprintln!("ratio range: [{:.4}, {:.4}]", out.min_ratio, out.max_ratio);
    Ok(())
}

fn cmd_export_dot(report_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", report_path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(e.to_string()))?;
    let report = SolveReport::from_json(&value).map_err(CliError::config)?;
    let dot = girg_motifs::dot::export_structure_dot(&report, report.tau);
    write_output(out, &dot)
}

fn cmd_export_lp(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = common.resolve()?;
    let inst = instance_from(&cfg)?;
    inst.validate().map_err(|e| milp_error(&e))?;
    let name = format!(
        "{} tau={} gamma={} d={} {}",
        inst.pattern, inst.tau, inst.gamma, inst.dim, inst.variant
    );
    let text = build_milp(&inst).to_lp_format(&name);
    write_output(cfg.out.as_deref(), &text)
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Solve(c) => cmd_solve(&c),
        Command::Atlas(c) => cmd_atlas(&c),
        Command::Sample(c) => cmd_sample(&c),
        Command::Count(c) => cmd_count(&c),
        Command::Scaling(c) => cmd_scaling(&c),
        Command::Constants { common, family } => cmd_constants(&common, &family),
        Command::TreeCompare(c) => cmd_tree_compare(&c),
        Command::ExportDot { report, out } => cmd_export_dot(&report, out.as_deref()),
        Command::ExportLp(c) => cmd_export_lp(&c),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
