//! Experiment harnesses: scaling fits, atlas reproduction, and paired
//! GIRG/IRG tree comparisons. Cells fan out to the thread pool and results
//! merge in deterministic `(n, seed)` order.

use crate::config::{ConfigError, ExperimentConfig};
use crate::counting::{count_in_class, count_ordered, CountError, CountRow, Mode, VertexClassSpec};
use crate::dot::export_structure_dot;
use crate::girg::{sample_girg, sample_irg, Gamma, GirgError, GirgParams};
use crate::milp::{classify_alpha_value, solve_instance, MilpError, SolveReport};
use crate::pattern::{parse_pattern, pattern_name, Pattern, PatternError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;

#[derive(Debug)]
pub enum ExperimentError {
    Config(ConfigError),
    Pattern(PatternError),
    Girg(GirgError),
    Count(CountError),
    Milp(MilpError),
    NotATree(String),
    Io(std::io::Error),
    Csv(csv::Error),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Config(e) => write!(f, "{e}"),
            ExperimentError::Pattern(e) => write!(f, "{e}"),
            ExperimentError::Girg(e) => write!(f, "{e}"),
            ExperimentError::Count(e) => write!(f, "{e}"),
            ExperimentError::Milp(e) => write!(f, "{e}"),
            ExperimentError::NotATree(p) => write!(f, "pattern is not a tree: {p}"),
            ExperimentError::Io(e) => write!(f, "{e}"),
            ExperimentError::Csv(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

macro_rules! from_error {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for ExperimentError {
            fn from(e: $ty) -> Self {
                ExperimentError::$variant(e)
            }
        }
    };
}
from_error!(Config, ConfigError);
from_error!(Pattern, PatternError);
from_error!(Girg, GirgError);
from_error!(Count, CountError);
from_error!(Milp, MilpError);
from_error!(Io, std::io::Error);
from_error!(Csv, csv::Error);

fn missing(key: &str) -> ExperimentError {
    ExperimentError::Config(ConfigError {
        line: 0,
        message: format!("missing required key {key:?}"),
    })
}

/// One row of the scaling CSV:
/// `n,seed,pattern,mode,count,norm_count,elapsed_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub seed: u64,
    pub pattern: String,
    pub mode: Mode,
    pub count: u64,
    pub norm_count: f64,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone)]
pub struct ScalingOutcome {
    pub rows: Vec<ScalingRow>,
    pub f_star: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Per-size residuals of the fit, `(n, log mean count - fit)`.
    pub residuals: Vec<(usize, f64)>,
    /// Sizes whose mean count was zero, excluded from the fit.
    pub excluded: Vec<usize>,
}

/// Ordinary least squares of `log mean count` on `log n`, zero-mean sizes
/// excluded and reported.
pub fn fit_from_rows(rows: &[ScalingRow]) -> (f64, f64, Vec<(usize, f64)>, Vec<usize>) {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for &n in &sizes {
        let counts: Vec<u64> = rows.iter().filter(|r| r.n == n).map(|r| r.count).collect();
        let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
        if mean > 0.0 {
            points.push((n, (n as f64).ln(), mean.ln()));
        } else {
            excluded.push(n);
        }
    }
    if points.len() < 2 {
        return (f64::NAN, f64::NAN, Vec::new(), excluded);
    }
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.1).sum();
    let sy: f64 = points.iter().map(|p| p.2).sum();
    let sxx: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let sxy: f64 = points.iter().map(|p| p.1 * p.2).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    let residuals = points
        .iter()
        .map(|&(n, x, y)| (n, y - (intercept + slope * x)))
        .collect();
    (slope, intercept, residuals, excluded)
}

/// Samples and counts across the `(n, seed)` grid, then fits the log-log
/// slope of the mean count. Counting is total, or class-restricted when the
/// config carries `class_alpha`/`class_beta`.
pub fn run_scaling_experiment(cfg: &ExperimentConfig) -> Result<ScalingOutcome, ExperimentError> {
    cfg.validate()?;
    let pattern_text = cfg.pattern.clone().ok_or_else(|| missing("pattern"))?;
    let pattern = parse_pattern(&pattern_text)?;
    let tau = cfg.tau.ok_or_else(|| missing("tau"))?;
    let gamma = cfg.gamma.ok_or_else(|| missing("gamma"))?;
    let d = cfg.d.unwrap_or(1);
    let mode = cfg.mode.unwrap_or(Mode::General);
    if cfg.n_grid.is_empty() {
        return Err(missing("n"));
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
    if let Some(spec) = &class_spec {
        spec.validate(pattern.k())?;
    }

    let inst = crate::milp::OptInstance {
        pattern: pattern.clone(),
        tau,
        gamma,
        dim: d,
        variant: mode,
    };
    let f_star = solve_instance(&inst)?.f_star;

    let cells: Vec<(usize, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..seeds).map(move |s| (n, seed_base + s)))
        .collect();
    let mut rows: Vec<ScalingRow> = cells
        .par_iter()
        .map(|&(n, seed)| {
            let started = Instant::now();
            let g = sample_girg(&GirgParams { n, d, tau, gamma, seed })?;
            let count = match &class_spec {
                None => count_ordered(&g.graph, &pattern, mode)?,
                Some(spec) => count_in_class(&g, &pattern, mode, spec)?,
            };
            Ok(ScalingRow {
                n,
                seed,
                pattern: pattern_text.clone(),
                mode,
                count,
                norm_count: count as f64 / (n as f64).powf(f_star),
                elapsed_ms: started.elapsed().as_millis(),
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    rows.sort_by_key(|r| (r.n, r.seed));

    let (slope, intercept, residuals, excluded) = fit_from_rows(&rows);
    Ok(ScalingOutcome { rows, f_star, slope, intercept, residuals, excluded })
}

pub fn write_scaling_csv<W: std::io::Write>(w: W, rows: &[ScalingRow]) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_scaling_csv<R: std::io::Read>(r: R) -> Result<Vec<ScalingRow>, ExperimentError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn write_count_csv<W: std::io::Write>(w: W, rows: &[CountRow]) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// One solved pattern of the atlas. Wall time is deliberately absent so
/// identical configs serialize byte-identically.
#[derive(Debug, Clone, Serialize)]
pub struct AtlasRow {
    pub name: String,
    pub pattern: Pattern,
    pub f_star: f64,
    pub alpha: Vec<f64>,
    pub alpha_classes: Vec<String>,
    pub beta: Vec<(usize, usize, f64)>,
    pub unique: crate::milp::Uniqueness,
    pub num_alternates: usize,
    pub nodes: u64,
    pub lp_iters: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Atlas {
    pub k: usize,
    pub tau: f64,
    pub gamma: Gamma,
    pub d: usize,
    pub mode: Mode,
    pub rows: Vec<AtlasRow>,
}

impl Atlas {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("atlas serializes")
    }
}

/// Solves every connected pattern of size `k` and tabulates structures,
/// classes, and uniqueness flags. Reports (and the paired full
/// [`SolveReport`]s for DOT export) come back in census order.
pub fn run_atlas(
    k: usize,
    tau: f64,
    gamma: Gamma,
    d: usize,
    mode: Mode,
) -> Result<(Atlas, Vec<SolveReport>), ExperimentError> {
    let patterns = crate::pattern::enumerate_patterns(k, true)?;
    let reports: Vec<SolveReport> = patterns
        .par_iter()
        .map(|p| {
            solve_instance(&crate::milp::OptInstance {
                pattern: p.clone(),
                tau,
                gamma,
                dim: d,
                variant: mode,
            })
        })
        .collect::<Result<_, _>>()?;
    let rows = reports
        .iter()
        .map(|r| {
            let name = pattern_name(&r.pattern)
                .map(str::to_string)
                .unwrap_or_else(|| format!("k{}m{}", r.pattern.k(), r.pattern.edge_count()));
            AtlasRow {
                name,
                pattern: r.pattern.clone(),
                f_star: r.f_star,
                alpha: r.optimizer.alpha.clone(),
                alpha_classes: r
                    .optimizer
                    .alpha
                    .iter()
                    .map(|&a| classify_alpha_value(a, tau, 1e-6).label().to_string())
                    .collect(),
                beta: crate::pattern::pairs(k)
                    .into_iter()
                    .map(|(i, j)| (i, j, r.optimizer.beta_at(k, i, j)))
                    .collect(),
                unique: r.unique,
                num_alternates: r.alternates.len(),
                nodes: r.stats.nodes,
                lp_iters: r.stats.lp_iters,
            }
        })
        .collect();
    Ok((Atlas { k, tau, gamma, d, mode, rows }, reports))
}

/// DOT text for every atlas entry, keyed by row name, in census order.
pub fn atlas_dot_files(atlas: &Atlas, reports: &[SolveReport]) -> Vec<(String, String)> {
    atlas
        .rows
        .iter()
        .zip(reports)
        .map(|(row, report)| {
            (
                format!("{}_tau{}_{}.dot", row.name, atlas.tau, atlas.mode),
                export_structure_dot(report, atlas.tau),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeCompareRow {
    pub seed: u64,
    pub girg_count: u64,
    pub irg_count: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TreeCompareOutcome {
    pub rows: Vec<TreeCompareRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Counts a tree pattern on paired GIRG/IRG instances sharing the weight
/// sequence seed by seed, and reports the count ratios.
#[allow(clippy::too_many_arguments)]
pub fn run_tree_compare(
    tree: &Pattern,
    tau: f64,
    gamma: Gamma,
    d: usize,
    n: usize,
    seeds: u64,
    seed_base: u64,
) -> Result<TreeCompareOutcome, ExperimentError> {
    if !tree.is_tree() {
        return Err(ExperimentError::NotATree(tree.to_text()));
    }
    let rows: Vec<TreeCompareRow> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let params = GirgParams { n, d, tau, gamma, seed: seed_base + s };
            let girg = sample_girg(&params)?;
            let irg = sample_irg(&params)?;
            debug_assert_eq!(girg.weights, irg.weights);
            let girg_count = count_ordered(&girg.graph, tree, Mode::General)?;
            let irg_count = count_ordered(&irg.graph, tree, Mode::General)?;
            Ok(TreeCompareRow {
                seed: params.seed,
                girg_count,
                irg_count,
                ratio: girg_count as f64 / irg_count as f64,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(TreeCompareOutcome { rows, min_ratio, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg() -> ExperimentConfig {
        ExperimentConfig {
            pattern: Some("k=3; edges=1-2,2-3,1-3".into()),
            tau: Some(2.5),
            gamma: Some(Gamma::Finite(2.0)),
            d: Some(1),
            mode: Some(Mode::General),
            n_grid: vec![128, 256, 512],
            seeds: Some(3),
            seed_base: Some(7),
            ..Default::default()
        }
    }

    #[test]
    fn scaling_rows_deterministic_and_ordered() {
        let out1 = run_scaling_experiment(&base_cfg()).unwrap();
        let out2 = run_scaling_experiment(&base_cfg()).unwrap();
        assert_eq!(out1.rows.len(), 9);
        for w in out1.rows.windows(2) {
            assert!((w[0].n, w[0].seed) < (w[1].n, w[1].seed));
        }
        let strip = |rows: &[ScalingRow]| {
            rows.iter()
                .map(|r| (r.n, r.seed, r.count, r.norm_count))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&out1.rows), strip(&out2.rows));
        assert_eq!(out1.slope.to_bits(), out2.slope.to_bits());
    }

    #[test]
    fn csv_round_trip_preserves_fit() {
        let out = run_scaling_experiment(&base_cfg()).unwrap();
        let mut buf = Vec::new();
        write_scaling_csv(&mut buf, &out.rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,seed,pattern,mode,count,norm_count,elapsed_ms"));
        let rows = read_scaling_csv(&buf[..]).unwrap();
        let (slope, intercept, _, _) = fit_from_rows(&rows);
        assert_eq!(slope.to_bits(), out.slope.to_bits());
        assert_eq!(intercept.to_bits(), out.intercept.to_bits());
    }

    #[test]
    fn single_edge_scaling_slope_near_one() {
        let cfg = ExperimentConfig {
            pattern: Some("k=2; edges=1-2".into()),
            n_grid: vec![512, 1024, 2048, 4096],
            seeds: Some(6),
            ..base_cfg()
        };
        let out = run_scaling_experiment(&cfg).unwrap();
        assert!(
            (out.slope - 1.0).abs() <= 0.1,
            "edge-count slope {} should be ~1",
            out.slope
        );
        assert!((out.f_star - 1.0).abs() < 1e-7);
    }

    #[test]
    fn atlas_deterministic_json() {
        let (a1, reports) = run_atlas(3, 2.2, Gamma::Finite(2.0), 1, Mode::General).unwrap();
        let (a2, _) = run_atlas(3, 2.2, Gamma::Finite(2.0), 1, Mode::General).unwrap();
        assert_eq!(a1.to_json_string(), a2.to_json_string());
        assert_eq!(a1.rows.len(), 2);
        let dots = atlas_dot_files(&a1, &reports);
        assert_eq!(dots.len(), 2);
        assert!(dots[0].1.starts_with("graph structure {"));
    }

    #[test]
    fn tree_compare_rejects_cycles() {
        let tri = parse_pattern("k=3; edges=1-2,2-3,1-3").unwrap();
        assert!(matches!(
            run_tree_compare(&tri, 2.5, Gamma::Finite(2.0), 1, 100, 2, 0),
            Err(ExperimentError::NotATree(_))
        ));
    }

    #[test]
    fn tree_compare_small_run() {
        let p3 = parse_pattern("k=3; edges=1-2,2-3").unwrap();
        let out = run_tree_compare(&p3, 2.5, Gamma::Finite(2.0), 1, 2000, 3, 1).unwrap();
        assert_eq!(out.rows.len(), 3);
        for row in &out.rows {
            assert!(row.ratio.is_finite() && row.ratio > 0.0, "{row:?}");
        }
        assert!(out.min_ratio <= out.max_ratio);
    }
}
