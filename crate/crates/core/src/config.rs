//! Flat key-value experiment configs: one `[experiment]` section per run,
//! `key = value` lines, `#` comments. CLI flags override file keys.

use crate::counting::Mode;
use crate::girg::Gamma;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

/// One experiment's knobs. Everything is optional at the parse layer; each
/// command validates the subset it needs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub pattern: Option<String>,
    pub k: Option<usize>,
    pub tau: Option<f64>,
    pub gamma: Option<Gamma>,
    pub d: Option<usize>,
    pub mode: Option<Mode>,
    pub n_grid: Vec<usize>,
    pub seeds: Option<u64>,
    pub seed_base: Option<u64>,
    pub eps: Option<f64>,
    pub step: Option<f64>,
    pub samples: Option<u64>,
    pub radius: Option<f64>,
    pub out: Option<PathBuf>,
    /// Optional class restriction for counting experiments.
    pub class_alpha: Vec<f64>,
    pub class_beta: Vec<f64>,
}

impl ExperimentConfig {
    pub fn parse_file(path: &Path) -> Result<Vec<Self>, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Vec<Self>, ConfigError> {
        let mut out = Vec::new();
        let mut current: Option<ExperimentConfig> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[experiment]" {
                if let Some(done) = current.take() {
                    out.push(done);
                }
                current = Some(ExperimentConfig::default());
                continue;
            }
            if line.starts_with('[') {
                return Err(err(lineno, format!("unknown section {line}")));
            }
            let Some(eq) = line.find('=') else {
                return Err(err(lineno, "expected `key = value`"));
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            let cfg = current
                .as_mut()
                .ok_or_else(|| err(lineno, "key outside an [experiment] section"))?;
            cfg.set(key, value, lineno)?;
        }
        if let Some(done) = current.take() {
            out.push(done);
        }
        if out.is_empty() {
            return Err(err(0, "no [experiment] section found"));
        }
        Ok(out)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(value: &str, line: usize, what: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| err(line, format!("bad {what} {value:?}: {e}")))
        }
        fn parse_list<T: std::str::FromStr>(
            value: &str,
            line: usize,
            what: &str,
        ) -> Result<Vec<T>, ConfigError>
        where
            T::Err: fmt::Display,
        {
            if value.is_empty() {
                return Ok(Vec::new());
            }
            value
                .split(',')
                .map(|tok| parse(tok.trim(), line, what))
                .collect()
        }
        match key {
            "pattern" => self.pattern = Some(value.to_string()),
            "k" => self.k = Some(parse(value, line, "k")?),
            "tau" => self.tau = Some(parse(value, line, "tau")?),
            "gamma" => self.gamma = Some(parse(value, line, "gamma")?),
            "d" => self.d = Some(parse(value, line, "d")?),
            "mode" | "variant" => self.mode = Some(parse(value, line, "mode")?),
            "n" => self.n_grid = parse_list(value, line, "n entry")?,
            "seeds" => self.seeds = Some(parse(value, line, "seeds")?),
            "seed_base" => self.seed_base = Some(parse(value, line, "seed_base")?),
            "eps" => self.eps = Some(parse(value, line, "eps")?),
            "step" => self.step = Some(parse(value, line, "step")?),
            "samples" => self.samples = Some(parse(value, line, "samples")?),
            "radius" => self.radius = Some(parse(value, line, "radius")?),
            "out" => self.out = Some(PathBuf::from(value)),
            "class_alpha" => self.class_alpha = parse_list(value, line, "class_alpha entry")?,
            "class_beta" => self.class_beta = parse_list(value, line, "class_beta entry")?,
            other => return Err(err(line, format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Overlays `self` (typically CLI flags) on top of `base` (file values).
    pub fn over(mut self, base: &ExperimentConfig) -> ExperimentConfig {
        macro_rules! take {
            ($field:ident) => {
                if self.$field.is_none() {
                    self.$field = base.$field.clone();
                }
            };
        }
        take!(pattern);
        take!(k);
        take!(tau);
        take!(gamma);
        take!(d);
        take!(mode);
        take!(seeds);
        take!(seed_base);
        take!(eps);
        take!(step);
        take!(samples);
        take!(radius);
        take!(out);
        if self.n_grid.is_empty() {
            self.n_grid = base.n_grid.clone();
        }
        if self.class_alpha.is_empty() {
            self.class_alpha = base.class_alpha.clone();
        }
        if self.class_beta.is_empty() {
            self.class_beta = base.class_beta.clone();
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(tau) = self.tau {
            if !(tau > 2.0 && tau < 3.0) {
                return Err(err(0, format!("tau must be in (2,3), got {tau}")));
            }
        }
        if let Some(Gamma::Finite(g)) = self.gamma {
            if !(g > 1.0) {
                return Err(err(0, format!("gamma must be > 1 or inf, got {g}")));
            }
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(err(0, format!("eps must be in (0,1), got {eps}")));
            }
        }
        if !self.n_grid.is_empty() && !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(err(0, format!("n grid must be strictly increasing: {:?}", self.n_grid)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let text = "\
# demo
[experiment]
pattern = k=3; edges=1-2,2-3,1-3
tau = 2.5
gamma = inf
n = 1024, 2048, 4096
seeds = 10
out = results.csv

[experiment]
k = 4
gamma = 2
mode = induced
";
        let parsed = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].pattern.as_deref(), Some("k=3; edges=1-2,2-3,1-3"));
        assert_eq!(parsed[0].gamma, Some(Gamma::Infinite));
        assert_eq!(parsed[0].n_grid, vec![1024, 2048, 4096]);
        assert_eq!(parsed[1].k, Some(4));
        assert_eq!(parsed[1].mode, Some(Mode::Induced));
        parsed[0].validate().unwrap();
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ExperimentConfig::parse_str("[experiment]\nbogus_key = 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = ExperimentConfig::parse_str("tau = 2.5\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = ExperimentConfig::parse_str("[experiment]\ntau = abc\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn flags_override_file() {
        let file = &ExperimentConfig::parse_str("[experiment]\ntau = 2.5\nseeds = 4\n").unwrap()[0];
        let flags = ExperimentConfig { tau: Some(2.2), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.tau, Some(2.2));
        assert_eq!(merged.seeds, Some(4));
    }

    #[test]
    fn rejects_non_increasing_grid() {
        let cfg = ExperimentConfig {
            n_grid: vec![1024, 512],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
