//! DOT rendering of solved structures: nodes filled by weight-exponent
//! class, edges shaded by distance exponent, non-edges dashed (general) or
//! dotted (induced), non-unique reports annotated in gray.

use crate::counting::Mode;
use crate::milp::{classify_alpha_value, AlphaClass, SolveReport};
use crate::pattern::pairs;
use std::fmt::Write as _;

/// Fill colors for the four conjectured classes plus a fallback.
fn class_color(class: AlphaClass) -> &'static str {
    match class {
        AlphaClass::Zero => "#e66101",
        AlphaClass::Intermediate => "#fdb863",
        AlphaClass::Half => "#b2abd2",
        AlphaClass::Maximal => "#5e3c99",
        AlphaClass::Other => "#cccccc",
    }
}

/// Grayscale for `beta` in `[-1/d, 0]`: 0 maps to black, -1/d to light gray.
fn beta_shade(beta: f64, d: usize) -> String {
    let t = (-beta * d as f64).clamp(0.0, 1.0);
    format!("gray{}", (t * 75.0).round() as u32)
}

pub fn export_structure_dot(report: &SolveReport, tau: f64) -> String {
    let k = report.pattern.k();
    let d = report.dim;
    let mut out = String::new();
    let _ = writeln!(out, "graph structure {{");
    let mut label = format!("f*={:.6}", report.f_star);
    if report.unique != crate::milp::Uniqueness::Unique {
        let _ = write!(label, " ({})", report.unique);
    }
    let _ = writeln!(out, "  label=\"{label}\";");
    if report.unique != crate::milp::Uniqueness::Unique {
        let _ = writeln!(out, "  fontcolor=gray; color=gray;");
    }
    let _ = writeln!(out, "  node [style=filled, fontsize=10];");
    for i in 1..=k {
        let alpha = report.optimizer.alpha[i - 1];
        let class = classify_alpha_value(alpha, tau, 1e-6);
        let _ = writeln!(
            out,
            "  v{i} [fillcolor=\"{}\", label=\"v{i}\\na={:.4} [{}]\"];",
            class_color(class),
            alpha,
            class.label(),
        );
    }
    for (i, j) in pairs(k) {
        let beta = report.optimizer.beta_at(k, i, j);
        if report.pattern.has_edge(i, j) {
            let _ = writeln!(
                out,
                "  v{i} -- v{j} [color={}, penwidth=2, label=\"{:.3}\"];",
                beta_shade(beta, d),
                beta
            );
        } else {
            let style = match report.variant {
                Mode::General => "dashed",
                Mode::Induced => "dotted",
            };
            let _ = writeln!(out, "  v{i} -- v{j} [style={style}, color=gray70];");
        }
    }
    let _ = writeln!(out, "}}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::girg::Gamma;
    use crate::milp::{solve_instance, OptInstance};
    use crate::pattern::parse_pattern;

    fn solve(text: &str, tau: f64, variant: Mode) -> SolveReport {
        solve_instance(&OptInstance {
            pattern: parse_pattern(text).unwrap(),
            tau,
            gamma: Gamma::Finite(2.0),
            dim: 1,
            variant,
        })
        .unwrap()
    }

    #[test]
    fn k4_low_tau_dot() {
        let r = solve("k=4; edges=1-2,1-3,1-4,2-3,2-4,3-4", 2.2, Mode::General);
        let dot = export_structure_dot(&r, 2.2);
        assert_eq!(dot.matches("#b2abd2").count(), 4, "{dot}");
        assert_eq!(dot.matches("color=gray0,").count(), 6, "{dot}");
        assert!(!dot.contains("non-unique"));
    }

    #[test]
    fn k4_high_tau_dot() {
        let r = solve("k=4; edges=1-2,1-3,1-4,2-3,2-4,3-4", 2.7, Mode::General);
        let dot = export_structure_dot(&r, 2.7);
        assert_eq!(dot.matches("#e66101").count(), 4, "{dot}");
        assert_eq!(dot.matches("color=gray75,").count(), 6, "{dot}");
    }

    #[test]
    fn diamond_low_tau_marked_gray() {
        let r = solve("k=4; edges=1-2,1-3,1-4,2-3,3-4", 2.2, Mode::General);
        let dot = export_structure_dot(&r, 2.2);
        assert!(dot.contains("non-unique"), "{dot}");
        assert!(dot.contains("fontcolor=gray"), "{dot}");
        // The one non-edge renders dashed in the general variant.
        assert_eq!(dot.matches("style=dashed").count(), 1, "{dot}");
    }

    #[test]
    fn induced_nonedges_dotted() {
        let r = solve("k=4; edges=1-2,2-3,3-4,1-4", 2.2, Mode::Induced);
        let dot = export_structure_dot(&r, 2.2);
        assert_eq!(dot.matches("style=dotted").count(), 2, "{dot}");
    }
}
