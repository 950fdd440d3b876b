use girg_motifs::counting::Mode;
use girg_motifs::girg::Gamma;
use girg_motifs::milp::{grid_oracle, OptInstance};
use girg_motifs::pattern::parse_pattern;
use girg_motifs::theory::{k2_geo_constant, mc_geo_constant};
use std::time::Instant;

fn main() {
    let k2 = parse_pattern("k=2; edges=1-2").unwrap();
    for (d, g, tau, radius, n) in [
        (1usize, 2.0f64, 2.5f64, 16384.0f64, 2_000_000u64),
        (1, 3.0, 2.7, 4096.0, 2_000_000),
        (2, 3.0, 2.5, 512.0, 20_000_000),
    ] {
        let t = Instant::now();
        match mc_geo_constant(&k2, tau, Gamma::Finite(g), d, Mode::General, n, radius, 7) {
            Ok(est) => {
                let expect = k2_geo_constant(tau, g, d);
                let z = (est.value - expect).abs() / est.std_error;
                println!(
                    "(d={d},g={g},tau={tau}) R={radius} N={n}: {:.4} +- {:.4} vs {expect:.4}  z={z:.2}  [{:?}]",
                    est.value, est.std_error, t.elapsed()
                );
            }
            Err(e) => println!("(d={d},g={g},tau={tau}): ERR {e}"),
        }
    }
    // Oracle timing: worst case k=4 pattern at tau=2.2 (|Aut| = 2).
    let path = parse_pattern("k=4; edges=1-2,2-3,3-4").unwrap();
    let inst = OptInstance { pattern: path, tau: 2.2, gamma: Gamma::Finite(2.0), dim: 1, variant: Mode::General };
    let t = Instant::now();
    let sol = grid_oracle(&inst, 0.02).unwrap();
    println!("oracle path tau=2.2 step=0.02: value {:.6} in {:?}", sol.value, t.elapsed());
}
