//! Monte Carlo excess risk of convex methods next to the exact lower bound.

use metasep::convex::{GdRegSpec, GdStepSpec};
use metasep::risk::{convex_lower_bound_exact, convex_min_samples, mc_excess_risk_paired, AlgSpec, Workers};
use metasep::{MetaInstance, SeedSpec, Vector};

fn main() -> metasep::Result<()> {
    let d = 20;
    let inst = MetaInstance::axis_aligned(d, 1.0, 1.0)?;
    let algs = vec![
        AlgSpec::GdReg { spec: GdRegSpec::new(0.0)?, w0: Vector::zeros(d) },
        AlgSpec::GdReg { spec: GdRegSpec::new(1.0)?, w0: Vector::zeros(d) },
        AlgSpec::GdReg { spec: GdRegSpec::new(0.0)?, w0: inst.w_star().clone() },
        AlgSpec::GdStep { spec: GdStepSpec::new(0.1, 100)?, w0: Vector::zeros(d) },
    ];
    let workers = Workers::available()?;
    println!("{:>4} {:>8} {:>12} {:>12} {:>12} {:>12}", "n", "bound", "ols", "ridge(1)", "ols@w*", "gd(0.1,100)");
    for n in [5, 10, 20, 40, 80, 160] {
        let est = mc_excess_risk_paired(&algs, &inst, n, 1000, SeedSpec::new(1, n as u64), &workers)?;
        print!("{n:>4} {:>8.4}", convex_lower_bound_exact(d, n, 1.0, 1.0));
        for e in est {
            print!(" {:>12.4}", e.mean);
        }
        println!();
    }
    println!("\nsamples needed for eps = 0.05 at d = 50: {}", convex_min_samples(50, 1.0, 1.0, 0.05)?);
    Ok(())
}
