//! Bias and variance of ridge as the weight varies.

use metasep::convex::GdRegSpec;
use metasep::risk::{decompose_bias_variance, AlgSpec, Workers};
use metasep::{MetaInstance, SeedSpec, Vector};

fn main() -> metasep::Result<()> {
    let (d, n) = (10, 15);
    let inst = MetaInstance::axis_aligned(d, 1.0, 1.0)?;
    let workers = Workers::available()?;
    println!("d = {d}, n = {n}");
    println!("{:>8} {:>10} {:>10} {:>10}", "lambda", "bias", "variance", "total");
    for lambda in [0.0, 0.01, 0.1, 0.3, 1.0, 3.0, 10.0] {
        let alg = AlgSpec::GdReg {
            spec: GdRegSpec::new(lambda)?,
            w0: Vector::zeros(d),
        };
        let bv = decompose_bias_variance(&alg, &inst, n, 1000, SeedSpec::new(2, 0), &workers)?;
        println!(
            "{lambda:>8} {:>10.4} {:>10.4} {:>10.4}",
            bv.bias.mean,
            bv.variance.mean,
            bv.total().mean
        );
    }
    Ok(())
}
