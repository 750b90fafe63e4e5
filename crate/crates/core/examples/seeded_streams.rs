//! Counter-style seeding: a trial's draws depend only on its seed, never on scheduling.

use metasep::rand::{gaussian_vector, rademacher_signs};
use metasep::risk::{mc_excess_risk, AlgSpec, Workers};
use metasep::convex::GdRegSpec;
use metasep::{MetaInstance, SeedSpec, Vector};

fn main() -> metasep::Result<()> {
    let seed = SeedSpec::new(42, 7);
    let signs: Vec<i8> = rademacher_signs(seed, 16).iter().map(|s| s.as_i8()).collect();
    println!("signs: {signs:?}");
    println!("child(3) gaussian: {:?}", gaussian_vector(seed.child(3), 3, 0.0, 1.0)?.as_ref());

    let inst = MetaInstance::axis_aligned(8, 1.0, 1.0)?;
    let alg = AlgSpec::GdReg {
        spec: GdRegSpec::new(0.5)?,
        w0: Vector::zeros(8),
    };
    for threads in [1, 2, 4] {
        let est = mc_excess_risk(&alg, &inst, 12, 500, seed, &Workers::new(threads)?)?;
        println!("{threads} workers: mean {:.17} stderr {:.17}", est.mean, est.stderr);
    }
    Ok(())
}
