//! Reptile in reduced coordinates: `a_i` only grows while `b_i` flips with the task sign.
//!
//! cargo run --example reptile_dynamics -- [T] [tau]

use metasep::experiments::{run_dynamics, DynamicsConfig};
use metasep::meta::reptile_fluctuation_bound;

fn main() -> metasep::Result<()> {
    let mut args = std::env::args().skip(1);
    let t_tasks: u64 = args.next().map_or(1000, |s| s.parse().expect("T"));
    let tau: f64 = args.next().map_or(0.3, |s| s.parse().expect("tau"));
    let cfg = DynamicsConfig {
        t_tasks,
        tau,
        ..DynamicsConfig::default()
    };
    let tr = run_dynamics(&cfg)?;

    println!("{:>6} {:>3} {:>10} {:>10}", "i", "s", "a_i", "b_i");
    let stride = (t_tasks as usize / 20).max(1);
    for (i, p) in tr.states.iter().enumerate().step_by(stride) {
        let s = if i == 0 { 0 } else { tr.signs[i - 1].as_i8() };
        println!("{i:>6} {s:>3} {:>10.5} {:>10.5}", p.a, p.b);
    }
    let env = reptile_fluctuation_bound(cfg.r, tau, t_tasks.max(1), 0.05);
    println!();
    println!("a nondecreasing: {}", tr.a_nondecreasing());
    println!("max |a b|:       {:.6}", tr.max_abs_product());
    println!("max |b|:         {:.4} (envelope {env:.4})", tr.max_abs_b());
    Ok(())
}
