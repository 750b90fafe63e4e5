//! Final `a_T` under the tuned step size, against the high-probability lower bound.

use metasep::experiments::{run_growth, GrowthConfig};
use metasep::risk::Workers;

fn main() -> metasep::Result<()> {
    let cfg = GrowthConfig {
        seeds: 10,
        ..GrowthConfig::default()
    };
    let (rows, frac) = run_growth(&cfg, &Workers::available()?)?;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "T", "tau", "bound", "min a_T", "max a_T");
    for &t in &cfg.t_values {
        let sel: Vec<_> = rows.iter().filter(|r| r.t == t).collect();
        let lo = sel.iter().map(|r| r.a_t).fold(f64::INFINITY, f64::min);
        let hi = sel.iter().map(|r| r.a_t).fold(0.0, f64::max);
        println!("{t:>8} {:>10.5} {:>10.4} {lo:>10.4} {hi:>10.4}", sel[0].tau, sel[0].bound);
    }
    for (t, f) in frac {
        println!("T={t}: bound held in {:.0}% of runs", 100.0 * f);
    }
    Ok(())
}
