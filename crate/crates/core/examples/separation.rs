//! Convex methods versus a learned spiked first layer at a reduced scale.
//!
//! The full-size run is `metasep separation`.

use metasep::experiments::{run_separation, SeparationConfig};
use metasep::risk::Workers;

fn main() -> metasep::Result<()> {
    let cfg = SeparationConfig {
        d: 20,
        epsilon: 0.1,
        trials: 200,
        convex_grid: vec![20, 60, 120, 180],
        nonconvex_grid: vec![10, 20, 40],
        reptile_t: 100_000,
        ..SeparationConfig::default()
    };
    let rep = run_separation(&cfg, &Workers::available()?)?;
    println!("d = {}, eps = {}", cfg.d, cfg.epsilon);
    println!("exact bound needs n >= {}", rep.convex_lower_bound_n);
    for c in &rep.convex {
        let means: Vec<String> = c.search.points.iter().map(|p| format!("n={}:{:.3}", p.n, p.estimate.mean)).collect();
        println!("  convex {} -> n_eps {:?}  [{}]", c.alg, c.search.n_eps, means.join(" "));
    }
    for p in &rep.nonconvex {
        let means: Vec<String> = p.search.points.iter().map(|g| format!("n={}:{:.3}", g.n, g.estimate.mean)).collect();
        println!(
            "  {} (alpha {:.1}, lambda {:.1}) -> n_eps {:?}  [{}]",
            p.meta_learner,
            p.alpha,
            p.lambda,
            p.search.n_eps,
            means.join(" ")
        );
    }
    Ok(())
}
