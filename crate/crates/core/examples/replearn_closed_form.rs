//! The multi-task objective's flow limit in closed form, checked against a dense RK4 run.

use metasep::meta::{bad_minimizer, rep_loss, run_replearn};
use metasep::oracle::replearn_joint_flow;
use metasep::{FirstLayer, MetaInstance, Sign, Vector};

fn main() -> metasep::Result<()> {
    let inst = MetaInstance::new(Vector::from(vec![0.6, 0.0, -0.8, 0.0]), 0.0)?;
    let signs = [Sign::Plus, Sign::Minus, Sign::Plus];
    let sol = run_replearn(signs.len() as f64, 0.1, &inst)?;
    let flow = replearn_joint_flow(0.1, &inst, &signs, 1e4, 1e-12);
    let err = flow.first.sub(sol.first.to_dense().as_matrix()).frobenius();
    println!("alpha = {:.6}, b = {:.6}", sol.alpha(), sol.b_bar);
    println!("dense flow converged={} at t={:.1}, |A_flow - A_closed|_F = {err:.2e}", flow.converged, flow.time);

    println!("\nalpha as the task count grows (kappa = 0.1, r = 1):");
    for t in [1e2, 1e4, 1e8, 1e16] {
        println!("  T = {t:>7.0e}  alpha = {:.4e}", run_replearn(t, 0.1, &inst)?.alpha());
    }

    let (id, seconds) = bad_minimizer(&inst, &signs);
    let loss = rep_loss(&inst, &FirstLayer::Dense(id), &seconds, &signs)?;
    println!("\nidentity first layer with w_i = s_i w*: loss {loss}");
    Ok(())
}
