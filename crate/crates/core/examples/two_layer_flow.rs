//! Population gradient flow of a two-layer linear model versus its closed-form limit.

use metasep::twolayer::{gd_pop_fixed_point, gd_pop_flow_numeric, FLOW_T_MAX, FLOW_TOL};
use metasep::{FirstLayer, MetaInstance, ScalarPair, Sign, SpikedIdentity, TwoLayerParams};

fn main() -> metasep::Result<()> {
    let inst = MetaInstance::axis_aligned(3, 1.0, 0.0)?;
    let u = inst.direction();
    println!("{:>5} {:>5} {:>3} {:>10} {:>10} {:>10} {:>10} {:>9}", "a0", "b0", "s", "a_flow", "a_closed", "b_flow", "b_closed", "drift");
    for (a, b) in [(0.1, 0.0), (0.5, 0.2), (1.2, 0.9), (2.0, 0.0)] {
        for s in [Sign::Plus, Sign::Minus] {
            let params = TwoLayerParams::new(FirstLayer::Spiked(SpikedIdentity::new(&u, a, 0.1)?), u.scaled(b))?;
            let out = gd_pop_flow_numeric(&params, &inst.task(s), FLOW_T_MAX, FLOW_TOL)?;
            let fp = gd_pop_fixed_point(ScalarPair::new(a, b), inst.r(), s);
            println!(
                "{a:>5} {b:>5} {:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>9.1e}",
                s.as_i8(),
                u.dot(&out.params.first.matvec(&u)),
                fp.a,
                u.dot(&out.params.second),
                fp.b,
                out.conserved_drift
            );
        }
    }
    Ok(())
}
