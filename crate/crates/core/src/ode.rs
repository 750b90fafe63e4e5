//! Classical fourth-order Runge–Kutta on flat state vectors.

/// One RK4 step of `dy/dt = f(y)` with step `h`, in place.
///
/// `f(y, out)` writes the right-hand side into `out`.
pub fn rk4_step<F>(f: &mut F, y: &mut [f64], h: f64, scratch: &mut Rk4Scratch)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = y.len();
    scratch.resize(n);
    let Rk4Scratch { k1, k2, k3, k4, tmp } = scratch;

    f(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(tmp, k4);
    for i in 0..n {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Reusable stage buffers for [`rk4_step`].
#[derive(Debug, Default, Clone)]
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn resize(&mut self, n: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(n, 0.0);
        }
    }
}

/// Integrates `dy/dt = f(y)` from `t = 0` to `t_end` with fixed step `h`
/// (the last step is shortened to land on `t_end`).
pub fn integrate_fixed<F>(mut f: F, y0: &[f64], t_end: f64, h: f64) -> Vec<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    assert!(h > 0.0 && t_end >= 0.0);
    let mut y = y0.to_vec();
    let mut scratch = Rk4Scratch::default();
    let steps = (t_end / h).ceil() as u64;
    let mut t = 0.0;
    for k in 0..steps {
        let step = if k + 1 == steps { t_end - t } else { h };
        if step <= 0.0 {
            break;
        }
        rk4_step(&mut f, &mut y, step, &mut scratch);
        t += step;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate_fixed(|y, out| out[0] = -2.0 * y[0], &[1.0], 1.5, 1e-3);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let y = integrate_fixed(
            |y, out| {
                out[0] = y[1];
                out[1] = -y[0];
            },
            &[1.0, 0.0],
            std::f64::consts::TAU,
            1e-3,
        );
        assert!((y[0] - 1.0).abs() < 1e-12 && y[1].abs() < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let y = integrate_fixed(|_, out| out[0] = 1.0, &[3.0], 0.0, 0.1);
        assert_eq!(y, vec![3.0]);
    }
}
