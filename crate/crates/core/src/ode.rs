//! Adaptive embedded Runge–Kutta integrator (Dormand–Prince 5(4)).
//!
//! Steps forward or backward depending on the sign of `t_end - t0`; accepted
//! nodes carry derivatives so trajectories can be resampled with cubic
//! Hermite interpolation.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct OdeOptions<F> {
    pub rtol: F,
    pub atol: F,
    pub max_steps: usize,
    /// Initial step guess; `None` picks `(t_end - t0) / 100`.
    pub h0: Option<F>,
}

impl<F: Scalar> Default for OdeOptions<F> {
    fn default() -> Self {
        Self { rtol: F::of(1e-8), atol: F::of(1e-10), max_steps: 200_000, h0: None }
    }
}

/// Accepted integration node: state and derivative at time `t`.
#[derive(Debug, Clone)]
pub struct OdeNode<F> {
    pub t: F,
    pub y: Vec<F>,
    pub dy: Vec<F>,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// 5th-order weights equal the last A row (FSAL); error weights b5 - b4:
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end`, invoking `on_accept`
/// at every accepted node (including the initial one).
pub fn integrate<F, R>(
    mut rhs: R,
    t0: F,
    y0: &[F],
    t_end: F,
    opts: &OdeOptions<F>,
    mut on_accept: impl FnMut(&OdeNode<F>),
) -> Result<OdeNode<F>>
where
    F: Scalar,
    R: FnMut(F, &[F], &mut [F]),
{
    let dim = y0.len();
    let dir = if t_end >= t0 { F::one() } else { -F::one() };
    let span = (t_end - t0).abs();
    if span == F::zero() {
        let mut dy = vec![F::zero(); dim];
        rhs(t0, y0, &mut dy);
        let node = OdeNode { t: t0, y: y0.to_vec(), dy };
        on_accept(&node);
        return Ok(node);
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<F>> = vec![vec![F::zero(); dim]; 7];
    rhs(t, &y, &mut k[0]);
    on_accept(&OdeNode { t, y: y.clone(), dy: k[0].clone() });

    let mut h = opts.h0.unwrap_or(span / F::of(100.0)).abs().min(span) * dir;
    let mut ytmp = vec![F::zero(); dim];
    let mut y5 = vec![F::zero(); dim];

    for _step in 0..opts.max_steps {
        if (t_end - t) * dir <= F::zero() {
            return Ok(OdeNode { t, y, dy: k[0].clone() });
        }
        // land exactly on t_end
        if ((t + h) - t_end) * dir > F::zero() {
            h = t_end - t;
        }

        for s in 0..6 {
            for i in 0..dim {
                let mut acc = F::zero();
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += F::of(a) * kj[i];
                    }
                }
                ytmp[i] = y[i] + h * acc;
            }
            let ts = t + F::of(C[s]) * h;
            let (head, tail) = k.split_at_mut(s + 1);
            let _ = head;
            rhs(ts, &ytmp, &mut tail[0]);
        }
        // 5th-order solution is stage 6's ytmp (A row 5 == b5), FSAL
        y5.copy_from_slice(&ytmp);

        let mut err = F::zero();
        for i in 0..dim {
            let mut e = F::zero();
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += F::of(E[j]) * kj[i];
                }
            }
            e = e * h;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            let r = e / scale;
            err += r * r;
        }
        err = (err / F::of(dim as f64)).sqrt();

        if err <= F::one() || h.abs() <= span * F::of(1e-14) {
            t = t + h;
            y.copy_from_slice(&y5);
            k[0] = k[6].clone(); // FSAL
            on_accept(&OdeNode { t, y: y.clone(), dy: k[0].clone() });
            if (t_end - t) * dir <= span * F::of(1e-14) {
                return Ok(OdeNode { t, y, dy: k[0].clone() });
            }
        }
        let order_inv = F::of(0.2);
        let fac = if err > F::zero() {
            F::of(0.9) * err.powf(-order_inv)
        } else {
            F::of(5.0)
        };
        h = h * fac.max(F::of(0.2)).min(F::of(5.0));
        if !h.is_finite() || h == F::zero() {
            return Err(Error::IntegrationFailure("step size collapsed".into()));
        }
    }
    Err(Error::IntegrationFailure(format!(
        "no convergence within {} steps (t = {t})",
        opts.max_steps
    )))
}

/// Cubic Hermite interpolation between two accepted nodes.
pub fn hermite<F: Scalar>(a: &OdeNode<F>, b: &OdeNode<F>, t: F) -> Vec<F> {
    let h = b.t - a.t;
    if h == F::zero() {
        return a.y.clone();
    }
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let two = F::of(2.0);
    let three = F::of(3.0);
    let h00 = two * s3 - three * s2 + F::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    (0..a.y.len())
        .map(|i| h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let end = integrate(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            &[1.0],
            5.0,
            &OdeOptions::default(),
            |_| {},
        )
        .unwrap();
        assert!((end.y[0] - (-5.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let end = integrate(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0],
            2.0,
            &[2.0f64.exp()],
            0.0,
            &OdeOptions::default(),
            |_| {},
        )
        .unwrap();
        assert!((end.y[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn oscillator_energy_preserved() {
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let end = integrate(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            20.0 * std::f64::consts::PI,
            &opts,
            |_| {},
        )
        .unwrap();
        assert!((end.y[0] - 1.0).abs() < 1e-6);
        assert!(end.y[1].abs() < 1e-6);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        // y = t^3 has exact cubic Hermite interpolation
        let a = OdeNode { t: 1.0f64, y: vec![1.0], dy: vec![3.0] };
        let b = OdeNode { t: 2.0, y: vec![8.0], dy: vec![12.0] };
        for &t in &[1.0, 1.25, 1.5, 1.75, 2.0] {
            let v = hermite(&a, &b, t)[0];
            assert!((v - t * t * t).abs() < 1e-12);
        }
    }
}
