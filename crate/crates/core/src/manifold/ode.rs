//! Dormand–Prince 5(4) with step-size control, stopping exactly at checkpoints.

use ndarray::Array1;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-16, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Array1<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `x′ = f(t, x)` from `t0` through each checkpoint in order.
/// Checkpoints must be monotone away from `t0`; negative time is allowed.
pub fn dopri5<F>(mut f: F, t0: f64, x0: &Array1<f64>, checkpoints: &[f64], opts: &OdeOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &Array1<f64>) -> Array1<f64>,
{
    let Some(&t_end) = checkpoints.last() else {
        return Ok(OdeSolution { times: vec![], states: vec![], accepted: 0, rejected: 0 });
    };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    if checkpoints.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || (checkpoints[0] - t0) * dir < 0.0 {
        return Err(Error::InvalidParameter("checkpoints must be monotone away from t0".into()));
    }
    let mut t = t0;
    let mut x = x0.clone();
    let mut k1 = f(t, &x);
    let scale0 = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(opts.atol);
    let d0 = k1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = if d0 > 0.0 { 0.01 * scale0 / d0 } else { 1e-3 } * dir;
    h = h.abs().min((t_end - t0).abs().max(1e-300)) * dir;
    let mut out = OdeSolution { times: vec![], states: vec![], accepted: 0, rejected: 0 };
    let mut next = 0;
    while next < checkpoints.len() && checkpoints[next] == t {
        out.times.push(t);
        out.states.push(x.clone());
        next += 1;
    }
    while next < checkpoints.len() {
        if out.accepted + out.rejected >= opts.max_steps {
            return Err(Error::NoConvergence { depth: opts.max_steps, residual: (checkpoints[next] - t).abs() });
        }
        let target = checkpoints[next];
        let clipped = (target - t) * dir <= h.abs();
        let hs = if clipped { target - t } else { h };
        let mut k = vec![k1.clone()];
        for s in 1..7 {
            let mut xi = x.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    xi.scaled_add(hs * A[s][j], kj);
                }
            }
            k.push(f(t + C[s] * hs, &xi));
            if s == 6 {
                // stage 7 is evaluated at the fifth-order solution
                let err = {
                    let mut e = Array1::<f64>::zeros(x.len());
                    for (j, kj) in k.iter().enumerate() {
                        e.scaled_add(hs * E[j], kj);
                    }
                    let n = x.len().max(1) as f64;
                    (e.iter()
                        .zip(x.iter().zip(xi.iter()))
                        .map(|(e, (a, b))| {
                            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
                            (e / sc).powi(2)
                        })
                        .sum::<f64>()
                        / n)
                        .sqrt()
                };
                if err <= 1.0 {
                    t = if clipped { target } else { t + hs };
                    x = xi;
                    k1 = k[6].clone();
                    out.accepted += 1;
                    if clipped {
                        out.times.push(t);
                        out.states.push(x.clone());
                        next += 1;
                    }
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !clipped || fac < 1.0 {
                        h = hs * fac;
                    }
                } else {
                    out.rejected += 1;
                    h = hs * (0.9 * err.powf(-0.2)).max(0.2);
                }
                if h.abs() < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::NoConvergence { depth: out.accepted, residual: err });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let x0 = Array1::from(vec![1.0, 0.0]);
        let f = |_t: f64, x: &Array1<f64>| Array1::from(vec![x[1], -x[0]]);
        let s = dopri5(f, 0.0, &x0, &[1.0, 2.0, 10.0], &OdeOptions::default()).unwrap();
        for (t, x) in s.times.iter().zip(&s.states) {
            assert!((x[0] - t.cos()).abs() < 1e-9, "{t} {}", x[0]);
            assert!((x[1] + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_in_time() {
        let x0 = Array1::from(vec![1.0]);
        let s = dopri5(|_t, x: &Array1<f64>| x * 0.5, 0.0, &x0, &[-0.5, -1.0], &OdeOptions::default()).unwrap();
        assert!((s.states[1][0] - (-0.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn non_monotone_checkpoints_are_rejected() {
        let x0 = Array1::from(vec![1.0]);
        assert!(dopri5(|_t, x: &Array1<f64>| x.clone(), 0.0, &x0, &[1.0, 0.5], &OdeOptions::default()).is_err());
    }
}
