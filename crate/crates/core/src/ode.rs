//! Dormand–Prince 5(4) integrator for flat state vectors.
//!
//! Output is produced only at requested sample times; steps are shortened to
//! land on each sample exactly, so sampled values never come from
//! interpolation.

use crate::error::{Error, Result};

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// Embedded error estimate with per-component tolerance `atol + rtol·|y|`.
    Adaptive {
        rtol: f64,
        atol: f64,
        max_step: f64,
        min_step: f64,
        max_steps: usize,
    },
    /// Fifth-order steps no longer than `step`, subdivided evenly between samples.
    Fixed { step: f64 },
}

impl StepControl {
    pub fn adaptive(rtol: f64, atol: f64, max_step: f64) -> Self {
        StepControl::Adaptive {
            rtol,
            atol,
            max_step,
            min_step: 1e-14 * max_step,
            max_steps: 50_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<F> {
    f: F,
    k: [Vec<f64>; 7],
    scratch: Vec<f64>,
    next: Vec<f64>,
    /// `k[0]` holds f(t, y) for the current point.
    fresh: bool,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Stepper<F> {
    fn new(f: F, n: usize) -> Self {
        Self {
            f,
            k: std::array::from_fn(|_| vec![0.0; n]),
            scratch: vec![0.0; n],
            next: vec![0.0; n],
            fresh: false,
        }
    }

    /// One trial step; leaves the candidate in `self.next` and stage 7 in `k[6]`.
    #[allow(clippy::needless_range_loop)]
    fn attempt(&mut self, t: f64, y: &[f64], h: f64) {
        if !self.fresh {
            (self.f)(t, y, &mut self.k[0]);
            self.fresh = true;
        }
        for s in 1..7 {
            for i in 0..y.len() {
                let mut acc = 0.0;
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[r][i];
                }
                self.scratch[i] = y[i] + h * acc;
            }
            if s == 6 {
                self.next.copy_from_slice(&self.scratch);
            }
            (self.f)(t + C[s] * h, &self.scratch, &mut self.k[s]);
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn error_norm(&self, y: &[f64], h: f64, rtol: f64, atol: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..y.len() {
            let mut e = 0.0;
            for (r, w) in E.iter().enumerate() {
                e += w * self.k[r][i];
            }
            let scale = atol + rtol * y[i].abs().max(self.next[i].abs());
            sum += (h * e / scale).powi(2);
        }
        (sum / y.len() as f64).sqrt()
    }

    fn accept(&mut self, y: &mut [f64]) {
        y.copy_from_slice(&self.next);
        self.k.swap(0, 6);
    }
}

fn all_finite(y: &[f64]) -> bool {
    y.iter().all(|x| x.is_finite())
}

/// Integrates `dy/dt = f(t, y)` from `t0` through every time in `samples`
/// (strictly increasing, all `> t0`), returning the state at each sample.
pub fn integrate<F>(f: F, t0: f64, y0: &[f64], samples: &[f64], control: StepControl) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if samples.windows(2).any(|w| w[1] <= w[0]) || samples.first().is_some_and(|&s| s <= t0) {
        return Err(Error::invalid("sample times must increase strictly past the start"));
    }
    let mut stepper = Stepper::new(f, y0.len());
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut out = Vec::with_capacity(samples.len());

    match control {
        StepControl::Fixed { step } => {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::invalid("fixed step must be positive"));
            }
            for &target in samples {
                let n = ((target - t) / step).ceil().max(1.0) as usize;
                let h = (target - t) / n as f64;
                for i in 0..n {
                    stepper.attempt(t, &y, h);
                    stepper.accept(&mut y);
                    t = if i + 1 == n { target } else { t + h };
                    if !all_finite(&y) {
                        return Err(Error::NonFinite { t });
                    }
                }
                out.push(y.clone());
            }
        }
        StepControl::Adaptive {
            rtol,
            atol,
            max_step,
            min_step,
            max_steps,
        } => {
            if !(rtol > 0.0 && atol > 0.0 && max_step > 0.0) {
                return Err(Error::invalid("tolerances and max step must be positive"));
            }
            let mut h = max_step.min(samples.last().map_or(max_step, |&e| (e - t0) * 1e-3));
            let mut steps = 0usize;
            for &target in samples {
                while t < target {
                    steps += 1;
                    if steps > max_steps {
                        return Err(Error::StepLimit {
                            steps: max_steps,
                            t_end: target,
                        });
                    }
                    let remaining = target - t;
                    let landing = h >= remaining;
                    let h_try = if landing { remaining } else { h };
                    stepper.attempt(t, &y, h_try);
                    let err = stepper.error_norm(&y, h_try, rtol, atol);
                    if !err.is_finite() {
                        if h_try <= min_step {
                            return Err(Error::NonFinite { t });
                        }
                        h = h_try * 0.1;
                        continue;
                    }
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if err <= 1.0 {
                        stepper.accept(&mut y);
                        t = if landing { target } else { t + h_try };
                        // a short landing step says nothing about the natural step size
                        if !landing || factor < 1.0 {
                            h = (h_try * factor).min(max_step);
                        }
                    } else {
                        h = h_try * factor.min(1.0);
                        if h < min_step {
                            return Err(Error::StepUnderflow { t, step: h });
                        }
                    }
                }
                if !all_finite(&y) {
                    return Err(Error::NonFinite { t });
                }
                out.push(y.clone());
            }
        }
    }
    Ok(out)
}
