//! Fixed-step classical Runge-Kutta (RK4) driver over flat `f64` state
//! vectors, with a per-step observer hook.
//!
//! Fixed stepping keeps runs bit-reproducible: the same state, step and step
//! count always produce the same sequence of arithmetic operations.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum IntegratorError {
    #[error("step size must be strictly positive, got {dt:e}")]
    NonPositiveStep { dt: f64 },
    #[error("state became non-finite during step {step}; state rolled back to t = {t_last_good:e}")]
    Diverged { step: usize, t_last_good: f64 },
}

/// Scratch buffers reused across steps of one integration.
struct Stages {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    work: Vec<f64>,
    next: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            work: vec![0.0; dim],
            next: vec![0.0; dim],
        }
    }
}

/// Advance `y` by `n_steps` fixed RK4 steps of size `dt`, starting at time
/// `t0`.
///
/// `observe` is called with `(step_index, t, y)` at step 0 (the initial
/// state), every `record_stride`-th step after that, and at the final step.
/// Each candidate step is validated before being committed; if any component
/// turns non-finite, the state keeps its last good value and
/// [`IntegratorError::Diverged`] reports the failing step.
pub fn integrate<R, O>(
    y: &mut [f64],
    t0: f64,
    dt: f64,
    n_steps: usize,
    record_stride: usize,
    rhs: R,
    mut observe: O,
) -> Result<f64, IntegratorError>
where
    R: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(usize, f64, &[f64]),
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(IntegratorError::NonPositiveStep { dt });
    }
    let stride = record_stride.max(1);
    let dim = y.len();
    let mut s = Stages::new(dim);
    let mut t = t0;

    observe(0, t, y);
    for step in 1..=n_steps {
        rhs(t, y, &mut s.k1);
        for i in 0..dim {
            s.work[i] = y[i] + 0.5 * dt * s.k1[i];
        }
        rhs(t + 0.5 * dt, &s.work, &mut s.k2);
        for i in 0..dim {
            s.work[i] = y[i] + 0.5 * dt * s.k2[i];
        }
        rhs(t + 0.5 * dt, &s.work, &mut s.k3);
        for i in 0..dim {
            s.work[i] = y[i] + dt * s.k3[i];
        }
        rhs(t + dt, &s.work, &mut s.k4);
        for i in 0..dim {
            s.next[i] = y[i] + dt / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
        }
        if !s.next.iter().all(|v| v.is_finite()) {
            return Err(IntegratorError::Diverged {
                step,
                t_last_good: t,
            });
        }
        y.copy_from_slice(&s.next);
        t = t0 + dt * step as f64;
        if step % stride == 0 || step == n_steps {
            observe(step, t, y);
        }
    }
    Ok(t)
}
