//! Classical fourth-order Runge-Kutta stepping.

use crate::error::{Error, Result};

/// A state that can be advanced by explicit Runge-Kutta stages.
pub trait RkState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn is_finite(&self) -> bool;
}

impl RkState for f64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl<const K: usize> RkState for [f64; K] {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// One classical RK4 step of size `dt` starting at time `t`.
///
/// `rhs` maps a state to its tendency. Any non-finite stage aborts with
/// [`Error::BlowUp`] carrying the stage time.
pub fn step_rk4<S, F>(state: &S, t: f64, dt: f64, mut rhs: F) -> Result<S>
where
    S: RkState,
    F: FnMut(&S) -> Result<S>,
{
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    let stage = |s: &S, time: f64| -> Result<()> {
        if s.is_finite() {
            Ok(())
        } else {
            Err(Error::BlowUp { time })
        }
    };

    let k1 = rhs(state)?;
    stage(&k1, t)?;
    let mut y = state.clone();
    y.axpy(0.5 * dt, &k1);
    let k2 = rhs(&y)?;
    stage(&k2, t + 0.5 * dt)?;
    let mut y = state.clone();
    y.axpy(0.5 * dt, &k2);
    let k3 = rhs(&y)?;
    stage(&k3, t + 0.5 * dt)?;
    let mut y = state.clone();
    y.axpy(dt, &k3);
    let k4 = rhs(&y)?;
    stage(&k4, t + dt)?;

    let mut out = state.clone();
    let mut incr = k1;
    incr.axpy(2.0, &k2);
    incr.axpy(2.0, &k3);
    incr.axpy(1.0, &k4);
    out.axpy(dt / 6.0, &incr);
    stage(&out, t + dt)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_single_step() {
        let y = step_rk4(&1.0f64, 0.0, 0.1, |y| Ok(-*y)).unwrap();
        // 1 - h + h²/2 - h³/6 + h⁴/24 at h = 0.1
        assert!((y - 0.904_837_5).abs() < 1e-12);
        assert!((y - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn zero_tendency_is_bit_exact() {
        let y0 = [0.3, -1.25, 7.0];
        let y = step_rk4(&y0, 0.0, 0.01, |_| Ok([0.0; 3])).unwrap();
        assert_eq!(y, y0);
    }

    fn oscillator_error(steps: usize) -> f64 {
        let dt = 1.0 / steps as f64;
        let mut y = [1.0, 0.0];
        for s in 0..steps {
            y = step_rk4(&y, s as f64 * dt, dt, |y| Ok([y[1], -y[0]])).unwrap();
        }
        ((y[0] - 1f64.cos()).powi(2) + (y[1] + 1f64.sin()).powi(2)).sqrt()
    }

    #[test]
    fn fourth_order_on_oscillator() {
        let ratio = oscillator_error(10) / oscillator_error(20);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn blow_up_reports_time() {
        let err = step_rk4(&1.0f64, 2.0, 0.5, |_| Ok(f64::NAN)).unwrap_err();
        assert!(matches!(err, Error::BlowUp { time } if time == 2.0));
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(step_rk4(&1.0f64, 0.0, 0.0, |y| Ok(*y)).is_err());
    }
}
