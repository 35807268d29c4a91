//! Classic fixed-step fourth-order Runge-Kutta.

use nalgebra::SVector;

/// Advances `y' = f(t, y)` by one step of size `dt`.
///
/// The derivative may fail; the first error aborts the step.
pub fn rk4_step<const N: usize, E, F>(
    mut f: F,
    t: f64,
    y: &SVector<f64, N>,
    dt: f64,
) -> Result<SVector<f64, N>, E>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
{
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &(y + k1 * half))?;
    let k3 = f(t + half, &(y + k2 * half))?;
    let k4 = f(t + dt, &(y + k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use std::convert::Infallible;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut y = SVector::<f64, 1>::new(1.0);
        let dt = 0.01;
        for i in 0..100 {
            y = rk4_step::<1, Infallible, _>(|_, y| Ok(-y), i as f64 * dt, &y, dt).unwrap();
        }
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = 3 t^2 is integrated exactly by a fourth-order method.
        let mut y = Vector2::new(0.0, 0.0);
        let dt = 0.1;
        for i in 0..10 {
            let t = i as f64 * dt;
            y = rk4_step::<2, Infallible, _>(|t, _| Ok(Vector2::new(3.0 * t * t, 0.0)), t, &y, dt)
                .unwrap();
        }
        assert!((y[0] - 1.0).abs() < 1e-13);
    }
}
