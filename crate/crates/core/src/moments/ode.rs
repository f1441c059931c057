//! Classical fourth-order Runge–Kutta marching with exact checkpoint landing.

use crate::error::{Error, Result};

/// Checks that checkpoint times are finite, nonnegative, and nondecreasing.
pub(crate) fn check_times(times: &[f64], dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if times.is_empty() {
        return Err(Error::InvalidInput("no checkpoint times".into()));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidInput(
            "checkpoint times must be nonnegative and nondecreasing".into(),
        ));
    }
    Ok(())
}

/// Integrates `y' = f(y)` from `t = 0`, calling `record(t_index, y)` at each
/// checkpoint. Steps are `dt` except that the last step before a
/// checkpoint is shortened to land on it exactly.
pub(crate) fn march<F, R>(
    y: &mut Vec<f64>,
    times: &[f64],
    dt: f64,
    mut rhs: F,
    mut record: R,
) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]),
    R: FnMut(usize, &[f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut t = 0.0;
    for (idx, &target) in times.iter().enumerate() {
        // number of steps for this segment, so that rounding never leaves a sliver
        let span = target - t;
        let steps = if span > 0.0 {
            (span / dt - 1e-9).ceil().max(1.0) as usize
        } else {
            0
        };
        for s in 0..steps {
            let h = if s + 1 == steps { target - t } else { dt };
            rhs(y, &mut k1);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            rhs(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            rhs(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + h * k3[i];
            }
            rhs(&tmp, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
        }
        t = target;
        record(idx, y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let exact = (-2.0f64).exp();
        let mut errors = Vec::new();
        for dt in [0.1, 0.05] {
            let mut y = vec![1.0];
            let mut last = 0.0;
            march(
                &mut y,
                &[1.0, 2.0],
                dt,
                |y, out| out[0] = -y[0],
                |i, y| {
                    if i == 1 {
                        last = y[0];
                    }
                    Ok(())
                },
            )
            .unwrap();
            errors.push((last - exact).abs());
        }
        let order = (errors[0] / errors[1]).log2();
        assert!((order - 4.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn lands_on_checkpoints() {
        let mut y = vec![0.0];
        let mut seen = Vec::new();
        march(
            &mut y,
            &[0.0, 0.3, 0.3, 1.0],
            0.07,
            |_, out| out[0] = 1.0,
            |_, y| {
                seen.push(y[0]);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), 4);
        assert!((seen[1] - 0.3).abs() < 1e-14 && (seen[3] - 1.0).abs() < 1e-14);
    }
}
