use crate::error::{Error, Result};

/// Ordinary least squares of `log y` on `log x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

impl SlopeFit {
    /// Value of the fitted power law at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs positive finite data, got ({x:e}, {y:e})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::InvalidParameter(
            "slope fit needs at least 2 distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= 1e-30 * (1.0 + my * my) {
        1.0
    } else {
        let ss_res: f64 = logs
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
        points: points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<_> = (1..6).map(|k| (k as f64, (k as f64).powi(2))).collect();
        let f = fit_slope(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!((f.predict(10.0) - 100.0).abs() < 1e-9);

        let flat = fit_slope(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(flat.r2, 1.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(fit_slope(&[(1.0, 1.0)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
        assert!(fit_slope(&[(-1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(fit_slope(&[(1.0, f64::NAN), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn noisy_fit_has_lower_r2() {
        let pts = [(1.0, 1.0), (2.0, 5.0), (4.0, 3.0), (8.0, 40.0)];
        let f = fit_slope(&pts).unwrap();
        assert!(f.r2 > 0.0 && f.r2 < 1.0);
    }

    proptest! {
        #[test]
        fn recovers_slope_and_scale(slope in -4.0f64..4.0, c in 0.01f64..100.0, x0 in 0.001f64..10.0) {
            let pts: Vec<_> = (0..5).map(|k| {
                let x = x0 * 2f64.powi(k);
                (x, c * x.powf(slope))
            }).collect();
            let f = fit_slope(&pts).unwrap();
            prop_assert!((f.slope - slope).abs() < 1e-9);
            prop_assert!((f.intercept - c.ln()).abs() < 1e-8);
            prop_assert!(f.r2 >= 0.0 && f.r2 <= 1.0);
        }
    }
}
