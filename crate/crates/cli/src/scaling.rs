//! Power-law fit of the scattered-field magnitude against particle size.

use impscat_core::{OneBodySolution, Vec3};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub kappa: f64,
    /// Least-squares slope of `ln|E_s|` against `ln a`.
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub half_width: f64,
    pub sizes: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

/// Least-squares line through `(x, y)`: slope, intercept and the 95%
/// half-width of the slope. Needs at least three points.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let dof = n - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).expect("dof >= 1").inverse_cdf(0.975);
    (slope, intercept, t * se)
}

/// Scattered field of one particle at the configured observation point for
/// each size in `a_values`, fitted against `a` on log-log axes.
pub fn scaling_study(base: &ScenarioConfig, a_values: &[f64], kappa: f64) -> Result<ScalingFit> {
    let mut cfg = base.clone();
    cfg.impedance.kappa = kappa;
    let sc = cfg.scaling.get_or_insert_with(|| base.scaling.clone().expect("validated"));
    sc.a_values = a_values.to_vec();
    sc.kappas = Some(vec![kappa]);
    cfg.validate(ScenarioKind::Scaling).map_err(|e| CliError::Config {
        origin: "scaling study".into(),
        line: None,
        key: e.key,
        message: e.message,
    })?;
    let med = cfg.medium()?;
    let pw = cfg.plane_wave()?;
    let sm = cfg.shape_matrices()?;
    let imp = cfg.impedance()?;
    let center = Vec3(cfg.particle.expect("validated").center);
    let obs = Vec3(cfg.scaling.as_ref().expect("validated").observation);
    let mut magnitudes = Vec::with_capacity(a_values.len());
    for &a in a_values {
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, center, a)?;
        magnitudes.push(sol.scattered_field(&obs)?.norm());
    }
    if magnitudes.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(CliError::ZeroSignal(format!(
            "scattered field vanishes at the observation point (magnitudes {magnitudes:?}); \
             check that h is nonzero and the incident curl does not vanish at the particle"
        )));
    }
    let lx: Vec<f64> = a_values.iter().map(|a| a.ln()).collect();
    let ly: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let (slope, intercept, half_width) = fit_line(&lx, &ly);
    Ok(ScalingFit { kappa, slope, intercept, half_width, sizes: a_values.to_vec(), magnitudes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_zero_width() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, c, w) = fit_line(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (c + 1.0).abs() < 1e-14 && w < 1e-12);
    }

    #[test]
    fn half_width_matches_textbook_example() {
        // Residuals 0.1, -0.2, 0.1 around y = x; t(0.975, 1) = 12.7062.
        let (s, _, w) = fit_line(&[0.0, 1.0, 2.0], &[0.1, 0.8, 2.1]);
        assert!((s - 1.0).abs() < 1e-12);
        let se = (0.06f64 / 1.0 / 2.0).sqrt();
        assert!((w - 12.706204736174707 * se).abs() < 1e-9, "{w}");
    }
}
