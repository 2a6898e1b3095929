//! Central-difference gradient verification.

use super::NeuralError;

/// Compares an analytic gradient against central finite differences
/// `(f(p + eps) - f(p - eps)) / (2 eps)` per coordinate and returns the
/// worst relative error, with denominator `max(|analytic|, |numeric|, 1e-8)`.
///
/// `eps` must lie in (0, 1e-2]. Non-finite objective values are an error.
pub fn grad_check<F, G>(
    f: F,
    analytic: G,
    params: &[f64],
    eps: f64,
) -> Result<f64, NeuralError>
where
    F: Fn(&[f64]) -> Result<f64, NeuralError>,
    G: Fn(&[f64]) -> Result<Vec<f64>, NeuralError>,
{
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(NeuralError::Domain(format!(
            "grad_check eps must be in (0, 1e-2], got {eps}"
        )));
    }
    let grad = analytic(params)?;
    if grad.len() != params.len() {
        return Err(NeuralError::Shape {
            context: "grad_check analytic gradient",
            expected: params.len(),
            got: grad.len(),
        });
    }
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let saved = work[i];
        work[i] = saved + eps;
        let plus = f(&work)?;
        work[i] = saved - eps;
        let minus = f(&work)?;
        work[i] = saved;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NeuralError::NonFinite {
                context: format!("objective at coordinate {i}"),
            });
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = grad[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    Ok(worst)
}
