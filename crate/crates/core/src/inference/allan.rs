//! Non-overlapping Allan deviation of force-estimate time series.

use super::InferenceError;

/// Allan deviation over the requested averaging times τ (each must be an
/// integer multiple of the sample interval 1/f_s). Unrepresentable or
/// too-long τ values are skipped with a note. Returns (τ, ADEV) pairs in the
/// order requested.
pub fn allan_deviation(
    series: &[f64],
    f_s: f64,
    taus: &[f64],
) -> Result<(Vec<(f64, f64)>, Vec<String>), InferenceError> {
    let max_m = taus
        .iter()
        .map(|t| (t * f_s).round() as usize)
        .max()
        .unwrap_or(1);
    if series.len() < 2 * max_m.max(1) {
        return Err(InferenceError::SeriesTooShort {
            need: 2 * max_m,
            got: series.len(),
        });
    }
    let mut out = Vec::with_capacity(taus.len());
    let mut notes = Vec::new();
    for &tau in taus {
        let m_float = tau * f_s;
        let m = m_float.round() as usize;
        if m < 1 || (m_float - m as f64).abs() > 1e-6 * m_float.max(1.0) {
            notes.push(format!(
                "tau = {tau} s is not an integer multiple of 1/f_s; skipped"
            ));
            continue;
        }
        let windows = series.len() / m;
        if windows < 2 {
            notes.push(format!("tau = {tau} s leaves fewer than 2 windows; skipped"));
            continue;
        }
        let means: Vec<f64> = (0..windows)
            .map(|k| series[k * m..(k + 1) * m].iter().sum::<f64>() / m as f64)
            .collect();
        let avar = means
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum::<f64>()
            / (2.0 * (windows - 1) as f64);
        out.push((tau, avar.sqrt()));
    }
    if out.is_empty() {
        return Err(InferenceError::NoUsableTaus(notes));
    }
    Ok((out, notes))
}
