use super::{Metric, MetricValue};
use crate::error::{Error, Result};

/// Sample Pearson correlation, computed from centered values.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<MetricValue> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "columns have different lengths ({} and {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidParameter("correlation needs at least 3 observations".into()));
    }
    if is_constant(x) {
        return Err(Error::ConstantColumn("x".into()));
    }
    if is_constant(y) {
        return Err(Error::ConstantColumn("y".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(MetricValue::new(Metric::Corr, r))
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}
