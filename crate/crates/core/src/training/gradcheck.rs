use crate::model::{assign_flat, flatten, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: String,
    /// Analytic and numeric derivative at `worst`.
    pub worst_pair: (f64, f64),
    pub coords: usize,
}

/// Relative error used per coordinate: `|a - n| / max(|a|, |n|, floor)`. The floor
/// sits above the round-off of a central difference with a 1e-6 step.
pub const SCALE_FLOOR: f64 = 1e-6;

/// Compares `analytic` against central finite differences of `loss` at `params`.
pub fn gradient_check<P: Params + Clone>(
    params: &P,
    analytic: &P,
    mut loss: impl FnMut(&P) -> f64,
    epsilon: f64,
) -> GradCheckReport {
    let base = flatten(params);
    let grad = flatten(analytic);
    assert_eq!(base.len(), grad.len(), "gradient layout differs from parameters");
    let mut names = Vec::with_capacity(base.len());
    params.visit("", &mut |name, _, d| {
        for i in 0..d.len() {
            names.push((name.to_string(), i));
        }
    });
    let mut probe = params.clone();
    let mut x = base.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        worst_pair: (0.0, 0.0),
        coords: base.len(),
    };
    for k in 0..base.len() {
        x[k] = base[k] + epsilon;
        assign_flat(&mut probe, &x);
        let up = loss(&probe);
        x[k] = base[k] - epsilon;
        assign_flat(&mut probe, &x);
        let down = loss(&probe);
        x[k] = base[k];
        let numeric = (up - down) / (2.0 * epsilon);
        let a = grad[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(SCALE_FLOOR);
        if rel > report.max_rel_error || report.worst.is_empty() {
            report.max_rel_error = report.max_rel_error.max(rel);
            let (n, i) = &names[k];
            report.worst = format!("{n}[{i}]");
            report.worst_pair = (a, numeric);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Linear;
    use ndarray::array;

    #[test]
    fn quadratic_is_exact() {
        // L = sum(w^2 * c) + sum(b^3)/3 ... keep it quadratic: L = sum c_i w_i^2 + b . d
        let mut p = Linear::zeros(3, 1);
        p.weight = array![[0.3, -1.2, 2.0]];
        p.bias = array![0.7];
        let c = [1.0, 2.5, -0.5];
        let loss = |q: &Linear| {
            q.weight.iter().zip(&c).map(|(w, c)| c * w * w).sum::<f64>() + 4.0 * q.bias[0]
        };
        let mut g = Linear::zeros(3, 1);
        for j in 0..3 {
            g.weight[[0, j]] = 2.0 * c[j] * p.weight[[0, j]];
        }
        g.bias[0] = 4.0;
        let r = gradient_check(&p, &g, loss, 1e-4);
        assert!(r.max_rel_error < 1e-8, "{r:?}");
        assert_eq!(r.coords, 4);
    }
}
