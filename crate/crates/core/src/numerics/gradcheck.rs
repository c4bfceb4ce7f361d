use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Graph, NumericsError, Tensor, Var};

/// Outcome of comparing reverse-mode gradients against central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    pub max_rel_error: f64,
    pub per_param: BTreeMap<String, f64>,
}

/// Relative error with denominator `max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Checks the gradient of a scalar loss with respect to every named tensor.
///
/// `loss_fn` receives a fresh graph and one differentiable leaf per entry of
/// `params`, in order, and must return a scalar node. It is called once for
/// the analytic pass and twice per parameter element for the numeric pass.
pub fn grad_check<F, E>(loss_fn: F, params: &[(&str, Tensor)], eps: f64) -> Result<GradReport, E>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, E>,
    E: From<NumericsError>,
{
    let evaluate = |tensors: &[Tensor]| -> Result<f64, E> {
        let mut g = Graph::new();
        let vars: Vec<Var> = tensors.iter().map(|t| g.param(t)).collect();
        let loss = loss_fn(&mut g, &vars)?;
        let v = g.scalar(loss);
        if !v.is_finite() {
            return Err(NumericsError::NonFinite("grad_check loss").into());
        }
        Ok(v)
    };

    let mut tensors: Vec<Tensor> = params.iter().map(|(_, t)| t.clone()).collect();
    let mut g = Graph::new();
    let vars: Vec<Var> = tensors.iter().map(|t| g.param(t)).collect();
    let loss = loss_fn(&mut g, &vars)?;
    if !g.scalar(loss).is_finite() {
        return Err(NumericsError::NonFinite("grad_check loss").into());
    }
    let grads = g.backward(loss)?;

    let mut report = GradReport {
        max_rel_error: 0.0,
        per_param: BTreeMap::new(),
    };
    for (k, (name, _)) in params.iter().enumerate() {
        let analytic: Vec<f64> = match grads.get(vars[k]) {
            Some(gr) => gr.to_vec(),
            None => alloc::vec![0.0; tensors[k].len()],
        };
        let mut worst: f64 = 0.0;
        for i in 0..tensors[k].len() {
            let orig = tensors[k].data()[i];
            tensors[k].data_mut()[i] = orig + eps;
            let up = evaluate(&tensors)?;
            tensors[k].data_mut()[i] = orig - eps;
            let down = evaluate(&tensors)?;
            tensors[k].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max(relative_error(analytic[i], numeric));
        }
        report.max_rel_error = report.max_rel_error.max(worst);
        report.per_param.insert(name.to_string(), worst);
    }
    Ok(report)
}
