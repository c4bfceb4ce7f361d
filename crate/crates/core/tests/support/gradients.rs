//! Finite-difference gradient checks shared by several test targets.

use xmodal_core::adapter::{input_frames, AdapterConfig, AdapterParams, ParamId, ParamVars};
use xmodal_core::numerics::{grad_check, GradReport, Graph, NumericsError, Tensor, Var};
use xmodal_core::rng;
use xmodal_core::training::{
    eos_bce_loss, eos_probabilities, mse_loss, peel_back_inputs, rollout, TrainError,
};

type LossFn = Box<dyn Fn(&mut Graph, &[Var]) -> Result<Var, NumericsError>>;

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| rng::normal(&mut r)).collect()
}

fn vector(n: usize, seed: u64) -> Tensor {
    Tensor::vector(normals(n, seed))
}

/// Reduces a vector node to a scalar through a fixed random projection.
fn project(g: &mut Graph, v: Var, seed: u64) -> Result<Var, NumericsError> {
    let n = g.value(v).len();
    let r = g.constant(vector(n, seed));
    g.dot(v, r)
}

/// One check per differentiable graph operation, on inputs drawn from `seed`.
pub fn op_reports(seed: u64) -> Vec<(&'static str, GradReport)> {
    let n = 5;
    let a = vector(n, seed);
    let b = vector(n, seed + 1);
    let positive = Tensor::vector(normals(n, seed + 2).iter().map(|v| v.exp()).collect());
    let w = Tensor::matrix(3, n, normals(3 * n, seed + 3)).unwrap();
    let p = seed + 100;
    let cases: Vec<(&'static str, Vec<Tensor>, LossFn)> = vec![
        (
            "linear",
            vec![w, a.clone()],
            Box::new(move |g, v| {
                let y = g.linear(v[0], v[1])?;
                project(g, y, p)
            }),
        ),
        (
            "add",
            vec![a.clone(), b.clone()],
            Box::new(move |g, v| {
                let y = g.add(v[0], v[1])?;
                project(g, y, p)
            }),
        ),
        (
            "sub",
            vec![a.clone(), b.clone()],
            Box::new(move |g, v| {
                let y = g.sub(v[0], v[1])?;
                project(g, y, p)
            }),
        ),
        (
            "mul",
            vec![a.clone(), b.clone()],
            Box::new(move |g, v| {
                let y = g.mul(v[0], v[1])?;
                project(g, y, p)
            }),
        ),
        (
            "scale",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.scale(v[0], -1.7);
                project(g, y, p)
            }),
        ),
        (
            "offset",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.offset(v[0], 0.3);
                let y = g.mul(y, y)?;
                project(g, y, p)
            }),
        ),
        (
            "tanh",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.tanh(v[0]);
                project(g, y, p)
            }),
        ),
        (
            "sigmoid",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.sigmoid(v[0]);
                project(g, y, p)
            }),
        ),
        (
            "exp",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.exp(v[0]);
                project(g, y, p)
            }),
        ),
        (
            "ln",
            vec![positive],
            Box::new(move |g, v| {
                let y = g.ln(v[0]);
                project(g, y, p)
            }),
        ),
        (
            "clamp",
            // Inputs sit well inside or well outside the bounds.
            vec![Tensor::vector(vec![-2.0, -0.4, 0.1, 0.45, 3.0])],
            Box::new(move |g, v| {
                let y = g.clamp(v[0], -1.0, 1.0);
                let y = g.mul(y, y)?;
                project(g, y, p)
            }),
        ),
        (
            "softmax",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.softmax(v[0])?;
                project(g, y, p)
            }),
        ),
        (
            "log_softmax",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.log_softmax(v[0])?;
                project(g, y, p)
            }),
        ),
        (
            "concat",
            vec![a.clone(), Tensor::vector(normals(2, seed + 4))],
            Box::new(move |g, v| {
                let y = g.concat(&[v[0], v[1], v[0]])?;
                project(g, y, p)
            }),
        ),
        (
            "slice",
            vec![a.clone()],
            Box::new(move |g, v| {
                let y = g.slice(v[0], 1, 3)?;
                project(g, y, p)
            }),
        ),
        (
            "dot",
            vec![a.clone(), b.clone()],
            Box::new(|g, v| g.dot(v[0], v[1])),
        ),
        (
            "sum",
            vec![a.clone()],
            Box::new(|g, v| {
                let y = g.mul(v[0], v[0])?;
                Ok(g.sum(y))
            }),
        ),
        (
            "weighted_sum",
            vec![
                Tensor::vector(normals(3, seed + 5)),
                a.clone(),
                b.clone(),
                a,
            ],
            Box::new(move |g, v| {
                let y = g.weighted_sum(v[0], &v[1..])?;
                project(g, y, p)
            }),
        ),
    ];
    cases
        .into_iter()
        .map(|(name, tensors, f)| {
            let named: Vec<(&str, Tensor)> = tensors.into_iter().map(|t| ("x", t)).collect();
            let report = grad_check(&*f, &named, 1e-6).unwrap();
            (name, report)
        })
        .collect()
}

/// Full adapter forward and backward: encoder, a mixed teacher/model decoder
/// rollout with MSE on the outputs, and the EOS loss over `T + w` steps.
/// The step is 1e-5: smaller steps let round-off dominate the few very small
/// gradient entries deep in the recurrence.
pub fn adapter_report(d: usize, len: usize, target_len: usize, seed: u64) -> GradReport {
    let cfg = AdapterConfig::with_dims(d, d, d);
    let mut params = AdapterParams::init(&cfg, seed).unwrap();
    let mut r = rng::seeded(seed + 1);
    for id in ParamId::ALL {
        for v in params.get_mut(id).data_mut() {
            *v += 0.2 * rng::normal(&mut r);
        }
    }
    let features = Tensor::matrix(len, d, normals(len * d, seed + 2)).unwrap();
    let targets = Tensor::matrix(target_len, d, normals(target_len * d, seed + 3)).unwrap();
    let named: Vec<(&str, Tensor)> = params
        .iter()
        .map(|(id, t)| (id.name(), t.clone()))
        .collect();
    grad_check::<_, TrainError>(
        |g, vars| {
            let pv = ParamVars::from_vars(vars.to_vec());
            let frames = input_frames(g, &features);
            let sources = peel_back_inputs(target_len, 0.6, target_len + cfg.eos_window);
            let ro = rollout(g, &pv, &cfg, &frames, Some(&targets), &sources)?;
            let truth: Vec<Var> = (0..target_len)
                .map(|i| g.constant(Tensor::vector(targets.row(i).to_vec())))
                .collect();
            let mse = mse_loss(g, &ro.ys[..target_len], &truth)?;
            let probs = eos_probabilities(g, &pv, &cfg, &ro, target_len)?;
            let bce = eos_bce_loss(g, &probs, target_len, 1.5)?;
            Ok(g.add(mse, bce)?)
        },
        &named,
        1e-5,
    )
    .unwrap()
}
