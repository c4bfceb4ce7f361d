use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::mask::{mask_positions, masked_input};
use super::{
    eos_bce_loss, eos_probabilities, mse_loss, peel_back_inputs, rollout, teacher_forcing_ratio,
    toy_cross_entropy, Adam, Example, StageConfig, StageId, ToyDecoderParams, ToyId, ToyVars,
    TrainError,
};
use crate::adapter::{input_frames, AdapterParams, ParamId, ParamVars};
use crate::numerics::{Graph, Tensor, Var};
use crate::rng;

/// One line of the training log. `val_loss` is only set on evaluation steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRow {
    pub step: u64,
    pub lambda: f64,
    pub loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct StageOutcome {
    /// Parameters at the best validation step.
    pub params: AdapterParams,
    pub toy: Option<ToyDecoderParams>,
    pub metrics: Vec<MetricRow>,
    pub best_step: u64,
    pub best_val: f64,
}

fn example_loss(
    g: &mut Graph,
    pv: &ParamVars,
    tv: Option<&ToyVars>,
    cfg: &StageConfig,
    params: &AdapterParams,
    ex: &Example,
    lambda: f64,
    mask_seed: Option<u64>,
    validation: bool,
) -> Result<Var, TrainError> {
    let acfg = params.config();
    let frames = match mask_seed {
        Some(seed) => {
            let mask = mask_positions(ex.features.rows(), &cfg.mask, seed);
            masked_input(g, &ex.features, pv.get(ParamId::MaskEmbedding), &mask)
        }
        None => input_frames(g, &ex.features),
    };
    let len = ex.targets.rows();
    match cfg.stage {
        StageId::One | StageId::Two => {
            let sources = peel_back_inputs(len, lambda, len);
            let ro = rollout(g, pv, acfg, &frames, Some(&ex.targets), &sources)?;
            let targets: Vec<Var> = (0..len)
                .map(|i| g.constant(Tensor::vector(ex.targets.row(i).to_vec())))
                .collect();
            mse_loss(g, &ro.ys, &targets)
        }
        StageId::Three | StageId::Joint => {
            // A few extra free-running steps so the EOS window at the last
            // target position sees the same neighbours it will at inference.
            let sources = peel_back_inputs(len, lambda, len + acfg.eos_window);
            let ro = rollout(g, pv, acfg, &frames, Some(&ex.targets), &sources)?;
            let ce = match (cfg.stage, tv) {
                (StageId::Joint, Some(tv)) => Some(toy_cross_entropy(
                    g,
                    tv,
                    cfg.toy,
                    &ro.ys[..len],
                    &ex.tokens,
                )?),
                _ => None,
            };
            if validation {
                if let Some(ce) = ce {
                    return Ok(ce);
                }
            }
            let probs = eos_probabilities(g, pv, acfg, &ro, len)?;
            let pos_weight = cfg.pos_weight.unwrap_or(len as f64 / 4.0);
            let bce = eos_bce_loss(g, &probs, len, pos_weight)?;
            match ce {
                Some(ce) => Ok(g.add(ce, bce)?),
                None => Ok(bce),
            }
        }
    }
}

fn check_examples(
    cfg: &StageConfig,
    params: &AdapterParams,
    data: &[Example],
    what: &str,
) -> Result<(), TrainError> {
    if data.is_empty() {
        return Err(TrainError::Data(alloc::format!("{what} set is empty")));
    }
    let acfg = params.config();
    for ex in data {
        let ok = ex.features.rank() == 2
            && ex.features.cols() == acfg.d_in
            && ex.features.rows() > 0
            && ex.targets.rank() == 2
            && ex.targets.cols() == acfg.d_txt
            && ex.targets.rows() > 0
            && ex.features.is_finite()
            && ex.targets.is_finite();
        if !ok {
            return Err(TrainError::Data(alloc::format!(
                "{what} example {} has features {:?} and targets {:?}",
                ex.id,
                ex.features.shape(),
                ex.targets.shape()
            )));
        }
        if cfg.stage == StageId::Joint && ex.tokens.is_empty() {
            return Err(TrainError::Data(alloc::format!(
                "{what} example {} has no tokens",
                ex.id
            )));
        }
    }
    Ok(())
}

/// Mean validation objective: MSE for stages 1 and 2, EOS cross-entropy for
/// stage 3 and token cross-entropy for the joint stage. No masking.
pub fn evaluate(
    cfg: &StageConfig,
    params: &AdapterParams,
    toy: Option<&ToyDecoderParams>,
    data: &[Example],
    lambda: f64,
) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for ex in data {
        let mut g = Graph::new();
        let pv = params.bind(&mut g, |_| false);
        let tv = toy.map(|t| t.bind(&mut g, false));
        let loss = example_loss(
            &mut g,
            &pv,
            tv.as_ref(),
            cfg,
            params,
            ex,
            lambda,
            None,
            true,
        )?;
        total += g.scalar(loss);
    }
    Ok(total / data.len() as f64)
}

fn diverged(step: u64, params: &AdapterParams, toy: &Option<ToyDecoderParams>) -> TrainError {
    TrainError::Diverged {
        step,
        last_good: Box::new(params.clone()),
        toy: toy.clone().map(Box::new),
    }
}

/// Runs one training stage and returns the best-validation checkpoint.
///
/// Minibatches come from a seeded reshuffle of `train` each epoch; per-example
/// gradients are summed in index order, so equal seeds give identical results.
pub fn run_stage(
    cfg: &StageConfig,
    mut params: AdapterParams,
    toy: Option<ToyDecoderParams>,
    train: &[Example],
    val: &[Example],
) -> Result<StageOutcome, TrainError> {
    cfg.validate()?;
    let needed = cfg.stage.level() - 1;
    if params.stage < needed {
        return Err(TrainError::StageOrder {
            stage: cfg.stage,
            completed: params.stage,
        });
    }
    check_examples(cfg, &params, train, "training")?;
    check_examples(cfg, &params, val, "validation")?;
    let mut toy = match (cfg.stage, toy) {
        (StageId::Joint, Some(t)) => {
            if t.config() != cfg.toy || t.d_txt() != params.config().d_txt {
                return Err(TrainError::Config(
                    "toy decoder shape differs from the config".into(),
                ));
            }
            Some(t)
        }
        (StageId::Joint, None) => Some(ToyDecoderParams::init(
            cfg.toy,
            params.config().d_txt,
            rng::next_seed(&mut rng::derive(cfg.seed, 3)),
        )?),
        (_, t) => t,
    };
    let train_toy = cfg.stage == StageId::Joint;

    let adapter_slots = ParamId::ALL.len();
    let mut sizes: Vec<usize> = params.iter().map(|(_, t)| t.len()).collect();
    if let Some(t) = &toy {
        sizes.extend(t.iter().map(|(_, t)| t.len()));
    }
    let mut adam = Adam::new(cfg.optimizer, &sizes);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = rng::derive(cfg.seed, 1);
    let mut mask_rng = rng::derive(cfg.seed, 2);
    rng::shuffle(&mut shuffle_rng, &mut order);
    let mut cursor = 0;

    let val_lambda = cfg.schedule.epsilon;
    let first_val = evaluate(cfg, &params, toy.as_ref(), val, val_lambda)?;
    if !first_val.is_finite() {
        return Err(diverged(0, &params, &toy));
    }
    let mut best = (0, first_val, params.clone(), toy.clone());
    let mut metrics = Vec::with_capacity(cfg.steps as usize + 1);
    metrics.push(MetricRow {
        step: 0,
        lambda: teacher_forcing_ratio(0, &cfg.schedule),
        loss: f64::NAN,
        val_loss: Some(first_val),
    });

    for step in 1..=cfg.steps {
        let lambda = teacher_forcing_ratio(step - 1, &cfg.schedule);
        let mut acc: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
        let mut batch_loss = 0.0;
        for _ in 0..cfg.batch_size {
            if cursor == order.len() {
                rng::shuffle(&mut shuffle_rng, &mut order);
                cursor = 0;
            }
            let ex = &train[order[cursor]];
            cursor += 1;
            let mask_seed = (cfg.stage == StageId::One).then(|| rng::next_seed(&mut mask_rng));

            let mut g = Graph::new();
            let pv = params.bind(&mut g, |id| cfg.is_trainable(id));
            let tv = toy.as_ref().map(|t| t.bind(&mut g, train_toy));
            let loss = match example_loss(
                &mut g,
                &pv,
                tv.as_ref(),
                cfg,
                &params,
                ex,
                lambda,
                mask_seed,
                false,
            ) {
                Ok(l) => l,
                Err(TrainError::Adapter(crate::adapter::AdapterError::NonFinite(_))) => {
                    return Err(diverged(step, &params, &toy))
                }
                Err(e) => return Err(e),
            };
            let value = g.scalar(loss);
            if !value.is_finite() {
                return Err(diverged(step, &params, &toy));
            }
            batch_loss += value;
            let grads = g.backward(loss)?;
            let mut vars: Vec<Var> = pv.iter().map(|(_, v)| v).collect();
            if let Some(tv) = &tv {
                vars.extend(tv.iter().map(|(_, v)| v));
            }
            for (slot, v) in vars.into_iter().enumerate() {
                if let Some(gr) = grads.get(v) {
                    for (a, x) in acc[slot].iter_mut().zip(gr) {
                        *a += x;
                    }
                }
            }
        }
        let scale = 1.0 / cfg.batch_size as f64;
        if acc.iter().flatten().any(|v| !v.is_finite()) {
            return Err(diverged(step, &params, &toy));
        }
        adam.begin_step();
        for (slot, id) in ParamId::ALL.into_iter().enumerate() {
            if cfg.is_trainable(id) {
                let grad: Vec<f64> = acc[slot].iter().map(|v| v * scale).collect();
                adam.update(slot, params.get_mut(id).data_mut(), &grad);
            }
        }
        if let (true, Some(t)) = (train_toy, toy.as_mut()) {
            for (k, id) in ToyId::ALL.into_iter().enumerate() {
                let slot = adapter_slots + k;
                let grad: Vec<f64> = acc[slot].iter().map(|v| v * scale).collect();
                adam.update(slot, t.get_mut(id).data_mut(), &grad);
            }
        }

        let val_loss = if step % cfg.eval_every == 0 || step == cfg.steps {
            let v = evaluate(cfg, &params, toy.as_ref(), val, val_lambda)?;
            if !v.is_finite() {
                return Err(diverged(step, &best.2, &best.3));
            }
            if v < best.1 {
                best = (step, v, params.clone(), toy.clone());
            }
            log::debug!(
                "{} step {step}: loss {:.6} val {v:.6}",
                cfg.stage.name(),
                batch_loss * scale
            );
            Some(v)
        } else {
            None
        };
        metrics.push(MetricRow {
            step,
            lambda,
            loss: batch_loss * scale,
            val_loss,
        });
    }

    let (best_step, best_val, mut best_params, best_toy) = best;
    best_params.stage = best_params.stage.max(cfg.stage.level());
    Ok(StageOutcome {
        params: best_params,
        toy: best_toy,
        metrics,
        best_step,
        best_val,
    })
}
