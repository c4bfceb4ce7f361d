//! Compares the graph attention against the scalar oracle on random instances.
//! Expects the including crate to declare `mod oracle`.

use crate::oracle;
use xmodal_core::adapter::{
    decoder_step, downsample, encode, eos_attention, input_frames, AdapterConfig, DecoderState,
};
use xmodal_core::numerics::{Graph, Tensor};
use xmodal_core::rng;

#[derive(Debug, Default, Clone, Copy)]
pub struct Deviation {
    pub cross: f64,
    pub intra: f64,
    pub eos: f64,
}

pub fn random_instances(count: usize, seed: u64) -> Deviation {
    let mut r = rng::seeded(seed);
    let mut dev = Deviation::default();
    for k in 0..count as u64 {
        let d_in = 2 + rng::below(&mut r, 4);
        let d_h = 2 + rng::below(&mut r, 4);
        let d_txt = 2 + rng::below(&mut r, 3);
        let len = 3 + rng::below(&mut r, 18);
        let steps = 1 + rng::below(&mut r, 6);
        let mut cfg = AdapterConfig::with_dims(d_in, d_h, d_txt);
        cfg.eos_window = 1 + rng::below(&mut r, 3);
        let base = seed.wrapping_mul(1000) + 10 * k;
        let p = oracle::random_params(&cfg, base, 0.7);
        let rows = oracle::random_rows(len, d_in, base + 1);
        let inputs = oracle::random_rows(steps, d_txt, base + 2);

        let mut g = Graph::new();
        let pv = p.bind(&mut g, |_| false);
        let frames = input_frames(&mut g, &Tensor::from_rows(&rows).unwrap());
        let short = downsample(&mut g, &pv, &cfg, &frames).unwrap();
        let enc = encode(&mut g, &pv, &cfg, &short).unwrap();
        let mut state = DecoderState::initial(&mut g, &enc);
        let mut ys = Vec::new();
        let mut states = Vec::new();
        for x in &inputs {
            let xv = g.constant(Tensor::vector(x.clone()));
            let (y, next) = decoder_step(&mut g, &pv, &cfg, xv, state, &enc).unwrap();
            ys.push(y);
            states.push(next.clone());
            state = next;
        }

        let oenc = oracle::encode(&p, &oracle::downsample(&p, &rows));
        let trace = oracle::decode(&p, &oenc, &inputs);
        for t in 0..steps {
            let alpha = g.data(states[t].cross_weights.unwrap());
            dev.cross = dev
                .cross
                .max(oracle::max_abs_diff(alpha, &trace.cross_weights[t]))
                .max(oracle::max_abs_diff(g.data(ys[t]), &trace.ys[t]));
            if let Some(w) = states[t].intra_weights {
                dev.intra = dev
                    .intra
                    .max(oracle::max_abs_diff(g.data(w), &trace.intra_weights[t]));
            } else {
                assert!(trace.intra_weights[t].is_empty());
            }
        }
        let ys_plain: Vec<Vec<f64>> = ys.iter().map(|&y| g.data(y).to_vec()).collect();
        for t in 1..=steps {
            let (ctx, _) = eos_attention(&mut g, &pv, &ys, t, cfg.eos_window).unwrap();
            let expect = oracle::eos_context(
                p.get(xmodal_core::adapter::ParamId::AttnEos),
                &ys_plain,
                t,
                cfg.eos_window,
            );
            dev.eos = dev.eos.max(oracle::max_abs_diff(g.data(ctx), &expect));
        }
    }
    dev
}
