use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use xmodal_core::adapter::AdapterParams;
use xmodal_core::analysis::{pwcca, RepMatrix};
use xmodal_core::corpus::{filter_by_wer, split, synth_generate, SplitSpec, Teacher};
use xmodal_core::inference::{generate, GenerationResult};
use xmodal_core::numerics::Tensor;
use xmodal_core::texteval::{
    extractive_summary, mean_with_ci, normalize_text, wer, ExtractiveConfig, RougeReport,
    RougeScore, SentenceEmbedder, TermFrequencyEmbedder,
};
use xmodal_core::training::{run_stage, Example, MetricRow, NormStats, StageId, TrainError};

use crate::cmtf;
use crate::config::RunConfig;
use crate::error::{Context, Failure, Result};
use crate::manifest::{load_examples, read_hypotheses, read_manifest, write_manifest};
use crate::store::{sha256_hex, Checkpoint};

pub const METADATA: &str = "run.json";
pub const METRICS: &str = "metrics.tsv";

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    config_sha256: Option<String>,
    seed: u64,
    version: &'a str,
    core_version: &'a str,
    created_unix: u64,
}

/// Records what produced the files in `dir`. The timestamp is the only
/// field that differs between identical runs.
pub fn write_metadata(dir: &Path, command: &str, config: Option<&Path>, seed: u64) -> Result<()> {
    let config_sha256 = match config {
        Some(p) => Some(sha256_hex(&fs::read(p)?)),
        None => None,
    };
    let meta = Metadata {
        command,
        config_sha256,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        core_version: xmodal_core::VERSION,
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(dir.join(METADATA), text)?;
    Ok(())
}

pub fn prep_filter(manifest: &Path, hyp: &Path, threshold: f64, out: &Path) -> Result<()> {
    if !(threshold >= 0.0) {
        return Err(Failure::config("threshold must be >= 0"));
    }
    let records = read_manifest(manifest)?;
    let hyps = read_hypotheses(hyp)?;
    let report = filter_by_wer(&records, &hyps, threshold)?;
    write_manifest(out, &report.kept)?;
    let mut tsv = String::from("id\twer\tkept\n");
    for (id, w) in &report.wer {
        let _ = writeln!(tsv, "{id}\t{w:.6}\t{}", u8::from(*w <= threshold));
    }
    fs::write(out.with_extension("wer.tsv"), tsv)?;
    log::info!(
        "kept {} of {} records at WER <= {threshold}",
        report.kept.len(),
        records.len()
    );
    Ok(())
}

pub fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::config(format!("ratios `{s}` are not numbers")))?;
    <[f64; 3]>::try_from(parts)
        .map_err(|_| Failure::config("ratios need exactly three values: train,dev,test"))
}

pub fn prep_split(manifest: &Path, ratios: [f64; 3], seed: u64, out_dir: &Path) -> Result<()> {
    let records = read_manifest(manifest)?;
    let splits = split(&records, &SplitSpec { ratios, seed })?;
    for (name, part) in [
        ("train", &splits.train),
        ("dev", &splits.dev),
        ("test", &splits.test),
    ] {
        write_manifest(&out_dir.join(format!("{name}.jsonl")), part)?;
        log::info!("{name}: {} records", part.len());
    }
    Ok(())
}

fn write_examples(dir: &Path, split: &str, examples: &[Example]) -> Result<()> {
    let records: Vec<_> = examples
        .iter()
        .map(|ex| {
            let feature_path = format!("features/{}.cmtf", ex.id);
            let embedding_path = format!("embeddings/{}.cmtf", ex.id);
            cmtf::write(&dir.join(&feature_path), &ex.features)?;
            cmtf::write(&dir.join(&embedding_path), &ex.targets)?;
            let tokens: Vec<String> = Teacher::tokens(&ex.targets)
                .iter()
                .map(|t| t.to_string())
                .collect();
            Ok(xmodal_core::corpus::ManifestRecord {
                id: ex.id.clone(),
                summary: tokens.join(" "),
                feature_path: Some(feature_path),
                embedding_path: Some(embedding_path),
                ..Default::default()
            })
        })
        .collect::<Result<_>>()?;
    write_manifest(&dir.join(format!("{split}.jsonl")), &records)
}

pub fn synth_gen(config: &Path, out: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    apply_log_level(&cfg)?;
    let synth = cfg.synth()?;
    let ds = synth_generate(&synth)?;
    write_examples(out, "train", &ds.train)?;
    write_examples(out, "val", &ds.val)?;
    cmtf::write(&out.join("teacher/map.cmtf"), &ds.teacher.map)?;
    cmtf::write(
        &out.join("teacher/end_marker.cmtf"),
        &Tensor::vector(ds.teacher.end_marker.clone()),
    )?;
    write_metadata(out, "synth gen", Some(config), synth.seed)?;
    log::info!(
        "wrote {} train and {} validation examples to {}",
        ds.train.len(),
        ds.val.len(),
        out.display()
    );
    Ok(())
}

fn normalise(examples: &[Example], ck: &Checkpoint) -> Result<Vec<Example>> {
    examples
        .iter()
        .map(|ex| {
            Ok(Example {
                features: ck.feature_norm.apply(&ex.features).context(&ex.id)?,
                targets: ck.embed_norm.apply(&ex.targets).context(&ex.id)?,
                ..ex.clone()
            })
        })
        .collect()
}

pub fn metrics_tsv(rows: &[MetricRow]) -> String {
    let mut out = String::from("step\tlambda\tloss\tval_loss\n");
    let num = |v: f64| {
        if v.is_finite() {
            v.to_string()
        } else {
            String::new()
        }
    };
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.step,
            r.lambda,
            num(r.loss),
            r.val_loss.map(num).unwrap_or_default()
        );
    }
    out
}

/// Starting point for a stage: the checkpoint in `params_in`, or, for
/// stage 1 only, fresh parameters and statistics from the training set.
fn starting_checkpoint(cfg: &RunConfig, id: StageId, train: &[Example]) -> Result<Checkpoint> {
    match cfg.path("params_in") {
        Some(dir) => {
            let mut ck = Checkpoint::load(&dir)?;
            if cfg.has_adapter_dims() {
                let want = cfg.adapter()?;
                let have = ck.params.config();
                if (want.d_in, want.d_h, want.d_txt) != (have.d_in, have.d_h, have.d_txt) {
                    return Err(Failure::config(
                        "[adapter] dimensions differ from the stored parameters",
                    ));
                }
            }
            let mut inference = ck.params.config().clone();
            cfg.apply_inference(&mut inference)?;
            ck.params
                .set_inference_config(&inference)
                .map_err(|e| Failure::config(e.to_string()))?;
            Ok(ck)
        }
        None if id == StageId::One => {
            let acfg = cfg.adapter()?;
            let params = AdapterParams::init(&acfg, cfg.init_seed())?;
            Ok(Checkpoint {
                params,
                feature_norm: NormStats::compute(train.iter().map(|e| &e.features))?,
                embed_norm: NormStats::compute(train.iter().map(|e| &e.targets))?,
                toy: None,
            })
        }
        None => Err(Failure::config(format!(
            "{} needs `params_in` in [paths]",
            id.name()
        ))),
    }
}

/// Applies `[run] log` unless the environment already chose a level.
fn apply_log_level(cfg: &RunConfig) -> Result<()> {
    if let (Some(level), Err(_)) = (cfg.log_level(), std::env::var(crate::LOG_ENV)) {
        let level: log::LevelFilter = level
            .parse()
            .map_err(|_| Failure::config(format!("[run] log: unknown level `{level}`")))?;
        log::set_max_level(level);
    }
    Ok(())
}

pub fn train(id: StageId, config: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    apply_log_level(&cfg)?;
    cfg.check_inputs()?;
    let stage = cfg.stage(id)?;
    let out = cfg.require_path("out")?;
    let joint = id == StageId::Joint;
    let train_raw = load_examples(&cfg.require_path("train")?, joint)?;
    let val_raw = load_examples(&cfg.require_path("val")?, joint)?;
    let start = starting_checkpoint(&cfg, id, &train_raw)?;
    let train = normalise(&train_raw, &start)?;
    let val = normalise(&val_raw, &start)?;
    log::info!(
        "{}: {} steps on {} examples ({} validation)",
        id.name(),
        stage.steps,
        train.len(),
        val.len()
    );

    let toy = if joint { start.toy.clone() } else { None };
    let outcome = match run_stage(&stage, start.params.clone(), toy, &train, &val) {
        Ok(o) => o,
        Err(TrainError::Diverged {
            step,
            last_good,
            toy,
        }) => {
            let rescue = out.join("last_good");
            Checkpoint {
                params: *last_good,
                toy: toy.map(|t| *t).or(start.toy),
                ..start
            }
            .save(&rescue)?;
            return Err(Failure::numeric(format!(
                "training diverged at step {step}; last good parameters saved to {}",
                rescue.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let toy = outcome.toy.or(start.toy.clone());
    let ck = Checkpoint {
        params: outcome.params,
        toy,
        ..start
    };
    ck.save(&out)?;
    fs::write(out.join(METRICS), metrics_tsv(&outcome.metrics))?;
    write_metadata(
        &out,
        &format!("train {}", id.name()),
        Some(config),
        cfg.seed(),
    )?;
    log::info!(
        "best validation {:.6} at step {}; saved to {}",
        outcome.best_val,
        outcome.best_step,
        out.display()
    );
    Ok(())
}

pub fn sidecar(result: &GenerationResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "t_pi\t{}", result.cut_index);
    let _ = writeln!(s, "truncation_miss\t{}", result.truncation_miss);
    for (t, p) in result.eos_probs.iter().enumerate() {
        let _ = writeln!(s, "{}\t{p}", t + 1);
    }
    s
}

fn load_for_inference(params: &Path, pi: Option<f64>, t_max: Option<usize>) -> Result<Checkpoint> {
    let mut ck = Checkpoint::load(params)?;
    let mut cfg = ck.params.config().clone();
    if let Some(pi) = pi {
        cfg.pi = pi;
    }
    if let Some(t) = t_max {
        cfg.t_max = t;
    }
    ck.params
        .set_inference_config(&cfg)
        .map_err(|e| Failure::config(e.to_string()))?;
    Ok(ck)
}

fn infer_one(ck: &Checkpoint, features: &Tensor) -> Result<GenerationResult> {
    let x = ck.feature_norm.apply(features)?;
    Ok(generate(&x, &ck.params, Some(&ck.embed_norm))?)
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("eos.tsv")
}

pub fn infer(
    features: &Path,
    params: &Path,
    pi: Option<f64>,
    t_max: Option<usize>,
    out: &Path,
) -> Result<()> {
    let ck = load_for_inference(params, pi, t_max)?;
    let result = infer_one(&ck, &cmtf::read_matrix(features)?)?;
    cmtf::write(out, &result.reduced)?;
    fs::write(sidecar_path(out), sidecar(&result))?;
    if result.truncation_miss {
        log::warn!(
            "no EOS probability exceeded the threshold; kept all {} steps",
            result.cut_index
        );
    }
    println!("{}", result.cut_index);
    Ok(())
}

/// Runs inference over every record of a manifest. Writes one CMTF file and
/// sidecar per record, `lengths.tsv`, and `generated.cmtf`/`reference.cmtf`
/// holding the generated and reference rows up to the shorter length.
pub fn infer_manifest(
    manifest: &Path,
    params: &Path,
    pi: Option<f64>,
    t_max: Option<usize>,
    out_dir: &Path,
) -> Result<()> {
    let ck = load_for_inference(params, pi, t_max)?;
    let examples = load_examples(manifest, false)?;
    let mut lengths = String::from("id\tt_pi\treference_len\ttruncation_miss\n");
    let (mut generated, mut reference) = (Vec::new(), Vec::new());
    let mut within_one = 0;
    for ex in &examples {
        let r = infer_one(&ck, &ex.features).context(&ex.id)?;
        cmtf::write(&out_dir.join(format!("{}.cmtf", ex.id)), &r.reduced)?;
        fs::write(out_dir.join(format!("{}.eos.tsv", ex.id)), sidecar(&r))?;
        let t = ex.targets.rows();
        let _ = writeln!(
            lengths,
            "{}\t{}\t{t}\t{}",
            ex.id, r.cut_index, r.truncation_miss
        );
        if r.cut_index.abs_diff(t) <= 1 {
            within_one += 1;
        }
        for i in 0..r.cut_index.min(t) {
            generated.push(r.reduced.row(i).to_vec());
            reference.push(ex.targets.row(i).to_vec());
        }
    }
    fs::write(out_dir.join("lengths.tsv"), lengths)?;
    if !generated.is_empty() {
        let to_tensor =
            |rows: &[Vec<f64>]| Tensor::from_rows(rows).map_err(|e| Failure::data(e.to_string()));
        cmtf::write(&out_dir.join("generated.cmtf"), &to_tensor(&generated)?)?;
        cmtf::write(&out_dir.join("reference.cmtf"), &to_tensor(&reference)?)?;
    }
    write_metadata(out_dir, "infer", None, 0)?;
    println!(
        "{within_one}/{} cut within one step of the reference length",
        examples.len()
    );
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Failure::from(e).context(path.display()))
}

/// Line-aligned documents; a trailing empty line is ignored.
fn read_documents(reference: &Path, hypothesis: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let lines = |p: &Path| -> Result<Vec<String>> {
        Ok(read_text(p)?.lines().map(str::to_string).collect())
    };
    let (r, h) = (lines(reference)?, lines(hypothesis)?);
    if r.len() != h.len() {
        return Err(Failure::data(format!(
            "{} has {} lines but {} has {}",
            reference.display(),
            r.len(),
            hypothesis.display(),
            h.len()
        )));
    }
    if r.is_empty() {
        return Err(Failure::data("no documents to score"));
    }
    Ok((r, h))
}

fn with_ci(values: &[f64]) -> String {
    let (mean, half) = mean_with_ci(values);
    format!("{mean:.6} ± {half:.6}")
}

pub fn eval_wer(reference: &Path, hypothesis: &Path, multi: bool) -> Result<String> {
    if !multi {
        let w = wer(
            &normalize_text(&read_text(reference)?),
            &normalize_text(&read_text(hypothesis)?),
        )?;
        return Ok(format!("{w:.6}"));
    }
    let (refs, hyps) = read_documents(reference, hypothesis)?;
    let scores = refs
        .iter()
        .zip(&hyps)
        .enumerate()
        .map(|(i, (r, h))| {
            wer(&normalize_text(r), &normalize_text(h)).context(format!("line {}", i + 1))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(with_ci(&scores))
}

const ROUGE_NAMES: [&str; 4] = ["rouge1", "rouge2", "rougeL", "rougeLsum"];

fn scores(r: &RougeReport) -> [RougeScore; 4] {
    [r.rouge1, r.rouge2, r.rouge_l, r.rouge_lsum]
}

pub fn eval_rouge(reference: &Path, hypothesis: &Path, multi: bool) -> Result<String> {
    let mut out = String::new();
    if !multi {
        let report = RougeReport::compute(&read_text(reference)?, &read_text(hypothesis)?);
        for (name, s) in ROUGE_NAMES.iter().zip(scores(&report)) {
            let _ = writeln!(
                out,
                "{name}\tP {:.6}\tR {:.6}\tF {:.6}",
                s.precision, s.recall, s.f1
            );
        }
        return Ok(out);
    }
    let (refs, hyps) = read_documents(reference, hypothesis)?;
    let reports: Vec<RougeReport> = refs
        .iter()
        .zip(&hyps)
        .map(|(r, h)| RougeReport::compute(r, h))
        .collect();
    for (k, name) in ROUGE_NAMES.iter().enumerate() {
        let f: Vec<f64> = reports.iter().map(|r| scores(r)[k].f1).collect();
        let _ = writeln!(out, "{name}\tF {}", with_ci(&f));
    }
    Ok(out)
}

pub fn eval_pwcca(x: &Path, y: &Path) -> Result<String> {
    let x = RepMatrix::from_tensor(&cmtf::read_matrix(x)?)?;
    let y = RepMatrix::from_tensor(&cmtf::read_matrix(y)?)?;
    Ok(format!("{:.6}", pwcca(&x, &y)?))
}

/// Splits on line breaks and on `.`, `!` or `?` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut current = String::new();
        let mut chars = line.chars().peekable();
        while let Some(c) = chars.next() {
            current.push(c);
            if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
                out.push(current.trim().to_string());
                current.clear();
            }
        }
        if !current.trim().is_empty() {
            out.push(current.trim().to_string());
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

pub fn summarize(text: &str, cfg: &ExtractiveConfig) -> Result<String> {
    let sentences = split_sentences(text);
    let embedder = TermFrequencyEmbedder;
    if cfg.provider != embedder.id() {
        return Err(Failure::config(format!(
            "unknown embedding provider `{}`",
            cfg.provider
        )));
    }
    let embeddings = embedder.embed(&sentences);
    Ok(extractive_summary(&sentences, &embeddings, cfg)?)
}

/// With `manifest`, summarises every article body and writes JSON lines of
/// `{"id", "summary"}`; otherwise summarises the one document in `input`.
pub fn baseline_extractive(
    input: &Path,
    manifest: bool,
    w_bar: usize,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = ExtractiveConfig {
        w_bar,
        ..Default::default()
    };
    let text = if manifest {
        #[derive(Serialize)]
        struct Line<'a> {
            id: &'a str,
            summary: String,
        }
        let mut text = String::new();
        for r in read_manifest(input)? {
            let summary = summarize(&r.article_body, &cfg).context(&r.id)?;
            text.push_str(&serde_json::to_string(&Line { id: &r.id, summary })?);
            text.push('\n');
        }
        text
    } else {
        let mut s = summarize(&read_text(input)?, &cfg)?;
        s.push('\n');
        s
    };
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
