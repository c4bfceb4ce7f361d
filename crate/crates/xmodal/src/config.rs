//! Strict INI-style run configuration.
//!
//! ```text
//! [run]
//! seed = 7
//! [paths]
//! train = data/train.jsonl
//! [stage]
//! steps = 2000
//! ```
//!
//! Every key must be known for its section and parse as its type. Values
//! that are not given fall back to the defaults of the command using them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use xmodal_core::adapter::{AdapterConfig, ParamId};
use xmodal_core::corpus::{SynthConfig, SynthRule};
use xmodal_core::training::{StageConfig, StageId};

use crate::error::{Failure, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Ty {
    Int,
    Float,
    Text,
    Stage,
    Params,
    Rule,
}

const SCHEMA: &[(&str, &[(&str, Ty)])] = &[
    ("run", &[("seed", Ty::Int), ("log", Ty::Text)]),
    (
        "paths",
        &[
            ("train", Ty::Text),
            ("val", Ty::Text),
            ("params_in", Ty::Text),
            ("out", Ty::Text),
        ],
    ),
    (
        "adapter",
        &[
            ("d_in", Ty::Int),
            ("d_h", Ty::Int),
            ("d_txt", Ty::Int),
            ("conv_kernel", Ty::Int),
            ("conv_stride", Ty::Int),
            ("eos_window", Ty::Int),
            ("t_max", Ty::Int),
            ("pi", Ty::Float),
            ("init_seed", Ty::Int),
        ],
    ),
    (
        "stage",
        &[
            ("id", Ty::Stage),
            ("steps", Ty::Int),
            ("batch_size", Ty::Int),
            ("eval_every", Ty::Int),
            ("lr", Ty::Float),
            ("beta1", Ty::Float),
            ("beta2", Ty::Float),
            ("adam_eps", Ty::Float),
            ("p_mask", Ty::Float),
            ("m_len", Ty::Int),
            ("epsilon", Ty::Float),
            ("k", Ty::Float),
            ("c", Ty::Float),
            ("frozen", Ty::Params),
            ("pos_weight", Ty::Float),
            ("toy_vocab", Ty::Int),
            ("toy_hidden", Ty::Int),
        ],
    ),
    (
        "synth",
        &[
            ("d_in", Ty::Int),
            ("d_txt", Ty::Int),
            ("len_min", Ty::Int),
            ("len_max", Ty::Int),
            ("rule", Ty::Rule),
            ("n_train", Ty::Int),
            ("n_val", Ty::Int),
            ("smoothness", Ty::Float),
            ("seed", Ty::Int),
        ],
    ),
];

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    Text(String),
    Stage(StageId),
    Params(Vec<ParamId>),
    Rule(SynthRule),
}

impl Value {
    fn parse(ty: Ty, raw: &str) -> std::result::Result<Value, String> {
        match ty {
            Ty::Int => raw
                .parse()
                .map(Value::Int)
                .map_err(|_| format!("expected a non-negative integer, got `{raw}`")),
            Ty::Float => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Value::Float(v)),
                _ => Err(format!("expected a number, got `{raw}`")),
            },
            Ty::Text if raw.is_empty() => Err("expected a value".into()),
            Ty::Text => Ok(Value::Text(raw.to_string())),
            Ty::Stage => StageId::parse(raw)
                .map(Value::Stage)
                .ok_or_else(|| format!("unknown stage `{raw}` (expected 1, 2, 3 or joint)")),
            Ty::Params => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| ParamId::from_name(s).ok_or_else(|| format!("unknown parameter `{s}`")))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Value::Params),
            Ty::Rule => SynthRule::parse(raw)
                .map(Value::Rule)
                .ok_or_else(|| format!("unknown synthetic rule `{raw}`")),
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format!("{v:?}"),
            Value::Text(s) => s.clone(),
            Value::Stage(s) => s.name().to_string(),
            Value::Params(ps) => ps.iter().map(|p| p.name()).collect::<Vec<_>>().join(","),
            Value::Rule(r) => r.name().to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    sections: BTreeMap<String, BTreeMap<String, Value>>,
    /// Directory of the config file; relative paths are resolved against it.
    base: PathBuf,
}

fn schema(section: &str) -> Option<&'static [(&'static str, Ty)]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Failure::config(format!("line {line_no}: {m}"));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if schema(name).is_none() {
                    return Err(err(format!("unknown section [{name}]")));
                }
                if cfg.sections.contains_key(name) {
                    return Err(err(format!("section [{name}] appears twice")));
                }
                cfg.sections.insert(name.to_string(), BTreeMap::new());
                section = Some(name.to_string());
                continue;
            }
            let Some(sec) = section.as_deref() else {
                return Err(err("key outside of any section".into()));
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let ty = schema(sec)
                .and_then(|keys| keys.iter().find(|(k, _)| *k == key))
                .map(|(_, t)| *t)
                .ok_or_else(|| err(format!("unknown key `{key}` in [{sec}]")))?;
            let value = Value::parse(ty, value).map_err(|m| err(format!("key `{key}`: {m}")))?;
            let entries = cfg.sections.get_mut(sec).expect("section inserted");
            if entries.insert(key.to_string(), value).is_some() {
                return Err(err(format!("key `{key}` given twice in [{sec}]")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| e.context(path.display()))?;
        cfg.base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Ok(cfg)
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (section, keys) in SCHEMA {
            let Some(entries) = self.sections.get(*section) else {
                continue;
            };
            let _ = writeln!(out, "[{section}]");
            for (key, _) in *keys {
                if let Some(v) = entries.get(*key) {
                    let _ = writeln!(out, "{key} = {}", v.render());
                }
            }
        }
        out
    }

    pub fn with_base(mut self, base: &Path) -> Self {
        self.base = base.to_path_buf();
        self
    }

    fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.sections.get(section)?.get(key)
    }

    fn int(&self, section: &str, key: &str) -> Option<u64> {
        match self.get(section, key) {
            Some(Value::Int(v)) => Some(*v),
            _ => None,
        }
    }

    fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.int(section, key) {
            Some(v) => usize::try_from(v)
                .map_err(|_| Failure::config(format!("[{section}] {key} is too large"))),
            None => Ok(default),
        }
    }

    fn float(&self, section: &str, key: &str, default: f64) -> f64 {
        match self.get(section, key) {
            Some(Value::Float(v)) => *v,
            _ => default,
        }
    }

    pub fn seed(&self) -> u64 {
        self.int("run", "seed").unwrap_or(0)
    }

    pub fn log_level(&self) -> Option<&str> {
        match self.get("run", "log") {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn stage_id(&self) -> Option<StageId> {
        match self.get("stage", "id") {
            Some(Value::Stage(s)) => Some(*s),
            _ => None,
        }
    }

    /// An optional path from [paths], resolved against the config directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        match self.get("paths", key) {
            Some(Value::Text(p)) => Some(self.base.join(p)),
            _ => None,
        }
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| Failure::config(format!("missing required key `{key}` in [paths]")))
    }

    /// Input paths that must already exist.
    pub fn check_inputs(&self) -> Result<()> {
        for key in ["train", "val", "params_in"] {
            if let Some(p) = self.path(key) {
                if !p.exists() {
                    return Err(Failure::config(format!(
                        "[paths] {key}: {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_adapter_dims(&self) -> bool {
        ["d_in", "d_h", "d_txt"]
            .iter()
            .any(|k| self.get("adapter", k).is_some())
    }

    /// Adapter settings; `d_in`, `d_h` and `d_txt` are required, the rest
    /// default to window 1, `t_max` 512 and threshold 0.5.
    pub fn adapter(&self) -> Result<AdapterConfig> {
        let dim = |k: &str| {
            self.usize("adapter", k, 0).and_then(|v| match v {
                0 if self.int("adapter", k).is_none() => Err(Failure::config(format!(
                    "missing required key `{k}` in [adapter]"
                ))),
                v => Ok(v),
            })
        };
        let mut cfg = AdapterConfig::with_dims(dim("d_in")?, dim("d_h")?, dim("d_txt")?);
        self.apply_inference(&mut cfg)?;
        Ok(cfg)
    }

    /// Overrides the inference-time keys (`eos_window`, `t_max`, `pi`) that
    /// are present, leaving the rest of `cfg` alone.
    pub fn apply_inference(&self, cfg: &mut AdapterConfig) -> Result<()> {
        cfg.conv_kernel = self.usize("adapter", "conv_kernel", cfg.conv_kernel)?;
        cfg.conv_stride = self.usize("adapter", "conv_stride", cfg.conv_stride)?;
        cfg.eos_window = self.usize("adapter", "eos_window", cfg.eos_window)?;
        cfg.t_max = self.usize("adapter", "t_max", cfg.t_max)?;
        cfg.pi = self.float("adapter", "pi", cfg.pi);
        cfg.validate().map_err(|e| Failure::config(e.to_string()))
    }

    pub fn init_seed(&self) -> u64 {
        self.int("adapter", "init_seed")
            .unwrap_or_else(|| self.seed())
    }

    /// Stage defaults for `id` with every [stage] key applied on top.
    pub fn stage(&self, id: StageId) -> Result<StageConfig> {
        if let Some(given) = self.stage_id() {
            if given != id {
                return Err(Failure::config(format!(
                    "[stage] id is {} but the command trains {}",
                    given.name(),
                    id.name()
                )));
            }
        }
        let mut c = StageConfig::for_stage(id);
        let s = "stage";
        c.steps = self.int(s, "steps").unwrap_or(c.steps);
        c.batch_size = self.usize(s, "batch_size", c.batch_size)?;
        c.eval_every = self.int(s, "eval_every").unwrap_or(c.eval_every);
        c.optimizer.lr = self.float(s, "lr", c.optimizer.lr);
        c.optimizer.beta1 = self.float(s, "beta1", c.optimizer.beta1);
        c.optimizer.beta2 = self.float(s, "beta2", c.optimizer.beta2);
        c.optimizer.eps = self.float(s, "adam_eps", c.optimizer.eps);
        c.mask.p_mask = self.float(s, "p_mask", c.mask.p_mask);
        c.mask.m_len = self.usize(s, "m_len", c.mask.m_len)?;
        c.schedule.epsilon = self.float(s, "epsilon", c.schedule.epsilon);
        c.schedule.k = self.float(s, "k", c.schedule.k);
        c.schedule.c = self.float(s, "c", c.schedule.c);
        if let Some(Value::Params(ps)) = self.get(s, "frozen") {
            c.frozen = ps.clone();
        }
        if let Some(Value::Float(w)) = self.get(s, "pos_weight") {
            c.pos_weight = Some(*w);
        }
        c.toy.vocab = self.usize(s, "toy_vocab", c.toy.vocab)?;
        c.toy.hidden = self.usize(s, "toy_hidden", c.toy.hidden)?;
        c.seed = self.seed();
        c.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(c)
    }

    pub fn synth(&self) -> Result<SynthConfig> {
        let d = SynthConfig::default();
        let s = "synth";
        let cfg = SynthConfig {
            d_in: self.usize(s, "d_in", d.d_in)?,
            d_txt: self.usize(s, "d_txt", d.d_txt)?,
            len_min: self.usize(s, "len_min", d.len_min)?,
            len_max: self.usize(s, "len_max", d.len_max)?,
            rule: match self.get(s, "rule") {
                Some(Value::Rule(r)) => *r,
                _ => d.rule,
            },
            n_train: self.usize(s, "n_train", d.n_train)?,
            n_val: self.usize(s, "n_val", d.n_val)?,
            smoothness: self.float(s, "smoothness", d.smoothness),
            seed: self.int(s, "seed").unwrap_or_else(|| self.seed()),
        };
        cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(cfg)
    }
}
