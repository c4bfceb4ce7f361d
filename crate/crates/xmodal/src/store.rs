//! Parameter directories: one CMTF1 file per tensor, `adapter.txt` with the
//! architecture, and `manifest.txt` listing name, shape and SHA-256 of every
//! tensor file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use xmodal_core::adapter::{AdapterConfig, AdapterParams, ParamId};
use xmodal_core::numerics::Tensor;
use xmodal_core::training::{NormStats, ToyConfig, ToyDecoderParams, ToyId};

use crate::cmtf;
use crate::error::{Failure, Result};

pub const MANIFEST: &str = "manifest.txt";
pub const ARCH: &str = "adapter.txt";

/// Everything a later stage or `infer` needs from an earlier run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: AdapterParams,
    pub feature_norm: NormStats,
    pub embed_norm: NormStats,
    pub toy: Option<ToyDecoderParams>,
}

fn norm_tensors(prefix: &str, s: &NormStats) -> [(String, Tensor); 2] {
    [
        (
            format!("norm.{prefix}.mean"),
            Tensor::vector(s.mean.clone()),
        ),
        (format!("norm.{prefix}.std"), Tensor::vector(s.std.clone())),
    ]
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn shape_string(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

impl Checkpoint {
    fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out: Vec<(String, Tensor)> = self
            .params
            .iter()
            .map(|(id, t)| (id.name().to_string(), t.clone()))
            .collect();
        out.extend(norm_tensors("features", &self.feature_norm));
        out.extend(norm_tensors("embeddings", &self.embed_norm));
        if let Some(toy) = &self.toy {
            out.extend(toy.iter().map(|(id, t)| (id.name().to_string(), t.clone())));
        }
        out
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let cfg = self.params.config();
        let mut arch = String::new();
        let _ = writeln!(arch, "d_in={}", cfg.d_in);
        let _ = writeln!(arch, "d_h={}", cfg.d_h);
        let _ = writeln!(arch, "d_txt={}", cfg.d_txt);
        let _ = writeln!(arch, "conv_kernel={}", cfg.conv_kernel);
        let _ = writeln!(arch, "conv_stride={}", cfg.conv_stride);
        let _ = writeln!(arch, "eos_window={}", cfg.eos_window);
        let _ = writeln!(arch, "t_max={}", cfg.t_max);
        let _ = writeln!(arch, "pi={}", cfg.pi);
        let _ = writeln!(arch, "stage={}", self.params.stage);
        if let Some(toy) = &self.toy {
            let _ = writeln!(arch, "toy_vocab={}", toy.config().vocab);
            let _ = writeln!(arch, "toy_hidden={}", toy.config().hidden);
        }
        fs::write(dir.join(ARCH), arch)?;

        let mut manifest = String::new();
        for (name, t) in self.named_tensors() {
            let bytes = cmtf::encode(&t)?;
            let _ = writeln!(
                manifest,
                "{name}\t{}\t{}",
                shape_string(t.shape()),
                sha256_hex(&bytes)
            );
            fs::write(dir.join(format!("{name}.cmtf")), bytes)?;
        }
        fs::write(dir.join(MANIFEST), manifest)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let ctx = |e: Failure| e.context(dir.display());
        let arch = read_kv(&dir.join(ARCH)).map_err(ctx)?;
        let get = |k: &str| -> Result<&str> {
            arch.get(k)
                .map(String::as_str)
                .ok_or_else(|| Failure::data(format!("{ARCH} lacks `{k}`")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Failure::data(format!("{ARCH}: bad value for `{k}`")))
        };
        let cfg = AdapterConfig {
            d_in: num("d_in")?,
            d_h: num("d_h")?,
            d_txt: num("d_txt")?,
            conv_kernel: num("conv_kernel")?,
            conv_stride: num("conv_stride")?,
            eos_window: num("eos_window")?,
            t_max: num("t_max")?,
            pi: get("pi")?
                .parse()
                .map_err(|_| Failure::data(format!("{ARCH}: bad value for `pi`")))?,
        };

        let text = fs::read_to_string(dir.join(MANIFEST))
            .map_err(|e| ctx(Failure::from(e).context(MANIFEST)))?;
        let mut tensors = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            let [name, shape, sum] = fields[..] else {
                return Err(ctx(Failure::data(format!(
                    "{MANIFEST} line {}: expected 3 fields",
                    n + 1
                ))));
            };
            let bytes = fs::read(dir.join(format!("{name}.cmtf")))
                .map_err(|e| ctx(Failure::from(e).context(name)))?;
            if sha256_hex(&bytes) != sum {
                return Err(ctx(Failure::data(format!("checksum mismatch for {name}"))));
            }
            let t = cmtf::decode(&bytes).map_err(|e| ctx(e.context(name)))?;
            if shape_string(t.shape()) != shape {
                return Err(ctx(Failure::data(format!("shape mismatch for {name}"))));
            }
            tensors.insert(name.to_string(), t);
        }

        let mut params =
            AdapterParams::from_tensors(&cfg, |id: ParamId| tensors.get(id.name()).cloned())
                .map_err(|e| ctx(e.into()))?;
        params.stage = num("stage")? as u8;
        let norm = |prefix: &str| -> Result<NormStats> {
            let part = |what: &str| {
                tensors
                    .get(&format!("norm.{prefix}.{what}"))
                    .map(|t| t.data().to_vec())
                    .ok_or_else(|| Failure::data(format!("missing norm.{prefix}.{what}")))
            };
            Ok(NormStats {
                mean: part("mean")?,
                std: part("std")?,
            })
        };
        let toy = if arch.contains_key("toy_vocab") {
            let toy_cfg = ToyConfig {
                vocab: num("toy_vocab")?,
                hidden: num("toy_hidden")?,
            };
            Some(
                ToyDecoderParams::from_tensors(toy_cfg, cfg.d_txt, |id: ToyId| {
                    tensors.get(id.name()).cloned()
                })
                .map_err(|e| ctx(e.into()))?,
            )
        } else {
            None
        };
        Ok(Checkpoint {
            params,
            feature_norm: norm("features").map_err(ctx)?,
            embed_norm: norm("embeddings").map_err(ctx)?,
            toy,
        })
    }
}

/// Flat `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_kv(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::from(e).context(path.display()))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Failure::data(format!("{}:{}: expected key=value", path.display(), n + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
