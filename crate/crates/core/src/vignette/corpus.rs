use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    age_preserving_blind, gender_only_swap, make_counterfactual, name_only_swap, original_from_row,
    validate, NamePools, Variant, Vignette, Violation,
};
use crate::cohort::Sample;
use crate::error::{Error, Result};
use crate::hashing::{derived_rng, StableHasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub seed: u64,
    /// Also emit gender-only, name-only and age-preserving-blind variants.
    pub ablations: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { seed: 42, ablations: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub seed: u64,
    pub sampled: usize,
    pub originals: usize,
    pub pairs: usize,
    pub ablation_vignettes: usize,
    pub duplicate_originals: usize,
    /// Pair ids whose complaint is sex-linked; these have no counterfactual.
    pub sex_linked_unpaired: Vec<String>,
    pub render_failures: Vec<(String, String)>,
    pub validation_failures: Vec<(String, Vec<Violation>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub vignettes: Vec<Vignette>,
    pub manifest: BuildManifest,
}

enum Built {
    Ok(Vec<Vignette>, bool),
    RenderFailed(String, String),
    Invalid(String, Vec<Violation>),
}

fn pair_id(index: usize) -> String {
    format!("p{index:06}")
}

fn build_one(sample: &Sample, index: usize, pools: &NamePools, opts: BuildOptions) -> Built {
    let sampled = &sample.rows[index];
    let pid = pair_id(index);
    let stream_seed = StableHasher::new("vignette").u64(opts.seed).finish();
    let mut rng = derived_rng(stream_seed, index as u64);

    let original = match original_from_row(sampled, &pid, pools, &mut rng) {
        Ok(v) => v,
        Err(e) => return Built::RenderFailed(sampled.row.stay_id.clone(), e.to_string()),
    };
    if let Err(v) = validate(&original.text) {
        return Built::Invalid(original.vignette_id, v);
    }
    let mut out = vec![original.clone()];
    let cf = match make_counterfactual(&original, pools, &mut rng) {
        Ok(cf) => cf,
        Err(Error::SexLinked(_)) => return Built::Ok(out, true),
        Err(e) => return Built::RenderFailed(sampled.row.stay_id.clone(), e.to_string()),
    };
    if let Err(v) = validate(&cf.text) {
        return Built::Invalid(cf.vignette_id, v);
    }
    out.push(cf);
    if opts.ablations {
        let variants = [
            gender_only_swap(&original),
            name_only_swap(&original, pools, &mut rng),
            age_preserving_blind(&original),
        ];
        for v in variants {
            match v {
                Ok(v) => out.push(v),
                Err(e) => return Built::RenderFailed(sampled.row.stay_id.clone(), e.to_string()),
            }
        }
    }
    Built::Ok(out, false)
}

/// Renders every sampled visit into an original vignette plus its
/// counterfactual (and ablation variants when requested). Each visit uses its
/// own random stream, so the result does not depend on thread count.
pub fn build_corpus(sample: &Sample, pools: &NamePools, opts: BuildOptions) -> Corpus {
    let built: Vec<Built> = (0..sample.rows.len())
        .into_par_iter()
        .map(|i| build_one(sample, i, pools, opts))
        .collect();

    let mut manifest = BuildManifest {
        seed: opts.seed,
        sampled: sample.rows.len(),
        ..BuildManifest::default()
    };
    let mut vignettes = Vec::new();
    for b in built {
        match b {
            Built::Ok(vs, sex_linked) => {
                for v in &vs {
                    match v.variant {
                        Variant::Original => {
                            manifest.originals += 1;
                            if v.duplicate {
                                manifest.duplicate_originals += 1;
                            }
                        }
                        Variant::Counterfactual => manifest.pairs += 1,
                        _ => manifest.ablation_vignettes += 1,
                    }
                }
                if sex_linked {
                    manifest.sex_linked_unpaired.push(vs[0].pair_id.clone());
                }
                vignettes.extend(vs);
            }
            Built::RenderFailed(id, why) => {
                log::warn!("skipping stay {id}: {why}");
                manifest.render_failures.push((id, why));
            }
            Built::Invalid(id, v) => {
                log::warn!("vignette {id} failed validation: {v:?}");
                manifest.validation_failures.push((id, v));
            }
        }
    }
    Corpus { vignettes, manifest }
}

pub fn write_corpus_jsonl(path: &Path, vignettes: &[Vignette]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in vignettes {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses corpus JSONL. Blank lines are skipped; any malformed line is an error
/// that names its line number.
pub fn decode_corpus_jsonl(text: &str) -> Result<Vec<Vignette>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse(format!("corpus line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_corpus_jsonl(path: &Path) -> Result<Vec<Vignette>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("corpus line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}
