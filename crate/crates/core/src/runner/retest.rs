use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::domain::Esi;
use crate::error::{Error, Result};
use crate::gateway::{CaseIndex, DecodeConfig, Gateway, ModelEndpoint, RetryPolicy};
use crate::hashing::derived_rng;
use crate::parsing::parse_esi;
use crate::stats::{clopper_pearson_ci, wilson_ci};
use crate::strategy::{build_messages, Message, Strategy};
use crate::vignette::{Variant, Vignette};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetestReport {
    pub endpoint_id: String,
    pub n: usize,
    pub seed: u64,
    /// Vignettes whose two evaluations both parsed.
    pub valid_pairs: u64,
    pub flips: u64,
    pub rate: Option<f64>,
    pub wilson_95: Option<(f64, f64)>,
    pub clopper_pearson_95: Option<(f64, f64)>,
}

impl RetestReport {
    pub fn summary(&self) -> String {
        let pct = |x: f64| format!("{:.2}%", 100.0 * x);
        let ci = |c: Option<(f64, f64)>| c.map_or("n/a".to_string(), |(l, h)| format!("[{}, {}]", pct(l), pct(h)));
        format!(
            "{}: {} of {} valid pairs differ (rate {}); Wilson 95% CI {}; Clopper-Pearson 95% CI {}",
            self.endpoint_id,
            self.flips,
            self.valid_pairs,
            self.rate.map_or("n/a".to_string(), |r| format!("{:.1}%", 100.0 * r)),
            ci(self.wilson_95),
            ci(self.clopper_pearson_95),
        )
    }
}

async fn pass(gateway: &Gateway, messages: &[Vec<Message>], concurrency: usize) -> Vec<Option<Esi>> {
    let mut out: Vec<(usize, Option<Esi>)> = stream::iter(messages.iter().enumerate())
        .map(|(i, m)| async move {
            let esi = gateway.complete(m).await.ok().and_then(|c| parse_esi(&c.text)).map(|p| p.esi);
            (i, esi)
        })
        .buffer_unordered(concurrency)
        .collect()
        .await;
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, e)| e).collect()
}

/// Evaluates `n` sampled vignettes twice under Baseline with identical
/// messages and counts disagreements among pairs where both answers parsed.
pub async fn test_retest(
    endpoint: &ModelEndpoint,
    corpus: &[Vignette],
    n: usize,
    seed: u64,
    retry: RetryPolicy,
    decode: DecodeConfig,
) -> Result<RetestReport> {
    let candidates: Vec<&Vignette> = corpus
        .iter()
        .filter(|v| matches!(v.variant, Variant::Original | Variant::Counterfactual))
        .collect();
    if n == 0 || n > candidates.len() {
        return Err(Error::Config(format!(
            "retest needs 1..={} vignettes, asked for {n}",
            candidates.len()
        )));
    }
    let mut picks = rand::seq::index::sample(&mut derived_rng(seed, 0), candidates.len(), n).into_vec();
    picks.sort_unstable();
    let messages = picks
        .iter()
        .map(|&i| build_messages(Strategy::Baseline, candidates[i]))
        .collect::<Result<Vec<_>>>()?;

    let cases = Arc::new(CaseIndex::from_vignettes(corpus));
    let gateway = Gateway::for_endpoint(endpoint, Some(cases), retry, decode)?;
    let first = pass(&gateway, &messages, endpoint.in_flight()).await;
    let second = pass(&gateway, &messages, endpoint.in_flight()).await;

    let (mut valid, mut flips) = (0u64, 0u64);
    for (a, b) in first.iter().zip(&second) {
        if let (Some(a), Some(b)) = (a, b) {
            valid += 1;
            flips += u64::from(a != b);
        }
    }
    let rate = (valid > 0).then(|| flips as f64 / valid as f64);
    Ok(RetestReport {
        endpoint_id: endpoint.id.clone(),
        n,
        seed,
        valid_pairs: valid,
        flips,
        rate,
        wilson_95: wilson_ci(flips, valid, 0.95).ok(),
        clopper_pearson_95: clopper_pearson_ci(flips, valid, 0.95).ok(),
    })
}
