use serde::{Deserialize, Serialize};

use crate::encoders::{received_attention, AttentionRecord};

/// Which graph layers contribute to a node's received attention.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionScope {
    #[default]
    FinalLayer,
    MeanOverLayers,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionStats {
    /// Mean relevant / irrelevant received-attention ratio over graphs with a finite ratio;
    /// `+inf` when every graph puts all its mass on relevant nodes.
    pub ratio: f64,
    pub entropy: f64,
    /// Graphs that contributed a score at all.
    pub graphs: usize,
}

/// Per-node attention score, summing to 1 (all zeros when nothing attends).
pub fn node_scores(layers: &[Vec<AttentionRecord>], nodes: usize, scope: AttentionScope) -> Vec<f64> {
    match scope {
        AttentionScope::FinalLayer => layers.last().map(|r| received_attention(r, nodes)).unwrap_or_else(|| vec![0.0; nodes]),
        AttentionScope::MeanOverLayers => {
            let mut mean = vec![0.0; nodes];
            if layers.is_empty() {
                return mean;
            }
            for r in layers {
                for (m, a) in mean.iter_mut().zip(received_attention(r, nodes)) {
                    *m += a / layers.len() as f64;
                }
            }
            mean
        }
    }
}

pub fn entropy(alpha: &[f64]) -> f64 {
    -alpha.iter().filter(|&&a| a > 0.0).map(|a| a * a.ln()).sum::<f64>()
}

/// Relevant mass over irrelevant mass, `+inf` when the irrelevant mass is zero.
pub fn relevance_ratio(alpha: &[f64], relevant: &[bool]) -> f64 {
    let (mut rn, mut other) = (0.0, 0.0);
    for (a, &r) in alpha.iter().zip(relevant) {
        if r {
            rn += a;
        } else {
            other += a;
        }
    }
    if other > 0.0 {
        rn / other
    } else {
        f64::INFINITY
    }
}

pub fn attention_stats(examples: &[(Vec<Vec<AttentionRecord>>, Vec<bool>)], scope: AttentionScope) -> AttentionStats {
    let (mut ratio_sum, mut finite, mut infinite) = (0.0, 0usize, 0usize);
    let (mut entropy_sum, mut graphs) = (0.0, 0usize);
    for (layers, flags) in examples {
        let alpha = node_scores(layers, flags.len(), scope);
        if alpha.iter().all(|&a| a == 0.0) {
            continue;
        }
        graphs += 1;
        entropy_sum += entropy(&alpha);
        let r = relevance_ratio(&alpha, flags);
        if r.is_finite() {
            ratio_sum += r;
            finite += 1;
        } else {
            infinite += 1;
        }
    }
    let ratio = match (finite, infinite) {
        (0, 0) => 0.0,
        (0, _) => f64::INFINITY,
        (n, _) => ratio_sum / n as f64,
    };
    AttentionStats { ratio, entropy: if graphs == 0 { 0.0 } else { entropy_sum / graphs as f64 }, graphs }
}
