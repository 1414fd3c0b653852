use super::data::{Example, Prepared};
use super::model::{DecoderState, QgModel};
use super::vocab::{BOS, EOS};
use super::QgError;
use crate::numerics::{Binding, ParamStore, Tape};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Extended ids, without the end symbol.
    pub ids: Vec<usize>,
    pub tokens: Vec<String>,
    pub log_prob: f64,
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// The `k` largest entries, ties to the lower index.
fn top_k(xs: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Greedy (`beam <= 1`) or beam-search decoding over the mixed
/// generate/copy distribution. Copied unknown words come back as the
/// source word itself.
pub fn generate(model: &QgModel, store: &ParamStore, ex: &Example, max_len: usize, beam: usize) -> Result<Hypothesis, QgError> {
    let p = Prepared::new(ex, &model.vocab);
    let mut hyp = Hypothesis { ids: Vec::new(), tokens: Vec::new(), log_prob: 0.0 };
    if max_len == 0 {
        return Ok(hyp);
    }
    let tape = Tape::new();
    let b = Binding::new(&tape, store);
    let enc = model.encode(&b, &p, &ex.graph, None)?;
    let src = model.source(&b, enc.fused, &p)?;
    let state = model.decoder_init(&b, &p.answer, p.source.len())?;

    if beam <= 1 {
        let (mut state, mut y_prev) = (state, BOS);
        for _ in 0..max_len {
            let (out, next) = model.decode_step(&b, &state, y_prev, &src, None)?;
            let dist = out.mixed.value();
            let y = argmax(&dist);
            hyp.log_prob += dist[y].ln();
            if y == EOS {
                break;
            }
            hyp.ids.push(y);
            state = next;
            y_prev = y;
        }
    } else {
        struct Beam<'t> {
            ids: Vec<usize>,
            log_prob: f64,
            state: DecoderState<'t>,
        }
        let mut live = vec![Beam { ids: Vec::new(), log_prob: 0.0, state }];
        let mut done: Vec<(Vec<usize>, f64)> = Vec::new();
        for _ in 0..max_len {
            let mut cands: Vec<(usize, usize, f64)> = Vec::new();
            let mut nexts = Vec::with_capacity(live.len());
            for (i, h) in live.iter().enumerate() {
                let y_prev = h.ids.last().copied().unwrap_or(BOS);
                let (out, next) = model.decode_step(&b, &h.state, y_prev, &src, None)?;
                let dist = out.mixed.value();
                for y in top_k(&dist, beam) {
                    cands.push((i, y, h.log_prob + dist[y].ln()));
                }
                nexts.push(next);
            }
            cands.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
            let mut next_live = Vec::with_capacity(beam);
            for (i, y, log_prob) in cands {
                if y == EOS {
                    done.push((live[i].ids.clone(), log_prob));
                    continue;
                }
                let mut ids = live[i].ids.clone();
                ids.push(y);
                next_live.push(Beam { ids, log_prob, state: nexts[i] });
                if next_live.len() == beam {
                    break;
                }
            }
            live = next_live;
            // scores only decrease, so no live hypothesis can overtake a better finished one
            let best_done = done.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
            if live.first().is_none_or(|h| h.log_prob <= best_done) {
                break;
            }
        }
        done.extend(live.into_iter().map(|h| (h.ids, h.log_prob)));
        let (ids, lp) = done.into_iter().fold((Vec::new(), f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        hyp.ids = ids;
        hyp.log_prob = lp;
    }
    hyp.tokens = hyp.ids.iter().map(|&id| p.word(&model.vocab, id)).collect();
    Ok(hyp)
}
