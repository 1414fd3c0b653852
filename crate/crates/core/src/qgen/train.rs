use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::analysis::{attention_stats, AttentionScope, AttentionStats};
use super::checkpoint::Checkpoint;
use super::data::{Example, Prepared};
use super::model::{LossWeights, ModelConfig, QgModel};
use super::vocab::Vocabulary;
use super::QgError;
use crate::encoders::{AttentionNormalization, EncoderConfig};
use crate::numerics::{named_rng, Adam, Binding, Dropout, GradMap, ParamStore, Tape};
use crate::par::Execution;
use crate::pipeline::GraphFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub lambda_cov: f64,
    pub lambda_cs: f64,
    /// Train the content-selection head jointly; `false` is the single-task model.
    pub content_selection: bool,
    pub encoder_dropout: f64,
    pub attention_dropout: f64,
    pub decoder_dropout: f64,
    pub layers: usize,
    pub word_dim: usize,
    pub enc_hidden: usize,
    pub att_dim: usize,
    pub dec_hidden: usize,
    pub normalization: AttentionNormalization,
    pub coverage_feature: bool,
    pub min_freq: usize,
    /// Epochs without validation improvement before the learning rate is halved.
    pub lr_patience: usize,
    /// Epochs without validation improvement before training stops.
    pub stop_patience: usize,
    pub attention_scope: AttentionScope,
    /// Builder used to turn documents into graphs.
    pub graph_format: GraphFormat,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            max_epochs: 30,
            seed: 0,
            lambda_cov: 1.0,
            lambda_cs: 0.5,
            content_selection: true,
            encoder_dropout: 0.3,
            attention_dropout: 0.1,
            decoder_dropout: 0.3,
            layers: 3,
            word_dim: 32,
            enc_hidden: 16,
            att_dim: 16,
            dec_hidden: 32,
            normalization: AttentionNormalization::Union,
            coverage_feature: true,
            min_freq: 1,
            lr_patience: 2,
            stop_patience: 5,
            attention_scope: AttentionScope::FinalLayer,
            graph_format: GraphFormat::Srl,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), QgError> {
        let positive = [
            ("learning_rate", self.learning_rate > 0.0),
            ("batch_size", self.batch_size > 0),
            ("word_dim", self.word_dim > 0),
            ("enc_hidden", self.enc_hidden > 0),
            ("att_dim", self.att_dim > 0),
            ("dec_hidden", self.dec_hidden > 0),
            ("min_freq", self.min_freq > 0),
            ("lambda_cov", self.lambda_cov >= 0.0),
            ("lambda_cs", self.lambda_cs >= 0.0),
        ];
        let rates = [self.encoder_dropout, self.attention_dropout, self.decoder_dropout];
        if let Some((name, _)) = positive.iter().find(|(_, ok)| !ok) {
            return Err(QgError::Config(format!("{name} must be positive")));
        }
        if rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(QgError::Config("dropout rates must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, edge_vocabulary: Vec<String>) -> ModelConfig {
        ModelConfig {
            encoder: EncoderConfig {
                word_dim: self.word_dim,
                enc_hidden: self.enc_hidden,
                att_dim: self.att_dim,
                layers: self.layers,
                normalization: self.normalization,
                edge_vocabulary,
                encoder_dropout: self.encoder_dropout,
                attention_dropout: self.attention_dropout,
            },
            dec_hidden: self.dec_hidden,
            coverage_feature: self.coverage_feature,
            decoder_dropout: self.decoder_dropout,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights { coverage: self.lambda_cov, content: self.lambda_cs, content_selection: self.content_selection }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub cs_accuracy: f64,
    pub ratio: f64,
    pub entropy: f64,
}

/// Loss and diagnostics of a model on a dataset, without dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Mean per-token negative log-likelihood of the gold questions.
    pub nll: f64,
    pub coverage: f64,
    pub cs_accuracy: f64,
    /// Accuracy of always predicting the more frequent label.
    pub cs_majority: f64,
    pub attention: AttentionStats,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub metrics: Vec<EpochMetrics>,
}

/// Sorted union of the edge labels of every graph.
pub fn edge_vocabulary(examples: &[Example]) -> Vec<String> {
    let mut labels: Vec<String> = examples.iter().flat_map(|e| e.graph.edges.iter().map(|x| x.label.clone())).collect();
    labels.sort();
    labels.dedup();
    labels
}

pub fn build_vocabulary(examples: &[Example], min_freq: usize) -> Vocabulary {
    let tokens: Vec<String> = examples.iter().flat_map(Example::all_tokens).collect();
    Vocabulary::build(tokens.iter().map(String::as_str), min_freq)
}

/// Loss and parameter gradients of one example.
pub fn example_gradients(
    model: &QgModel,
    store: &ParamStore,
    ex: &Example,
    prepared: &Prepared,
    weights: &LossWeights,
    dropout: Option<&Dropout>,
) -> Result<(f64, GradMap), QgError> {
    let tape = Tape::new();
    let b = Binding::new(&tape, store);
    let out = model.example_loss(&b, prepared, &ex.graph, weights, dropout)?;
    let loss = out.total.item();
    let grads = tape.backward(out.total)?;
    Ok((loss, b.gradients(&grads)))
}

pub fn evaluate(
    model: &QgModel,
    store: &ParamStore,
    examples: &[Example],
    weights: &LossWeights,
    scope: AttentionScope,
    exec: Execution,
) -> Result<Evaluation, QgError> {
    let results = exec.map(examples, |ex| {
        let p = Prepared::new(ex, &model.vocab);
        let tape = Tape::new();
        let b = Binding::new(&tape, store);
        let out = model.example_loss(&b, &p, &ex.graph, weights, None)?;
        Ok::<_, QgError>((out.total.item(), out.nll, out.coverage, out.cs_probs, out.attention))
    });
    let (mut loss, mut nll, mut coverage) = (0.0, 0.0, 0.0);
    let (mut correct, mut positives, mut total) = (0usize, 0usize, 0usize);
    let mut per_example = Vec::with_capacity(examples.len());
    for (ex, r) in examples.iter().zip(results) {
        let (l, n, c, probs, attention) = r?;
        loss += l;
        nll += n;
        coverage += c;
        if let Ok(flags) = ex.relevant_flags() {
            positives += flags.iter().filter(|&&f| f).count();
            total += flags.len();
            correct += probs.iter().zip(&flags).filter(|(p, f)| (**p >= 0.5) == **f).count();
            per_example.push((attention, flags));
        }
    }
    let n = examples.len().max(1) as f64;
    let frac = |k: usize| if total == 0 { 0.0 } else { k as f64 / total as f64 };
    Ok(Evaluation {
        loss: loss / n,
        nll: nll / n,
        coverage: coverage / n,
        cs_accuracy: frac(correct),
        cs_majority: frac(positives).max(frac(total - positives)),
        attention: attention_stats(&per_example, scope),
    })
}

/// Mini-batch Adam training with learning-rate halving and early stopping
/// on the validation loss (the training loss when no validation set is
/// given). Per-example gradients of a batch are computed on `exec` and
/// summed in example order, so results do not depend on the execution mode.
pub fn train(
    examples: &[Example],
    validation: Option<&[Example]>,
    cfg: &TrainConfig,
    exec: Execution,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome, QgError> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(QgError::EmptyDataset);
    }
    let mut all = examples.to_vec();
    all.extend(validation.unwrap_or_default().iter().cloned());
    let vocab = build_vocabulary(examples, cfg.min_freq);
    let model = QgModel::new(cfg.model_config(edge_vocabulary(&all)), vocab);
    let mut store = model.fresh_params(cfg.seed);
    let weights = cfg.loss_weights();
    let prepared: Vec<Prepared> = examples.iter().map(|e| Prepared::new(e, &model.vocab)).collect();
    for (ex, p) in examples.iter().zip(&prepared) {
        if p.target.is_none() {
            return Err(QgError::MissingQuestion);
        }
        if weights.content_selection {
            ex.relevant_flags()?;
        }
    }
    let val_set = validation.unwrap_or(examples);

    let mut metrics = Vec::new();
    let initial = evaluate(&model, &store, val_set, &weights, cfg.attention_scope, exec)?;
    let train_initial = if validation.is_some() {
        evaluate(&model, &store, examples, &weights, cfg.attention_scope, exec)?.loss
    } else {
        initial.loss
    };
    let m0 = epoch_metrics(0, train_initial, &initial);
    on_epoch(&m0);
    metrics.push(m0);

    let mut opt = Adam::new(cfg.learning_rate);
    let mut best = (initial.loss, store.clone());
    let (mut since_halving, mut since_best) = (0, 0);
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut named_rng(cfg.seed, &format!("shuffle/{epoch}")));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results = exec.map(batch, |&i| {
                let dropout = Dropout::new(cfg.seed, &format!("dropout/{epoch}/{i}"));
                example_gradients(&model, &store, &examples[i], &prepared[i], &weights, Some(&dropout))
            });
            let mut grads = GradMap::default();
            for r in results {
                let (loss, g) = r?;
                if !loss.is_finite() || !g.is_finite() {
                    return Err(QgError::Divergence { epoch, detail: format!("loss {loss}") });
                }
                epoch_loss += loss;
                grads.accumulate(&g);
            }
            grads.scale(1.0 / batch.len() as f64);
            opt.step(&mut store, &grads);
        }

        let eval = evaluate(&model, &store, val_set, &weights, cfg.attention_scope, exec)?;
        if !eval.loss.is_finite() {
            return Err(QgError::Divergence { epoch, detail: format!("validation loss {}", eval.loss) });
        }
        let m = epoch_metrics(epoch, epoch_loss / examples.len() as f64, &eval);
        on_epoch(&m);
        metrics.push(m);

        if eval.loss < best.0 {
            best = (eval.loss, store.clone());
            since_best = 0;
            since_halving = 0;
        } else {
            since_best += 1;
            since_halving += 1;
            if since_halving >= cfg.lr_patience {
                opt.lr /= 2.0;
                since_halving = 0;
            }
            if since_best >= cfg.stop_patience {
                break;
            }
        }
    }

    Ok(TrainOutcome { checkpoint: Checkpoint::new(&model, &best.1, cfg), metrics })
}

fn epoch_metrics(epoch: usize, train_loss: f64, eval: &Evaluation) -> EpochMetrics {
    EpochMetrics {
        epoch,
        train_loss,
        val_loss: eval.loss,
        cs_accuracy: eval.cs_accuracy,
        ratio: eval.attention.ratio,
        entropy: eval.attention.entropy,
    }
}
