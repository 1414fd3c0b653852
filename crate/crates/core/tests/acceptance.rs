//! Acceptance report: one PASS/FAIL line per criterion with its timing.
//! Run with `cargo test -p semgraph-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{fixture_names, load_fixture, load_golden, merged_tree_problems, oracle_similar, pruned_tree_problems, random_tree, random_words};
use semgraph_core::dp::{build_dp_graph, identify_node_types, merge_nodes, prune_tree, DpOptions, PruneRules};
use semgraph_core::encoders::{AttentionNormalization, EncoderConfig};
use semgraph_core::gradcheck::{check_ggnn_step, check_joint_loss, check_primitives};
use semgraph_core::graph::texts_similar;
use semgraph_core::numerics::{Binding, FdConfig, Tape};
use semgraph_core::par::Execution;
use semgraph_core::pipeline::{GraphFormat, PipelineOptions};
use semgraph_core::qgen::train::{build_vocabulary, edge_vocabulary, evaluate};
use semgraph_core::qgen::{corpus_bleu, generate, train, Example, Prepared, QgModel, TrainConfig, TrainOutcome};
use semgraph_core::srl::build_srl_graph;
use semgraph_core::synthetic::synthetic_documents;

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, name: &str, limit: Duration, f: impl FnOnce() -> Result<String, String>) {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} budget")),
            Err(d) => (false, d),
        };
        self.total += 1;
        self.passed += ok as usize;
        println!("{} {name} ({:.2}s): {detail}", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    }
}

fn ensure(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn similarity_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for i in 0..500 {
        let (a, b) = (random_words(&mut rng), random_words(&mut rng));
        if texts_similar(&a, &b) != oracle_similar(&a, &b) {
            return Err(format!("pair {i} disagrees: {a:?} vs {b:?}"));
        }
    }
    Ok("500 pairs agree".into())
}

fn builder_oracle() -> Result<String, String> {
    let names = fixture_names();
    for name in &names {
        let doc = load_fixture(name);
        let srl = build_srl_graph(&doc).graph.to_json();
        let dp = build_dp_graph(&doc, &DpOptions::default()).graph.to_json();
        if srl != load_golden(name, "srl").to_json() {
            return Err(format!("{name}: SRL graph differs from golden"));
        }
        if dp != load_golden(name, "dp").to_json() {
            return Err(format!("{name}: DP graph differs from golden"));
        }
    }
    Ok(format!("{} fixtures, SRL and DP byte-identical", names.len()))
}

fn tree_invariants() -> Result<String, String> {
    let rules = PruneRules::default();
    let mut merges = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1 + (seed as usize % 30);
        let (tokens, tree) = random_tree(&mut rng, n);
        let (typed, _) = identify_node_types(&tree, &tokens);
        let pruned = prune_tree(&typed, &rules);
        let mut problems = pruned_tree_problems(&tokens, &tree, &pruned, &rules.relations);
        let merged = merge_nodes(&pruned);
        problems.extend(merged_tree_problems(&pruned, &merged));
        if merge_nodes(&merged) != merged {
            problems.push("merge is not at a fixpoint".into());
        }
        if !problems.is_empty() {
            return Err(format!("tree {seed}: {problems:?}"));
        }
        merges += pruned.nodes.len() - merged.nodes.len();
    }
    Ok(format!("200 random trees, {merges} merges"))
}

fn gradient_suite() -> Result<String, String> {
    let fd = FdConfig::default();
    let mut worst_prim: f64 = 0.0;
    for seed in 0..3 {
        for (name, r) in check_primitives(seed, &fd).map_err(|e| e.to_string())? {
            if r.max_rel_err >= 1e-6 {
                return Err(format!("primitive {name} seed {seed}: rel err {:.2e}", r.max_rel_err));
            }
            worst_prim = worst_prim.max(r.max_rel_err);
        }
    }
    let step = check_ggnn_step(&EncoderConfig::default(), 0, &fd).map_err(|e| e.to_string())?;
    let joint = check_joint_loss(&TrainConfig::default(), &fd).map_err(|e| e.to_string())?;
    let abs = joint.coordinates.iter().map(|c| (c.analytic - c.numeric).abs()).fold(0.0, f64::max);
    let within = joint.coordinates.iter().filter(|c| c.rel_err < 1e-4).count();
    let detail = format!(
        "primitives {worst_prim:.1e}, ggnn step {:.1e}, joint loss {:.1e} ({within}/{} coordinates under 1e-4, max abs diff {abs:.1e}, worst {:?})",
        step.max_rel_err,
        joint.max_rel_err,
        joint.checked,
        joint.worst.as_ref().map(|c| (&c.param, c.index, c.analytic, c.numeric)),
    );
    ensure(step.max_rel_err < 1e-4 && joint.max_rel_err < 1e-4, detail)
}

fn normalization_suite() -> Result<String, String> {
    let docs = synthetic_documents(100, 21);
    let mut worst: f64 = 0.0;
    let mut distributions = 0usize;
    for (i, doc) in docs.iter().enumerate() {
        let format = if i % 2 == 0 { GraphFormat::Srl } else { GraphFormat::Dp };
        let opts = PipelineOptions { format, ..PipelineOptions::default() };
        let ex = Example::from_documents(std::slice::from_ref(doc), &opts, Execution::Sequential);
        let normalization = if i % 4 < 2 { AttentionNormalization::Union } else { AttentionNormalization::PerDirection };
        let cfg = TrainConfig { seed: i as u64, normalization, layers: 2, ..TrainConfig::default() };
        let model = QgModel::new(cfg.model_config(edge_vocabulary(&ex)), build_vocabulary(&ex, 1));
        let store = model.fresh_params(cfg.seed);
        let p = Prepared::new(&ex[0], &model.vocab);
        let tape = Tape::new();
        let b = Binding::new(&tape, &store);
        let enc = model.encode(&b, &p, &ex[0].graph, None).map_err(|e| e.to_string())?;
        let loss = model.example_loss(&b, &p, &ex[0].graph, &cfg.loss_weights(), None).map_err(|e| e.to_string())?;
        let mut sums: Vec<f64> = enc.init.betas.iter().map(|beta| beta.value().iter().sum()).collect();
        for layer in &loss.attention {
            sums.extend(layer.iter().filter(|r| !r.weights.is_empty()).map(|r| r.weights.iter().sum::<f64>()));
        }
        for step in &loss.steps {
            for d in [step.attn, step.vocab_dist, step.mixed] {
                sums.push(d.value().iter().sum());
            }
        }
        if let Some(s) = sums.iter().find(|s| !s.is_finite()) {
            return Err(format!("fixture {i}: non-finite sum {s}"));
        }
        distributions += sums.len();
        worst = sums.iter().map(|s| (s - 1.0).abs()).fold(worst, f64::max);
    }
    ensure(worst <= 1e-12, format!("{distributions} distributions over 100 fixtures, max |sum - 1| {worst:.1e}"))
}

fn smoke_config(seed: u64, content_selection: bool) -> TrainConfig {
    TrainConfig { seed, content_selection, batch_size: 8, ..TrainConfig::default() }
}

fn smoke_examples() -> Vec<Example> {
    Example::from_documents(&synthetic_documents(50, 0), &PipelineOptions::default(), Execution::default())
}

fn run(examples: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome, String> {
    train(examples, None, cfg, Execution::default(), &mut |_| {}).map_err(|e| e.to_string())
}

/// Final (dropout-free) training loss, content-selection accuracy,
/// majority baseline and attention ratio of a trained model.
fn assess(examples: &[Example], outcome: &TrainOutcome) -> Result<(f64, f64, f64, f64), String> {
    let (model, store) = outcome.checkpoint.restore().map_err(|e| e.to_string())?;
    let cfg = &outcome.checkpoint.train;
    let weights = TrainConfig { content_selection: true, ..cfg.clone() }.loss_weights();
    let e = evaluate(&model, &store, examples, &weights, cfg.attention_scope, Execution::default()).map_err(|e| e.to_string())?;
    Ok((e.loss, e.cs_accuracy, e.cs_majority, e.attention.ratio))
}

fn learning_smoke(examples: &[Example], joint: &mut Option<TrainOutcome>) -> Result<String, String> {
    let outcome = run(examples, &smoke_config(0, true))?;
    let initial = outcome.metrics[0].train_loss;
    let (last, acc, majority, _) = assess(examples, &outcome)?;
    let detail = format!(
        "loss {initial:.3} -> {last:.3} ({:.2}x) over {} epochs, content selection {acc:.3} vs majority {majority:.3}",
        last / initial,
        outcome.metrics.len() - 1
    );
    *joint = Some(outcome);
    ensure(last < 0.5 * initial && acc > majority, detail)
}

fn memorize_and_recite() -> Result<String, String> {
    let ex = Example::from_documents(&synthetic_documents(5, 7), &PipelineOptions::default(), Execution::default());
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 5,
        max_epochs: 150,
        encoder_dropout: 0.0,
        attention_dropout: 0.0,
        decoder_dropout: 0.0,
        lr_patience: 1000,
        stop_patience: 1000,
        ..TrainConfig::default()
    };
    let outcome = run(&ex, &cfg)?;
    let (model, store) = outcome.checkpoint.restore().map_err(|e| e.to_string())?;
    let weights = cfg.loss_weights();
    let eval = evaluate(&model, &store, &ex, &weights, cfg.attention_scope, Execution::default()).map_err(|e| e.to_string())?;
    let mut pairs = Vec::new();
    let mut exact = 0;
    for e in &ex {
        let gold = e.question_tokens().expect("gold question");
        let hyp = generate(&model, &store, e, 30, 1).map_err(|e| e.to_string())?;
        exact += (hyp.tokens == gold) as usize;
        pairs.push((hyp.tokens, vec![gold]));
    }
    let bleu = corpus_bleu(&pairs, 4);
    ensure(
        exact == ex.len() && bleu == 100.0,
        format!("{exact}/{} recited exactly, BLEU-4 {bleu:.2}, NLL {:.4}", ex.len(), eval.nll),
    )
}

fn directional(examples: &[Example], mut joint0: Option<TrainOutcome>) -> Result<String, String> {
    let (mut joint, mut single) = (Vec::new(), Vec::new());
    for seed in 0..5 {
        let j = match joint0.take() {
            Some(o) if seed == 0 => o,
            _ => run(examples, &smoke_config(seed, true))?,
        };
        joint.push(assess(examples, &j)?.3);
        single.push(assess(examples, &run(examples, &smoke_config(seed, false))?)?.3);
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (j, s) = (mean(&joint), mean(&single));
    let show = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    ensure(j >= s, format!("joint ratio {j:.3} [{}] vs single-task {s:.3} [{}]", show(&joint), show(&single)))
}

fn sparsity() -> Result<String, String> {
    let (mut srl, mut dp) = ((0, 0), (0, 0));
    for name in fixture_names() {
        let doc = load_fixture(&name);
        let s = build_srl_graph(&doc).graph.stats();
        let d = build_dp_graph(&doc, &DpOptions::default()).graph.stats();
        srl = (srl.0 + s.token_count, srl.1 + s.node_count);
        dp = (dp.0 + d.token_count, dp.1 + d.node_count);
    }
    let mean = |(t, n): (usize, usize)| t as f64 / n as f64;
    let (d, s) = (mean(dp), mean(srl));
    ensure(d < s, format!("tokens per node DP {d:.3} vs SRL {s:.3}"))
}

fn main() {
    // the libtest harness passes flags like --nocapture; nothing to parse
    let mut report = Report { passed: 0, total: 0 };
    let secs = Duration::from_secs;
    report.check("similarity-oracle", secs(1), similarity_oracle);
    report.check("builder-oracle", secs(1), builder_oracle);
    report.check("tree-invariants", secs(5), tree_invariants);
    report.check("gradient-suite", secs(60), gradient_suite);
    report.check("normalization", secs(5), normalization_suite);
    let examples = smoke_examples();
    let mut joint = None;
    report.check("learning-smoke", secs(600), || learning_smoke(&examples, &mut joint));
    report.check("memorize-and-recite", secs(300), memorize_and_recite);
    report.check("attention-direction", secs(1800), || directional(&examples, joint.take()));
    report.check("corpus-sparsity", secs(1), sparsity);
    println!("{} of {} criteria passed", report.passed, report.total);
}
