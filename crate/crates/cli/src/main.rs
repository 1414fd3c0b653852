use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use semgraph_core::annotations::{parse_annotations, validate, AnnotatedDocument};
use semgraph_core::dp::{DpOptions, PruneRules};
use semgraph_core::encoders::EncoderConfig;
use semgraph_core::gradcheck::{check_ggnn_step, check_joint_loss, check_primitives};
use semgraph_core::graph::SemanticGraph;
use semgraph_core::numerics::FdConfig;
use semgraph_core::par::Execution;
use semgraph_core::pipeline::{build_corpus, GraphFormat, PipelineOptions};
use semgraph_core::qgen::train::evaluate;
use semgraph_core::qgen::{corpus_bleu, generate, train, AttentionScope, Checkpoint, Example, TrainConfig};
use semgraph_core::text::tokenize_keep_punct;

const GRADIENT_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "semgraph", version, about = "Semantic graphs and graph-encoded question generation")]
struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, env = "SEMGRAPH_SEED")]
    seed: Option<u64>,
    /// Run everything on the calling thread
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a semantic graph from an annotation file (or every file in a directory)
    BuildGraph(BuildGraph),
    /// Summary statistics of graph files
    Stats {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
    },
    /// Train a question generator
    Train(Train),
    /// BLEU of generated questions against the gold questions
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1)]
        beam: usize,
        #[arg(long, default_value_t = 30)]
        max_len: usize,
        /// Write one JSON line per document with the generated question
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Attention ratio and entropy of the graph encoder
    Analyze {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_scope)]
        scope: Option<AttentionScope>,
    },
    /// Finite-difference gradient checks
    Gradcheck {
        #[arg(long, value_parser = ["numerics", "encoders", "qgen", "all"], default_value = "all")]
        module: String,
    },
}

#[derive(Args)]
struct BuildGraph {
    #[arg(long, value_parser = parse_format)]
    format: GraphFormat,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write Graphviz output
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Comma-separated dependency relations to prune (default: punct,det)
    #[arg(long)]
    prune_rels: Option<String>,
    /// Substitute pronoun mentions with their cluster's representative first
    #[arg(long)]
    resolve_coref: bool,
}

#[derive(Args)]
struct Train {
    #[arg(long)]
    data: PathBuf,
    /// Validation documents for early stopping (default: the training set)
    #[arg(long)]
    val: Option<PathBuf>,
    /// JSON file with training settings
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<GraphFormat>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    lambda_cov: Option<f64>,
    #[arg(long)]
    lambda_cs: Option<f64>,
    #[arg(long)]
    content_selection: Option<bool>,
}

fn parse_format(s: &str) -> Result<GraphFormat, String> {
    s.parse()
}

fn parse_scope(s: &str) -> Result<AttentionScope, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown scope {s:?} (expected final_layer or mean_over_layers)"))
}

/// A failed command; everything here exits with status 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let seed = cli.seed;
    let result = match cli.command {
        Command::BuildGraph(args) => build_graph(args, exec),
        Command::Stats { inputs } => stats(&inputs),
        Command::Train(args) => train_cmd(args, seed, exec),
        Command::Eval { ckpt, data, beam, max_len, predictions } => eval(&ckpt, &data, beam, max_len, predictions.as_deref(), exec),
        Command::Analyze { ckpt, data, scope } => analyze(&ckpt, &data, scope, exec),
        Command::Gradcheck { module } => gradcheck(&module, seed.unwrap_or(0), exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_document(path: &Path) -> Result<AnnotatedDocument, Failure> {
    let raw = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let doc = parse_annotations(&raw).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let violations = validate(&doc);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(Failure(format!("{}: invalid annotations\n{}", path.display(), list.join("\n"))));
    }
    Ok(doc)
}

/// `*.json` files of a directory in name order, or the path itself.
fn document_paths(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut paths = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Failure(format!("{}: {e}", path.display())))? {
        let p = entry?.path();
        if p.extension().is_some_and(|x| x == "json") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Failure(format!("{}: no .json documents", path.display())));
    }
    Ok(paths)
}

fn load_documents(path: &Path, exec: Execution) -> Result<(Vec<PathBuf>, Vec<AnnotatedDocument>), Failure> {
    let paths = document_paths(path)?;
    let docs = exec.map(&paths, |p| load_document(p)).into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok((paths, docs))
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn build_graph(args: BuildGraph, exec: Execution) -> Outcome {
    let prune = match &args.prune_rels {
        Some(list) => PruneRules::with_relations(list.split(',').map(str::trim).filter(|r| !r.is_empty())),
        None => PruneRules::default(),
    };
    let opts = PipelineOptions {
        format: args.format,
        dp: DpOptions { prune, ..DpOptions::default() },
        resolve_coref: args.resolve_coref,
        ..PipelineOptions::default()
    };
    let (paths, docs) = load_documents(&args.input, exec)?;
    let built = build_corpus(&docs, &opts, exec);
    let many = args.input.is_dir();
    if many {
        fs::create_dir_all(&args.out)?;
        if let Some(d) = &args.dot {
            fs::create_dir_all(d)?;
        }
    }
    for (path, b) in paths.iter().zip(&built) {
        for w in &b.warnings {
            eprintln!("warning: {}: {w}", path.display());
        }
        let name = path.file_name().expect("file path");
        let out = if many { args.out.join(name) } else { args.out.clone() };
        write_file(&out, &b.graph.to_json())?;
        if let Some(d) = &args.dot {
            let dot = if many { d.join(name).with_extension("dot") } else { d.clone() };
            write_file(&dot, &b.graph.to_dot())?;
        }
    }
    Ok(())
}

fn stats(inputs: &[PathBuf]) -> Outcome {
    let mut out = String::new();
    out.push_str(&format!("{:<32} {:>6} {:>6} {:>10} {:>12}\n", "graph", "nodes", "edges", "components", "tokens/node"));
    let (mut nodes, mut edges, mut components, mut tokens) = (0, 0, 0, 0);
    let mut by_type = std::collections::BTreeMap::new();
    for path in inputs {
        let raw = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        let g = SemanticGraph::from_json(&raw).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        let s = g.stats();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.push_str(&format!(
            "{:<32} {:>6} {:>6} {:>10} {:>12.3}\n",
            name,
            s.node_count,
            s.edge_count,
            s.connected_components,
            s.mean_tokens_per_node()
        ));
        nodes += s.node_count;
        edges += s.edge_count;
        components += s.connected_components;
        tokens += s.token_count;
        for (label, n) in s.edge_count_by_type {
            *by_type.entry(label).or_insert(0) += n;
        }
    }
    let mean = if nodes == 0 { 0.0 } else { tokens as f64 / nodes as f64 };
    out.push_str(&format!("{:<32} {:>6} {:>6} {:>10} {:>12.3}\n", "total", nodes, edges, components, mean));
    out.push_str("\nedges by type\n");
    for (label, n) in by_type {
        out.push_str(&format!("  {label:<28} {n:>6}\n"));
    }
    print!("{out}");
    Ok(())
}

fn examples_for(path: &Path, format: GraphFormat, exec: Execution) -> Result<(Vec<PathBuf>, Vec<Example>), Failure> {
    let (paths, docs) = load_documents(path, exec)?;
    let opts = PipelineOptions { format, ..PipelineOptions::default() };
    Ok((paths, Example::from_documents(&docs, &opts, exec)))
}

fn train_cmd(args: Train, seed: Option<u64>, exec: Execution) -> Outcome {
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => {
            let raw = fs::read(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            serde_json::from_slice(&raw).map_err(|e| Failure(format!("{}: {e}", p.display())))?
        }
        None => TrainConfig::default(),
    };
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.graph_format = args.format.unwrap_or(cfg.graph_format);
    cfg.learning_rate = args.learning_rate.unwrap_or(cfg.learning_rate);
    cfg.batch_size = args.batch_size.unwrap_or(cfg.batch_size);
    cfg.max_epochs = args.max_epochs.unwrap_or(cfg.max_epochs);
    cfg.lambda_cov = args.lambda_cov.unwrap_or(cfg.lambda_cov);
    cfg.lambda_cs = args.lambda_cs.unwrap_or(cfg.lambda_cs);
    cfg.content_selection = args.content_selection.unwrap_or(cfg.content_selection);

    let (_, examples) = examples_for(&args.data, cfg.graph_format, exec)?;
    let validation = match &args.val {
        Some(v) => Some(examples_for(v, cfg.graph_format, exec)?.1),
        None => None,
    };
    let mut stdout = std::io::stdout().lock();
    let mut log = |m: &semgraph_core::qgen::EpochMetrics| {
        let _ = writeln!(stdout, "{}", serde_json::to_string(m).expect("metrics serialize"));
    };
    let outcome = train(&examples, validation.as_deref(), &cfg, exec, &mut log)?;
    outcome.checkpoint.save(&args.out)?;
    Ok(())
}

fn eval(ckpt: &Path, data: &Path, beam: usize, max_len: usize, predictions: Option<&Path>, exec: Execution) -> Outcome {
    let checkpoint = Checkpoint::load(ckpt)?;
    let (model, store) = checkpoint.restore()?;
    let (paths, examples) = examples_for(data, checkpoint.train.graph_format, exec)?;
    let generated = exec.map(&examples, |ex| generate(&model, &store, ex, max_len, beam));
    let mut pairs = Vec::new();
    let mut lines = String::new();
    for ((path, ex), hyp) in paths.iter().zip(&examples).zip(generated) {
        let hyp = hyp?;
        let gold = ex
            .document
            .gold_question
            .as_deref()
            .ok_or_else(|| Failure(format!("{}: no gold question", path.display())))?;
        lines.push_str(&serde_json::to_string(&json!({
            "document": path.file_name().map(|n| n.to_string_lossy()),
            "generated": hyp.tokens.join(" "),
            "gold": gold,
        }))?);
        lines.push('\n');
        pairs.push((hyp.tokens, vec![tokenize_keep_punct(gold)]));
    }
    if let Some(p) = predictions {
        write_file(p, lines.as_bytes())?;
    }
    let bleu: Vec<f64> = (1..=4).map(|n| corpus_bleu(&pairs, n)).collect();
    let report = json!({
        "examples": pairs.len(),
        "bleu1": bleu[0],
        "bleu2": bleu[1],
        "bleu3": bleu[2],
        "bleu4": bleu[3],
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn analyze(ckpt: &Path, data: &Path, scope: Option<AttentionScope>, exec: Execution) -> Outcome {
    let checkpoint = Checkpoint::load(ckpt)?;
    let (model, store) = checkpoint.restore()?;
    let (_, examples) = examples_for(data, checkpoint.train.graph_format, exec)?;
    let weights = checkpoint.train.loss_weights();
    let scope = scope.unwrap_or(checkpoint.train.attention_scope);
    let e = evaluate(&model, &store, &examples, &weights, scope, exec)?;
    let mut report = json!({
        "examples": examples.len(),
        "graphs": e.attention.graphs,
        "ratio": e.attention.ratio,
        "entropy": e.attention.entropy,
    });
    if weights.content_selection {
        report["cs_accuracy"] = json!(e.cs_accuracy);
        report["cs_majority"] = json!(e.cs_majority);
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn gradcheck(module: &str, seed: u64, exec: Execution) -> Outcome {
    let fd = FdConfig { seed, execution: exec, ..FdConfig::default() };
    let mut results = Vec::new();
    if matches!(module, "numerics" | "all") {
        let worst = check_primitives(seed, &fd)?.into_values().map(|r| r.max_rel_err).fold(0.0, f64::max);
        results.push(("numerics", worst));
    }
    if matches!(module, "encoders" | "all") {
        results.push(("encoders", check_ggnn_step(&EncoderConfig::default(), seed, &fd)?.max_rel_err));
    }
    if matches!(module, "qgen" | "all") {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        results.push(("qgen", check_joint_loss(&cfg, &fd)?.max_rel_err));
    }
    for (name, err) in &results {
        println!("{name:<10} max rel err {err:.3e}  {}", if *err < GRADIENT_TOLERANCE { "ok" } else { "FAILED" });
    }
    match results.iter().find(|(_, e)| *e >= GRADIENT_TOLERANCE) {
        Some((name, _)) => Err(Failure(format!("{name} gradients exceed relative error {GRADIENT_TOLERANCE:e}"))),
        None => Ok(()),
    }
}
