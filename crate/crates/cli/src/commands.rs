use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Subcommand};
use ndarray::Array2;
use rxn_hypergraph::autodiff::{ParamStore, Tape, Var};
use rxn_hypergraph::baseline::{reaction_fp, FingerprintConfig, FingerprintInputs, FingerprintObjective};
use rxn_hypergraph::chem::parse_reaction;
use rxn_hypergraph::data::synthetic::{
    functional_group_task, ranking_pairs, ranking_task, substituent_utilities, ClassifyOptions,
    RankingOptions,
};
use rxn_hypergraph::data::{balanced_subsample, split, Dataset, Splits};
use rxn_hypergraph::gnn::{GnnModel, ModelError, PreparedGraph, Target, Task};
use rxn_hypergraph::hypergraph::build_hypergraph;
use rxn_hypergraph::interpret::{explain, ExplainOptions, PathLayers};
use rxn_hypergraph::ranker::{
    ranked_pairs, top_k_accuracy, CandidateQuery, PairObjective, PairwiseRanker, RankingRecord,
    RANKING_FORMAT_VERSION,
};
use rxn_hypergraph::train::{argmax_rows, classification_metrics, fit, Control, GraphObjective, Objective, TrainOptions};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigOverrides, RunConfig, TaskKind};
use crate::io::{self, write_json_line};
use crate::model::{self, CheckpointMeta, Model};

/// Version of every JSON document the commands print or write.
pub const FORMAT_VERSION: u32 = 1;

pub const TOP_K: [usize; 4] = [1, 2, 5, 10];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_accuracy: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub format_version: u32,
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub train: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<Metrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<Metrics>,
}

/// Everything needed to reproduce and audit a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: RunConfig,
    pub seed: u64,
    pub classes: Option<usize>,
    pub data_sha256: String,
    pub checkpoint: String,
    /// What the split indices count: "records", "pairs" or "queries".
    pub units: String,
    pub splits: Splits,
    pub epochs: Vec<EpochLog>,
    pub final_metrics: FinalMetrics,
}

enum Examples {
    Graphs { graphs: Vec<PreparedGraph>, target: Target },
    Fingerprints { inputs: FingerprintInputs, labels: Vec<usize> },
    Pairs { graphs: Vec<PreparedGraph>, pairs: Vec<(usize, usize)> },
    Queries { graphs: Vec<PreparedGraph>, queries: Vec<(Vec<usize>, Option<usize>)> },
}

impl Examples {
    fn len(&self) -> usize {
        match self {
            Examples::Graphs { graphs, .. } => graphs.len(),
            Examples::Fingerprints { labels, .. } => labels.len(),
            Examples::Pairs { pairs, .. } => pairs.len(),
            Examples::Queries { queries, .. } => queries.len(),
        }
    }

    fn units(&self) -> &'static str {
        match self {
            Examples::Graphs { .. } | Examples::Fingerprints { .. } => "records",
            Examples::Pairs { .. } => "pairs",
            Examples::Queries { .. } => "queries",
        }
    }
}

/// Parses each distinct reaction once.
struct GraphPool<'m> {
    model: &'m GnnModel,
    index: HashMap<String, usize>,
    graphs: Vec<PreparedGraph>,
}

impl<'m> GraphPool<'m> {
    fn new(model: &'m GnnModel) -> Self {
        GraphPool {
            model,
            index: HashMap::new(),
            graphs: Vec::new(),
        }
    }

    fn add(&mut self, smirks: &str) -> Result<usize> {
        if let Some(&i) = self.index.get(smirks) {
            return Ok(i);
        }
        let rxn = parse_reaction(smirks).with_context(|| format!("reaction {smirks:?}"))?;
        self.graphs.push(self.model.prepare(&rxn)?);
        self.index.insert(smirks.to_string(), self.graphs.len() - 1);
        Ok(self.graphs.len() - 1)
    }
}

fn labels_of(data: &Dataset) -> Result<Vec<usize>> {
    data.records
        .iter()
        .enumerate()
        .map(|(i, r)| r.label.with_context(|| format!("record {} has no integer label", i + 1)))
        .collect()
}

fn infer_classes(cfg: &RunConfig, text: &str) -> Result<Option<usize>> {
    if cfg.task != TaskKind::Classify {
        return Ok(cfg.classes);
    }
    let labels = labels_of(&Dataset::from_tsv(text)?)?;
    let seen = labels.iter().max().map_or(0, |&m| m + 1);
    match cfg.classes {
        Some(c) if c < seen => bail!("labels go up to {} but classes = {c}", seen - 1),
        Some(c) => Ok(Some(c)),
        None => Ok(Some(seen.max(2))),
    }
}

fn examples(model: &Model, text: &str) -> Result<Examples> {
    match model {
        Model::Gnn(m) => {
            let data = Dataset::from_tsv(text)?;
            ensure!(!data.is_empty(), "dataset is empty");
            let graphs = data
                .records
                .iter()
                .map(|r| m.prepare(&r.reaction))
                .collect::<Result<Vec<_>, _>>()?;
            let target = match m.config.task {
                Task::Classify { .. } => Target::Classes(labels_of(&data)?),
                _ => {
                    let values = data.targets().context("regression needs a numeric target on every record")?;
                    Target::Values(Array2::from_shape_vec((values.len(), 1), values)?)
                }
            };
            Ok(Examples::Graphs { graphs, target })
        }
        Model::Fingerprint(m) => {
            let data = Dataset::from_tsv(text)?;
            ensure!(!data.is_empty(), "dataset is empty");
            let rxns: Vec<_> = data.records.iter().map(|r| &r.reaction).collect();
            Ok(Examples::Fingerprints {
                inputs: FingerprintInputs::new(&rxns, &m.config.fingerprint),
                labels: labels_of(&data)?,
            })
        }
        Model::Ranker(r) => {
            let mut pool = GraphPool::new(&r.embed);
            if io::looks_like_candidates(text) {
                let mut queries = Vec::new();
                for q in io::parse_candidates(text)? {
                    let ids = q.candidates.iter().map(|c| pool.add(c)).collect::<Result<Vec<_>>>()?;
                    queries.push((ids, q.true_index));
                }
                Ok(Examples::Queries {
                    graphs: pool.graphs,
                    queries,
                })
            } else {
                let mut pairs = Vec::new();
                for (a, b) in io::parse_pairs(text)? {
                    pairs.push((pool.add(&a)?, pool.add(&b)?));
                }
                Ok(Examples::Pairs {
                    graphs: pool.graphs,
                    pairs,
                })
            }
        }
    }
}

fn make_splits(cfg: &RunConfig, ex: &Examples) -> Result<Splits> {
    if let (Some(tr), Some(te)) = (cfg.train_per_class, cfg.test_per_class) {
        let labels = match ex {
            Examples::Graphs {
                target: Target::Classes(c),
                ..
            } => c,
            Examples::Fingerprints { labels, .. } => labels,
            _ => bail!("train_per_class needs a classification dataset"),
        };
        return Ok(balanced_subsample(labels, tr, te, cfg.seed)?);
    }
    let train = 1.0 - cfg.valid_fraction - cfg.test_fraction;
    Ok(split(ex.len(), train, cfg.valid_fraction, cfg.seed)?)
}

/// Restricts an objective to some of its examples.
struct Subset<'a> {
    inner: &'a dyn Objective,
    indices: &'a [usize],
}

impl Objective for Subset<'_> {
    fn example_count(&self) -> usize {
        self.indices.len()
    }

    fn loss(&self, tape: &mut Tape, store: &ParamStore, batch: &[usize]) -> Result<Var, ModelError> {
        let mapped: Vec<usize> = batch.iter().map(|&i| self.indices[i]).collect();
        self.inner.loss(tape, store, &mapped)
    }
}

/// (better, worse) graph pairs from the selected units.
fn training_pairs(ex: &Examples, units: &[usize]) -> Vec<(usize, usize)> {
    match ex {
        Examples::Pairs { pairs, .. } => units.iter().map(|&i| pairs[i]).collect(),
        Examples::Queries { queries, .. } => units
            .iter()
            .filter_map(|&q| queries[q].1.map(|t| (&queries[q].0, t)))
            .flat_map(|(ids, t)| {
                ids.iter()
                    .enumerate()
                    .filter(move |&(i, _)| i != t)
                    .map(move |(_, &g)| (ids[t], g))
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn run_fit<F>(model: &Model, store: &mut ParamStore, ex: &Examples, train: &[usize], opts: &TrainOptions, on_epoch: F) -> Result<()>
where
    F: FnMut(&rxn_hypergraph::train::EpochReport, &ParamStore) -> Result<Control, ModelError>,
{
    ensure!(!train.is_empty(), "training split is empty");
    match (model, ex) {
        (Model::Gnn(m), Examples::Graphs { graphs, target }) => {
            let full = GraphObjective {
                model: m,
                graphs,
                target,
            };
            fit(store, &Subset { inner: &full, indices: train }, opts, on_epoch)?;
        }
        (Model::Fingerprint(m), Examples::Fingerprints { inputs, labels }) => {
            let full = FingerprintObjective {
                model: m,
                inputs,
                labels,
            };
            fit(store, &Subset { inner: &full, indices: train }, opts, on_epoch)?;
        }
        (Model::Ranker(r), Examples::Pairs { graphs, .. } | Examples::Queries { graphs, .. }) => {
            let pairs = training_pairs(ex, train);
            let objective = PairObjective::new(r, graphs, &pairs)?;
            fit(store, &objective, opts, on_epoch)?;
        }
        _ => bail!("model and data do not match"),
    }
    Ok(())
}

fn pair_scores(r: &PairwiseRanker, store: &ParamStore, graphs: &[PreparedGraph], pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let mut used: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();
    let refs: Vec<&PreparedGraph> = used.iter().map(|&g| &graphs[g]).collect();
    let x = r.embed(store, &refs)?;
    let w = store.get(r.w).column(0).to_owned();
    let row = |g: usize| x.row(used.binary_search(&g).expect("embedded"));
    Ok(pairs.iter().map(|&(a, b)| (&row(a) - &row(b)).dot(&w).tanh()).collect())
}

fn evaluate(model: &Model, store: &ParamStore, ex: &Examples, units: &[usize]) -> Result<Metrics> {
    let mut out = Metrics {
        count: units.len(),
        ..Default::default()
    };
    if units.is_empty() {
        return Ok(out);
    }
    match (model, ex) {
        (Model::Gnn(m), Examples::Graphs { graphs, target }) => {
            let refs: Vec<&PreparedGraph> = units.iter().map(|&i| &graphs[i]).collect();
            let (_, y) = m.predict(store, &refs, 64)?;
            match (target, m.config.task) {
                (Target::Classes(c), Task::Classify { classes }) => {
                    let truth: Vec<usize> = units.iter().map(|&i| c[i]).collect();
                    let cm = classification_metrics(&argmax_rows(y.view()), &truth, classes)?;
                    out.accuracy = Some(cm.accuracy);
                    out.per_class_accuracy = Some(cm.per_class_accuracy);
                    out.confusion = Some(cm.confusion);
                }
                (Target::Values(v), _) => {
                    let se: f64 = units.iter().enumerate().map(|(r, &i)| (y[[r, 0]] - v[[i, 0]]).powi(2)).sum();
                    out.mse = Some(se / units.len() as f64);
                }
                _ => bail!("model and data do not match"),
            }
        }
        (Model::Fingerprint(m), Examples::Fingerprints { inputs, labels }) => {
            let y = m.predict(store, &inputs.select(units))?;
            let truth: Vec<usize> = units.iter().map(|&i| labels[i]).collect();
            let cm = classification_metrics(&argmax_rows(y.view()), &truth, m.config.classes)?;
            out.accuracy = Some(cm.accuracy);
            out.per_class_accuracy = Some(cm.per_class_accuracy);
            out.confusion = Some(cm.confusion);
        }
        (Model::Ranker(r), Examples::Pairs { graphs, pairs }) => {
            let selected: Vec<_> = units.iter().map(|&i| pairs[i]).collect();
            let s = pair_scores(r, store, graphs, &selected)?;
            out.pairwise_accuracy = Some(s.iter().filter(|&&v| v > 0.0).count() as f64 / s.len() as f64);
        }
        (Model::Ranker(r), Examples::Queries { graphs, queries }) => {
            let mut orders = Vec::new();
            let mut truths = Vec::new();
            let (mut wins, mut total) = (0usize, 0usize);
            for &q in units {
                let (ids, truth) = &queries[q];
                let Some(t) = *truth else { continue };
                let refs: Vec<&PreparedGraph> = ids.iter().map(|&g| &graphs[g]).collect();
                let m = r.rank_matrix(store, &refs)?;
                wins += (0..ids.len()).filter(|&i| i != t && m.0[[t, i]] > 0.0).count();
                total += ids.len() - 1;
                orders.push(ranked_pairs(&m).order);
                truths.push(t);
            }
            if !truths.is_empty() {
                out.top_k = Some(top_k_accuracy(&orders, &truths, &TOP_K)?);
            }
            if total > 0 {
                out.pairwise_accuracy = Some(wins as f64 / total as f64);
            }
        }
        _ => bail!("model and data do not match"),
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// TOML run config; flags below override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labelled TSV, a better/worse pair TSV, or candidate JSON lines.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<Manifest> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    args.overrides.apply(&mut cfg);
    cfg.validate()?;
    let text = io::read_text(&args.data)?;
    let meta = CheckpointMeta {
        classes: infer_classes(&cfg, &text)?,
        config: cfg.clone(),
    };
    let (model, mut store) = model::build(&meta)?;
    let ex = examples(&model, &text)?;
    let splits = make_splits(&cfg, &ex)?;
    let opts = TrainOptions {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        lr_decay: cfg.lr_decay,
        l2: cfg.l2,
        seed: cfg.seed,
    };
    let mut logs = Vec::new();
    let mut failure = None;
    run_fit(&model, &mut store, &ex, &splits.train, &opts, |report, store| {
        let valid = if splits.valid.is_empty() {
            None
        } else {
            match evaluate(&model, store, &ex, &splits.valid) {
                Ok(m) => Some(m),
                Err(e) => {
                    failure = Some(e);
                    return Ok(Control::Stop);
                }
            }
        };
        let log = EpochLog {
            format_version: FORMAT_VERSION,
            epoch: report.epoch,
            loss: report.mean_loss,
            lr: report.lr,
            valid,
        };
        if let Err(e) = write_json_line(out, &log) {
            failure = Some(e);
            return Ok(Control::Stop);
        }
        logs.push(log);
        let done = cfg.stop_loss.is_some_and(|t| report.mean_loss < t);
        Ok(if done { Control::Stop } else { Control::Continue })
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let eval = |units: &[usize]| -> Result<Option<Metrics>> {
        if units.is_empty() {
            Ok(None)
        } else {
            evaluate(&model, &store, &ex, units).map(Some)
        }
    };
    let final_metrics = FinalMetrics {
        train: evaluate(&model, &store, &ex, &splits.train)?,
        valid: eval(&splits.valid)?,
        test: eval(&splits.test)?,
    };
    io::write_text(&args.out, &model::checkpoint_json(&meta, &store)?)?;
    write_json_line(out, &serde_json::json!({ "format_version": FORMAT_VERSION, "final": &final_metrics }))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        seed: cfg.seed,
        config: cfg,
        classes: meta.classes,
        data_sha256: io::sha256_hex(text.as_bytes()),
        checkpoint: args.out.display().to_string(),
        units: ex.units().to_string(),
        splits,
        epochs: logs,
        final_metrics,
    };
    if let Some(p) = &args.manifest {
        io::write_text(p, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    }
    Ok(manifest)
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Evaluate only the test split recorded here; the data must match its digest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct Versioned<T> {
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<Metrics> {
    let loaded = model::load(&args.ckpt)?;
    let text = io::read_text(&args.data)?;
    let ex = examples(&loaded.model, &text)?;
    let units = match &args.manifest {
        Some(p) => {
            let manifest: Manifest = serde_json::from_str(&io::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?;
            let digest = io::sha256_hex(text.as_bytes());
            ensure!(
                digest == manifest.data_sha256,
                "{} does not match the manifest (sha256 {digest}, expected {})",
                args.data.display(),
                manifest.data_sha256
            );
            ensure!(manifest.units == ex.units(), "manifest splits count {} but the data holds {}", manifest.units, ex.units());
            manifest.splits.test
        }
        None => (0..ex.len()).collect(),
    };
    ensure!(!units.is_empty(), "nothing to evaluate: the test split is empty");
    let metrics = evaluate(&loaded.model, &loaded.store, &ex, &units)?;
    write_json_line(out, &Versioned { format_version: FORMAT_VERSION, body: &metrics })?;
    Ok(metrics)
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Candidate sets, one JSON object per line.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Ranking output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Top-k accuracy over sets that name their true candidate.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

pub fn rank(args: &RankArgs, out: &mut dyn Write) -> Result<Vec<RankingRecord>> {
    let loaded = model::load(&args.ckpt)?;
    let Model::Ranker(r) = &loaded.model else {
        bail!("{} is not a ranking checkpoint", args.ckpt.display());
    };
    let queries = io::parse_candidates(&io::read_text(&args.candidates)?)?;
    let mut records = Vec::with_capacity(queries.len());
    let (mut orders, mut truths) = (Vec::new(), Vec::new());
    for q in &queries {
        let graphs = q
            .candidates
            .iter()
            .map(|c| Ok(r.embed.prepare(&parse_reaction(c).with_context(|| format!("query {}: {c:?}", q.query_id))?)?))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&PreparedGraph> = graphs.iter().collect();
        let m = r.rank_matrix(&loaded.store, &refs)?;
        let order = ranked_pairs(&m).order;
        if let Some(t) = q.true_index {
            orders.push(order.clone());
            truths.push(t);
        }
        records.push(RankingRecord {
            format_version: RANKING_FORMAT_VERSION,
            query_id: q.query_id.clone(),
            order,
            scores: m.rows(),
        });
    }
    let lines = io::to_json_lines(&records)?;
    match &args.out {
        Some(p) => io::write_text(p, &lines)?,
        None => out.write_all(lines.as_bytes())?,
    }
    if let Some(p) = &args.metrics {
        ensure!(!truths.is_empty(), "no candidate set names its true candidate");
        let acc = top_k_accuracy(&orders, &truths, &TOP_K)?;
        let summary = serde_json::json!({ "format_version": FORMAT_VERSION, "queries": truths.len(), "top_k": acc });
        io::write_text(p, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }
    Ok(records)
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub reaction: String,
    #[arg(long, value_enum, default_value = "final")]
    pub path_layers: PathLayersArg,
    /// Intermolecular atom pairs kept per side.
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PathLayersArg {
    Final,
    Averaged,
}

pub fn explain_cmd(args: &ExplainArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = model::load(&args.ckpt)?;
    let gnn = match &loaded.model {
        Model::Gnn(m) => m,
        Model::Ranker(r) => &r.embed,
        Model::Fingerprint(_) => bail!("the fingerprint model has no attention to explain"),
    };
    let rxn = parse_reaction(&args.reaction)?;
    let opts = ExplainOptions {
        path_layers: match args.path_layers {
            PathLayersArg::Final => PathLayers::Final,
            PathLayersArg::Averaged => PathLayers::Averaged,
        },
        top_k: args.top_k,
    };
    let report = explain(gnn, &loaded.store, &rxn, &opts)?;
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct ParseArgs {
    /// One reaction per line; anything after a tab is ignored.
    pub file: PathBuf,
    /// Fail when any line does not parse.
    #[arg(long)]
    pub strict: bool,
}

pub fn parse(args: &ParseArgs, out: &mut dyn Write) -> Result<()> {
    let text = io::read_text(&args.file)?;
    let mut seen = 0;
    let mut failed = 0;
    for (i, line) in text.lines().enumerate() {
        let smirks = line.split('\t').next().unwrap_or_default().trim();
        if smirks.is_empty() || smirks.starts_with('#') {
            continue;
        }
        seen += 1;
        let value = match parse_reaction(smirks) {
            Ok(r) => serde_json::json!({
                "format_version": FORMAT_VERSION,
                "line": i + 1,
                "ok": true,
                "reactants": r.agents.iter().filter(|a| !**a).count(),
                "agents": r.agents.iter().filter(|a| **a).count(),
                "products": r.products.len(),
                "atoms": r.total_atoms(),
                "bonds": r.total_bonds(),
            }),
            Err(e) => {
                failed += 1;
                serde_json::json!({
                    "format_version": FORMAT_VERSION,
                    "line": i + 1,
                    "ok": false,
                    "error": e.to_string(),
                    "offset": e.offset(),
                })
            }
        };
        write_json_line(out, &value)?;
    }
    ensure!(seen > 0, "{} holds no reactions", args.file.display());
    if args.strict && failed > 0 {
        bail!("{failed} of {seen} reactions failed to parse");
    }
    Ok(())
}

pub fn build(smirks: &str, out: &mut dyn Write) -> Result<()> {
    let rxn = parse_reaction(smirks)?;
    let g = build_hypergraph(&rxn)?;
    serde_json::to_writer_pretty(&mut *out, &g.dump(smirks))?;
    writeln!(out)?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct FingerprintArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long, default_value_t = 2048)]
    pub bits: usize,
    #[arg(long, default_value_t = 1.0)]
    pub w1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFingerprint {
    pub format_version: u32,
    pub record: usize,
    pub reaction: String,
    /// (bit, value) for every nonzero bit.
    pub nonzero: Vec<(usize, f64)>,
}

pub fn fingerprint(args: &FingerprintArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(args.bits > 0, "bits must be positive");
    let data = Dataset::from_tsv(&io::read_text(&args.data)?)?;
    ensure!(!data.is_empty(), "dataset is empty");
    let cfg = FingerprintConfig {
        radius: args.radius,
        bits: args.bits,
    };
    for (i, r) in data.records.iter().enumerate() {
        let fp = reaction_fp(&r.reaction, args.w1, args.w2, &cfg);
        let line = SparseFingerprint {
            format_version: FORMAT_VERSION,
            record: i,
            reaction: r.smirks.clone(),
            nonzero: fp.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(b, &v)| (b, v)).collect(),
        };
        write_json_line(out, &line)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Subcommand)]
pub enum GenerateCmd {
    /// Three-class condensation dataset as a labelled TSV.
    Classify {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        solvent_rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Candidate sets as JSON lines, optionally with a training pair table.
    Ranking {
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 20)]
        candidates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        scale_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Random pairs per set on top of the ones against the best candidate.
        #[arg(long, default_value_t = 0)]
        extra: usize,
    },
}

pub fn generate(cmd: &GenerateCmd) -> Result<()> {
    match cmd {
        GenerateCmd::Classify {
            count,
            seed,
            solvent_rate,
            out,
        } => {
            ensure!((0.0..=1.0).contains(solvent_rate), "solvent_rate must be in [0, 1]");
            let d = functional_group_task(&ClassifyOptions {
                count: *count,
                seed: *seed,
                solvent_rate: *solvent_rate,
            });
            io::write_text(out, &d.to_tsv())
        }
        GenerateCmd::Ranking {
            queries,
            candidates,
            seed,
            scale_seed,
            out,
            pairs,
            extra,
        } => {
            let pool = substituent_utilities(*scale_seed).len();
            ensure!((1..=pool).contains(candidates), "candidates must be between 1 and {pool}");
            let sets = ranking_task(&RankingOptions {
                queries: *queries,
                candidates: *candidates,
                seed: *seed,
                scale_seed: *scale_seed,
            });
            let lines: Vec<CandidateQuery> = sets
                .iter()
                .map(|s| CandidateQuery {
                    query_id: s.query_id.clone(),
                    candidates: s.candidates.clone(),
                    true_index: Some(s.true_index),
                })
                .collect();
            io::write_text(out, &io::to_json_lines(&lines)?)?;
            if let Some(p) = pairs {
                let table: String = ranking_pairs(&sets, *extra, *seed)
                    .into_iter()
                    .map(|(a, b)| format!("{a}\t{b}\n"))
                    .collect();
                io::write_text(p, &table)?;
            }
            Ok(())
        }
    }
}
