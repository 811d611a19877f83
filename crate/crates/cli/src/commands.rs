use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use grouprec_core::data::{group_users, kfold_split};
use grouprec_core::eval::{group_topk, run_experiment, Method};
use grouprec_core::exchange::{
    anonymity_series, cleanup, pad_matrix, simulate_exchange, total_mass, transition_model, write_events_csv,
    ExchangeConfig,
};
use grouprec_core::recgraph::{build_graph, build_personal_graph, personalize, rank_scores, recommend};
use grouprec_core::seed::derive_seed;
use grouprec_core::{
    pairwise_from_ratings, Catalog, DatasetBundle, Error, GroupSet, ItemId, NodeKind, NodeRef, PairwiseComparisonMatrix,
    RankScoreVector, RecommendationGraph, Result, TopKList,
};

use crate::config::RunConfig;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pad and exchange the comparison matrices of one group.
    SimulateExchange(ExchangeArgs),
    /// Closed-form effective anonymity over clock ticks.
    AnonymityReport(AnonymityArgs),
    /// Per-group top-k lists from exchanged matrices.
    Aggregate,
    /// Group-item-tag graph built from the top-k lists.
    BuildGraph,
    /// Ranked items for one user or group.
    Recommend(RecommendArgs),
    /// Cross-validated percentile and recall.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateExchange(_) => "simulate-exchange",
            Command::AnonymityReport(_) => "anonymity-report",
            Command::Aggregate => "aggregate",
            Command::BuildGraph => "build-graph",
            Command::Recommend(_) => "recommend",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

#[derive(Debug, Args)]
pub struct ExchangeArgs {
    /// Group label; defaults to the first group.
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnonymityArgs {
    #[arg(long = "group-size", short = 'N')]
    pub group_size: usize,
    #[arg(long = "items", short = 'n')]
    pub n_items: usize,
    #[arg(long, default_value_t = 5000)]
    pub t_max: u64,
    /// Tick spacing of the series; defaults to `t_max / 100`.
    #[arg(long)]
    pub step: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub origin: usize,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// External user id.
    #[arg(long, conflicts_with = "group", required_unless_present = "group")]
    pub user: Option<String>,
    /// Group label.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[arg(long, default_value = "group_private")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, default_value = "group_private")]
    pub method: String,
}

/// Outputs of a command, relative to the output directory.
pub type Artifacts = Vec<String>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, out: &mut Artifacts) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(dir.join(name), e))?;
    out.push(name.to_string());
    Ok(())
}

fn external_item(c: &Catalog, i: ItemId) -> String {
    c.items.external(i.0).unwrap_or_default().to_string()
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub dir: PathBuf,
}

pub fn run(cmd: &Command, ctx: &Context) -> Result<Artifacts> {
    match cmd {
        Command::AnonymityReport(a) => anonymity_report(a, ctx),
        Command::SimulateExchange(a) => with_data(ctx, |b, gs| simulate(a, ctx, b, gs)),
        Command::Aggregate => with_data(ctx, |b, gs| aggregate(ctx, b, gs)),
        Command::BuildGraph => with_data(ctx, |b, gs| graph(ctx, b, gs)),
        Command::Recommend(a) => with_data(ctx, |b, gs| recommend_cmd(a, ctx, b, gs)),
        Command::Evaluate(a) => evaluate(a, ctx),
    }
}

fn with_data(ctx: &Context, f: impl FnOnce(&DatasetBundle, &GroupSet) -> Result<Artifacts>) -> Result<Artifacts> {
    let bundle = ctx.config.load_dataset()?;
    let groups = group_users(&bundle, &ctx.config.grouping)?;
    f(&bundle, &groups)
}

#[derive(Serialize)]
struct SeriesPoint {
    t: u64,
    effective_size: f64,
}

#[derive(Serialize)]
struct AnonymityOut {
    group_size: usize,
    n_items: usize,
    n_prime: u64,
    lambda2: f64,
    /// First tick with `lambda2^t < 0.01`.
    mixing_steps: u64,
    series: Vec<SeriesPoint>,
}

fn anonymity_report(a: &AnonymityArgs, ctx: &Context) -> Result<Artifacts> {
    let model = transition_model(a.group_size, a.n_items)?;
    let step = a.step.unwrap_or((a.t_max / 100).max(1));
    if step == 0 {
        return Err(Error::config("step", "must be at least 1"));
    }
    let mut ticks: Vec<u64> = (0..=a.t_max).step_by(step as usize).collect();
    if ticks.last() != Some(&a.t_max) {
        ticks.push(a.t_max);
    }
    let series = anonymity_series(&model, a.origin, ticks)?
        .into_iter()
        .map(|r| SeriesPoint {
            t: r.time as u64,
            effective_size: r.effective_size,
        })
        .collect::<Vec<_>>();
    let last = series.last().map_or(0.0, |p| p.effective_size);
    let out = AnonymityOut {
        group_size: a.group_size,
        n_items: a.n_items,
        n_prime: model.n_prime,
        lambda2: model.lambda2(),
        mixing_steps: model.mixing_steps(0.01),
        series,
    };
    let mut arts = Artifacts::new();
    write_json(&ctx.dir, "anonymity.json", &out, &mut arts)?;
    println!("A({}) = {last:.6} of {}", a.t_max, a.group_size);
    Ok(arts)
}

#[derive(Serialize)]
struct MatrixOut {
    user: String,
    ones: u64,
    /// Row-major bitset, little-endian 64-bit words.
    bits: String,
}

#[derive(Serialize)]
struct MatricesOut {
    group: String,
    n_items: usize,
    total: u64,
    members: Vec<MatrixOut>,
}

fn matrices_out(b: &DatasetBundle, label: &str, ms: &[PairwiseComparisonMatrix]) -> MatricesOut {
    MatricesOut {
        group: label.to_string(),
        n_items: b.catalog.n_items(),
        total: total_mass(ms),
        members: ms
            .iter()
            .map(|m| MatrixOut {
                user: b.catalog.users.external(m.owner().0).unwrap_or_default().to_string(),
                ones: m.count_ones(),
                bits: hex::encode(m.words().iter().flat_map(|w| w.to_le_bytes()).collect::<Vec<u8>>()),
            })
            .collect(),
    }
}

fn simulate(a: &ExchangeArgs, ctx: &Context, b: &DatasetBundle, gs: &GroupSet) -> Result<Artifacts> {
    let group = match &a.group {
        Some(l) => gs
            .by_label(l)
            .ok_or_else(|| Error::Usage(format!("no group labelled {l:?}")))?,
        None => gs.groups().first().ok_or_else(|| Error::Usage("no groups".into()))?,
    };
    let ex = &ctx.config.exchange;
    let by_user = b.ratings_by_user();
    let mut padded = Vec::with_capacity(group.size());
    for &u in &group.members {
        let m = pairwise_from_ratings(u, &by_user[u.index()], &b.catalog)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ex.padding_seed, &[0, group.id.0 as u64, u.0 as u64]));
        padded.push(pad_matrix(&m, &mut rng)?.0);
    }
    let config = ExchangeConfig::new(group.clone(), ex.t_threshold, derive_seed(ex.seed, &[0, group.id.0 as u64]));
    let outcome = simulate_exchange(padded.clone(), &config)?;
    let mut arts = Artifacts::new();
    write_json(&ctx.dir, "padded.json", &matrices_out(b, &group.label, &padded), &mut arts)?;
    write_json(&ctx.dir, "exchanged.json", &matrices_out(b, &group.label, &outcome.matrices), &mut arts)?;
    let cleaned: Vec<_> = outcome.matrices.iter().map(cleanup).collect();
    write_json(&ctx.dir, "cleaned.json", &matrices_out(b, &group.label, &cleaned), &mut arts)?;
    let mut w = create(&ctx.dir, "events.csv")?;
    write_events_csv(&outcome.events, &mut w)?;
    arts.push("events.csv".into());
    println!(
        "group {} ({} members): {} swaps, mass {} -> {}",
        group.label,
        group.size(),
        outcome.events.len(),
        total_mass(&padded),
        total_mass(&outcome.matrices)
    );
    Ok(arts)
}

fn all_topk(ctx: &Context, b: &DatasetBundle, gs: &GroupSet) -> Result<Vec<TopKList>> {
    let cfg = ctx.config.eval_config();
    let by_user = b.ratings_by_user();
    gs.groups()
        .iter()
        .map(|g| group_topk(&b.catalog, g, &by_user, &cfg, 0))
        .collect()
}

#[derive(Serialize)]
struct ScoredItem {
    rank: usize,
    item: String,
    score: f64,
}

#[derive(Serialize)]
struct GroupTopK {
    group: String,
    size: usize,
    method: grouprec_core::aggregate::AggregationMethod,
    short: bool,
    items: Vec<ScoredItem>,
}

fn aggregate(ctx: &Context, b: &DatasetBundle, gs: &GroupSet) -> Result<Artifacts> {
    let lists = all_topk(ctx, b, gs)?;
    let out: Vec<GroupTopK> = gs
        .groups()
        .iter()
        .zip(&lists)
        .map(|(g, l)| GroupTopK {
            group: g.label.clone(),
            size: g.size(),
            method: l.method,
            short: l.short,
            items: l
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| ScoredItem {
                    rank: i + 1,
                    item: external_item(&b.catalog, e.item),
                    score: e.score,
                })
                .collect(),
        })
        .collect();
    let mut arts = Artifacts::new();
    write_json(&ctx.dir, "topk.json", &out, &mut arts)?;
    println!("{} groups aggregated", out.len());
    Ok(arts)
}

fn group_graph(ctx: &Context, b: &DatasetBundle, gs: &GroupSet) -> Result<RecommendationGraph> {
    let lists = all_topk(ctx, b, gs)?;
    build_graph(&lists, &b.catalog, gs, ctx.config.rank.w_max)
}

#[derive(Serialize)]
struct GraphSummary {
    groups: Vec<String>,
    items: usize,
    tags: usize,
    edges: usize,
}

fn graph(ctx: &Context, b: &DatasetBundle, gs: &GroupSet) -> Result<Artifacts> {
    let g = group_graph(ctx, b, gs)?;
    let mut arts = Artifacts::new();
    let mut w = csv::Writer::from_writer(create(&ctx.dir, "edges.csv")?);
    let name = |n: NodeRef| match n.kind {
        NodeKind::Group => gs.groups()[n.index as usize].label.clone(),
        NodeKind::Item => b.catalog.items.external(n.index).unwrap_or_default().to_string(),
        NodeKind::Tag => b.catalog.tags.external(n.index).unwrap_or_default().to_string(),
        _ => n.index.to_string(),
    };
    w.write_record(["src_type", "src_id", "dst_type", "dst_id", "weight"])?;
    for src in 0..g.n_nodes() {
        let s = g.node_ref(src);
        for &(dst, weight) in g.out_edges(src) {
            let d = g.node_ref(dst as usize);
            w.write_record([s.kind.label(), &name(s), d.kind.label(), &name(d), &weight.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(ctx.dir.join("edges.csv"), e))?;
    arts.push("edges.csv".into());
    let summary = GraphSummary {
        groups: gs.groups().iter().map(|g| g.label.clone()).collect(),
        items: b.catalog.n_items(),
        tags: b.catalog.n_tags(),
        edges: g.edge_count(),
    };
    write_json(&ctx.dir, "graph.json", &summary, &mut arts)?;
    println!("{} nodes, {} directed edges", g.n_nodes(), g.edge_count());
    Ok(arts)
}

#[derive(Serialize)]
struct RecommendOut {
    target: String,
    method: Method,
    converged: bool,
    iterations: usize,
    items: Vec<ScoredItem>,
}

fn recommend_cmd(a: &RecommendArgs, ctx: &Context, b: &DatasetBundle, gs: &GroupSet) -> Result<Artifacts> {
    let method: Method = a.method.parse()?;
    let rank = ctx.config.eval_config().rank;
    let user = match &a.user {
        Some(ext) => Some(b.user(ext).ok_or_else(|| Error::Usage(format!("unknown user {ext:?}")))?),
        None => None,
    };
    let rated: HashSet<ItemId> = match user {
        Some(u) => b.ratings_by_user()[u.index()].iter().map(|r| r.item).collect(),
        None => HashSet::new(),
    };
    let (graph, scores, target): (RecommendationGraph, RankScoreVector, String) = match method {
        Method::GroupPrivate => {
            let group = match (&a.group, user) {
                (Some(l), _) => gs.by_label(l).ok_or_else(|| Error::Usage(format!("no group labelled {l:?}")))?,
                (None, Some(u)) => gs
                    .groups()
                    .iter()
                    .find(|g| g.members.binary_search(&u).is_ok())
                    .ok_or_else(|| Error::Usage(format!("user {u} is in no group")))?,
                (None, None) => return Err(Error::Usage("recommend needs --user or --group".into())),
            };
            let g = group_graph(ctx, b, gs)?;
            let s = rank_scores(&g, NodeRef::group(group.id), &rank)?;
            let target = match &a.user {
                Some(ext) => format!("user:{ext} (group {})", group.label),
                None => format!("group:{}", group.label),
            };
            (g, s, target)
        }
        Method::PersonalBaseline => {
            let (Some(u), Some(ext)) = (user, &a.user) else {
                return Err(Error::Usage("personal_baseline recommends for --user only".into()));
            };
            let g = build_personal_graph(&b.ratings, &b.catalog, b.profiles.as_deref())?;
            let s = rank_scores(&g, NodeRef::user(u), &rank)?;
            (g, s, format!("user:{ext}"))
        }
    };
    let mut list = recommend(&scores, &graph, &HashSet::new());
    if user.is_some() {
        list = personalize(&list, rated.iter().copied());
    }
    list.truncate(a.top);
    let out = RecommendOut {
        target,
        method,
        converged: scores.converged,
        iterations: scores.iterations,
        items: list
            .iter()
            .enumerate()
            .map(|(i, &item)| ScoredItem {
                rank: i + 1,
                item: external_item(&b.catalog, item),
                score: scores.score(&graph, NodeRef::item(item)),
            })
            .collect(),
    };
    let mut arts = Artifacts::new();
    write_json(&ctx.dir, "recommendations.json", &out, &mut arts)?;
    for s in &out.items {
        println!("{:>4} {} {:.6e}", s.rank, s.item, s.score);
    }
    Ok(arts)
}

fn evaluate(a: &EvaluateArgs, ctx: &Context) -> Result<Artifacts> {
    let method: Method = a.method.parse()?;
    let bundle = ctx.config.load_dataset()?;
    let cfg = ctx.config.eval_config();
    let plan = kfold_split(&bundle, cfg.folds, cfg.seeds.split)?;
    let strategy = (method == Method::GroupPrivate).then_some(&ctx.config.grouping);
    let report = run_experiment(&bundle, strategy, &cfg, method, &plan)?;
    let mut arts = Artifacts::new();
    write_json(&ctx.dir, "report.json", &report, &mut arts)?;
    let mut w = create(&ctx.dir, "report.csv")?;
    report.write_csv(&mut w, true)?;
    w.flush().map_err(|e| Error::io(ctx.dir.join("report.csv"), e))?;
    arts.push("report.csv".into());
    println!(
        "{}: percentile {:.4}, recall@{} {:.4} ({:.1}s)",
        report.label,
        report.mean_percentile,
        report.mean_recall.keys().last().copied().unwrap_or(0),
        report.mean_recall.values().last().copied().unwrap_or(0.0),
        report.runtime_seconds
    );
    Ok(arts)
}
