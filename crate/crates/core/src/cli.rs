//! Command-line surface: `gen`, `train-rq`, `train-hc`, `assign`, `eval`, `bench`.
//!
//! Exit codes: 0 success, 1 usage, 2 data validation, 3 exhausted
//! candidates or exceeded capacity.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::alloc::CandidateProvider;
use crate::assign::{assign, AssignConfig, AssignReport, OnExhausted, RankingStrategy, Strategy};
use crate::error::{Error, Result};
use crate::io::{
    gen_synthetic, read_embeddings, read_idmap, read_index, write_embeddings, write_idmap,
    write_index, CentroidEncoding, EmbeddingFormat,
};
use crate::metrics::{
    conflict_stats, conflict_stats_of, distortion_report, rank_displacement, search_space,
    TimingReport,
};
use crate::quantizer::{train_hc, train_rq, Index, TrainParams, TrainedIndex};
use crate::types::{EmbeddingSet, UsedIdRegistry};

#[derive(Debug, Parser)]
#[command(
    name = "semid",
    version,
    about = "Conflict-free purely semantic identifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded Gaussian-mixture embedding file.
    Gen(GenArgs),
    /// Train a residual k-means codebook stack.
    TrainRq(TrainRqArgs),
    /// Train a fixed-depth hierarchical k-means tree.
    TrainHc(TrainHcArgs),
    /// Assign ids to every embedding.
    Assign(AssignArgs),
    /// Report conflicts, distortion, rank displacement and search space.
    Eval(EvalArgs),
    /// Time training and id generation over a full pipeline.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Bin,
    Lines,
}

impl From<FormatArg> for EmbeddingFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Bin => EmbeddingFormat::Bin,
            FormatArg::Lines => EmbeddingFormat::Lines,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncodingArg {
    F32,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Greedy,
    Suffix,
    Ecm,
    Rrs,
}

impl From<MethodArg> for Strategy {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Greedy => Strategy::Greedy,
            MethodArg::Suffix => Strategy::Suffix,
            MethodArg::Ecm => Strategy::Ecm,
            MethodArg::Rrs => Strategy::Rrs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RankingArg {
    Score,
    Order,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExhaustedArg {
    Fail,
    Widen,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 16)]
    clusters: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "bin")]
    format: FormatArg,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainCommon {
    /// Embedding file (binary or line format, detected by magic).
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Scale every embedding to unit length before training and assignment.
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value = "f32")]
    encoding: EncodingArg,
}

impl TrainCommon {
    fn params(&self) -> TrainParams {
        TrainParams {
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            normalize: self.normalize,
        }
    }

    fn encoding(&self) -> CentroidEncoding {
        match self.encoding {
            EncodingArg::F32 => CentroidEncoding::F32,
            EncodingArg::Text => CentroidEncoding::Text,
        }
    }
}

#[derive(Debug, Args)]
struct TrainRqArgs {
    #[command(flatten)]
    common: TrainCommon,
    #[arg(long, default_value_t = 256)]
    codebook_size: usize,
}

#[derive(Debug, Args)]
struct TrainHcArgs {
    #[command(flatten)]
    common: TrainCommon,
    #[arg(long, default_value_t = 16)]
    branching: usize,
}

#[derive(Debug, Args)]
struct AssignArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    index: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "rrs")]
    method: MethodArg,
    /// Top-k per level as a comma list; a single value is broadcast.
    #[arg(long, default_value = "2")]
    k: String,
    #[arg(long, value_enum, default_value = "score")]
    ranking: RankingArg,
    #[arg(long, default_value_t = 0)]
    ranking_seed: u64,
    #[arg(long, value_enum, default_value = "fail")]
    on_exhausted: ExhaustedArg,
    /// Id maps whose ids are reserved before assignment starts.
    #[arg(long)]
    prior: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    index: PathBuf,
    /// Id maps to evaluate; repeat the flag for several.
    #[arg(long = "idmap", required = true)]
    idmaps: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Existing embedding file; otherwise a synthetic corpus is generated.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 256)]
    clusters: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 256)]
    codebook_size: usize,
    #[arg(long, default_value = "2")]
    k: String,
    /// Comma list of methods to time.
    #[arg(long, default_value = "greedy,suffix,ecm,rrs")]
    methods: String,
    #[arg(long, value_enum, default_value = "widen")]
    on_exhausted: ExhaustedArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 25)]
    max_iters: usize,
    /// Train on the first N embeddings only (0 = all).
    #[arg(long, default_value_t = 0)]
    train_sample: usize,
}

/// Parses a top-k list, broadcasting a single value to every level.
pub fn parse_kvec(s: &str, levels: usize) -> Result<Vec<usize>> {
    let ks = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad --k value {x:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    match ks.len() {
        1 => Ok(vec![ks[0]; levels]),
        n if n == levels => Ok(ks),
        n => Err(Error::InvalidConfig(format!(
            "--k has {n} entries, index has {levels} levels"
        ))),
    }
}

fn load_set(path: &Path, format: Option<FormatArg>) -> Result<EmbeddingSet> {
    read_embeddings(path, format.map(Into::into))
}

fn prepared(set: EmbeddingSet, index: &TrainedIndex) -> Result<EmbeddingSet> {
    if set.dim() != index.index.dim() {
        return Err(Error::DimensionMismatch {
            location: "embeddings vs index".into(),
            expected: index.index.dim(),
            found: set.dim(),
        });
    }
    Ok(if index.params.normalize {
        set.normalized()
    } else {
        set
    })
}

fn train_common(
    common: &TrainCommon,
    train: impl FnOnce(&EmbeddingSet, &TrainParams) -> Result<Index>,
) -> Result<()> {
    let set = load_set(&common.input, common.format)?;
    let params = common.params();
    let index = train(&set, &params)?;
    write_index(
        &common.out,
        &TrainedIndex { index, params },
        common.encoding(),
    )
}

fn cmd_assign(a: &AssignArgs, out: &mut dyn Write) -> Result<()> {
    let index = read_index(&a.index)?;
    let set = prepared(load_set(&a.input, a.format)?, &index)?;
    let provider = CandidateProvider::from(&index.index);
    let ranking = match a.ranking {
        RankingArg::Score => RankingStrategy::ResidualScore,
        RankingArg::Order => RankingStrategy::CombinationOrder,
        RankingArg::Random => RankingStrategy::Random(a.ranking_seed),
    };
    let cfg = AssignConfig {
        strategy: a.method.into(),
        kvec: parse_kvec(&a.k, provider.num_levels())?,
        ranking,
        on_exhausted: match a.on_exhausted {
            ExhaustedArg::Fail => OnExhausted::Fail,
            ExhaustedArg::Widen => OnExhausted::WidenK,
        },
    };
    let mut registry = UsedIdRegistry::new();
    for p in &a.prior {
        let (_, prior) = read_idmap(p)?;
        for asg in prior.assignments.iter().flatten() {
            registry.next_suffix(&asg.id);
            registry.insert(asg.id.clone());
        }
    }
    let extras = vec![
        ("index".to_string(), a.index.display().to_string()),
        ("index_kind".to_string(), index.index.kind().to_string()),
        ("train_seed".to_string(), index.params.seed.to_string()),
        ("levels".to_string(), provider.num_levels().to_string()),
    ];
    match assign(&set, provider, &cfg, &mut registry) {
        Ok(report) => {
            write_idmap(&a.out, &report, &extras)?;
            writeln!(
                out,
                "assigned\t{}\tseconds\t{:.6}",
                report.len(),
                report.duration.as_secs_f64()
            )?;
            Ok(())
        }
        Err(Error::ExhaustedCandidates { key, report }) => {
            write_idmap(&a.out, &report, &extras)?;
            writeln!(
                out,
                "assigned\t{}\tfailed\t{}",
                report.len() - report.failures.len(),
                report.failures.len()
            )?;
            Err(Error::ExhaustedCandidates { key, report })
        }
        Err(e) => Err(e),
    }
}

fn file_label(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let index = read_index(&a.index)?;
    let set = prepared(load_set(&a.input, a.format)?, &index)?;
    let provider = CandidateProvider::from(&index.index);
    let mut reports: Vec<AssignReport> = Vec::new();
    let mut labels = Vec::new();
    for p in &a.idmaps {
        let (_, rep) = read_idmap(p)?;
        if rep.keys != set.keys() {
            return Err(Error::InvalidConfig(format!(
                "{} does not list the embedding keys in ingestion order",
                p.display()
            )));
        }
        reports.push(rep);
        labels.push(file_label(p));
    }

    let greedy_ids: Vec<_> = set.iter().map(|(_, e)| provider.greedy(e).id).collect();
    let base = conflict_stats_of(&greedy_ids);
    writeln!(
        out,
        "# conflicts\nsource\tn\tconflicting\tgroups\tproportion"
    )?;
    writeln!(
        out,
        "greedy-baseline\t{}\t{}\t{}\t{:.6}",
        base.n, base.conflicting, base.groups, base.proportion
    )?;
    for (label, rep) in labels.iter().zip(&reports) {
        let s = conflict_stats(rep);
        writeln!(
            out,
            "{label}\t{}\t{}\t{}\t{:.6}",
            s.n, s.conflicting, s.groups, s.proportion
        )?;
    }

    let refs: Vec<&AssignReport> = reports.iter().collect();
    let dist = distortion_report(&set, provider, &refs, Some(&labels))?;
    writeln!(out, "\n# distortion\n{}", dist.to_tsv().trim_end())?;

    writeln!(out, "\n# displacement\nsource\tlevel\trank\tcount")?;
    for (label, rep) in labels.iter().zip(&reports) {
        for line in rank_displacement(rep).to_tsv().lines().skip(1) {
            writeln!(out, "{label}\t{line}")?;
        }
    }

    let sizes = provider.level_sizes();
    writeln!(
        out,
        "\n# search-space\nsource\tstrategy\tid_length\tsearch_space"
    )?;
    for (label, rep) in labels.iter().zip(&reports) {
        let extra = usize::from(rep.strategy() == Strategy::Suffix);
        writeln!(
            out,
            "{label}\t{}\t{}\t{}",
            rep.strategy(),
            sizes.len() + extra,
            search_space(&sizes, rep)
        )?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut timing = TimingReport::new();
    let set = match &a.input {
        Some(p) => timing.time("load", || load_set(p, None))?,
        None => timing.time("generate", || {
            gen_synthetic(a.n, a.dim, a.clusters, a.spread, a.seed)
        })?,
    };
    let params = TrainParams {
        max_iters: a.max_iters,
        seed: a.seed,
        ..TrainParams::default()
    };
    let train_set = if a.train_sample > 0 && a.train_sample < set.len() {
        let order: Vec<usize> = (0..a.train_sample).collect();
        set.permuted(&order)
    } else {
        set.clone()
    };
    let stack = timing.time("train", || {
        train_rq(&train_set, a.levels, a.codebook_size, &params)
    })?;
    let provider = CandidateProvider::Rq(&stack);
    let kvec = parse_kvec(&a.k, a.levels)?;
    writeln!(
        out,
        "# bench\tn={}\tdim={}\tlevels={}\tcodebook_size={}\tk={}\tseed={}",
        set.len(),
        set.dim(),
        a.levels,
        a.codebook_size,
        a.k,
        a.seed
    )?;
    for m in a.methods.split(',') {
        let strategy: Strategy = m.trim().parse()?;
        let cfg =
            AssignConfig::new(strategy, kvec.clone()).with_on_exhausted(match a.on_exhausted {
                ExhaustedArg::Fail => OnExhausted::Fail,
                ExhaustedArg::Widen => OnExhausted::WidenK,
            });
        let report = assign(&set, provider, &cfg, &mut UsedIdRegistry::new())?;
        timing.record(format!("assign:{strategy}"), report.duration);
    }
    write!(out, "{}", timing.to_tsv())?;
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen(g) => {
            let set = gen_synthetic(g.n, g.dim, g.clusters, g.spread, g.seed)?;
            write_embeddings(&g.out, &set, g.format.into())
        }
        Command::TrainRq(t) => train_common(&t.common, |set, p| {
            Ok(Index::Rq(train_rq(
                set,
                t.common.levels,
                t.codebook_size,
                p,
            )?))
        }),
        Command::TrainHc(t) => train_common(&t.common, |set, p| {
            Ok(Index::Hc(train_hc(set, t.common.levels, t.branching, p)?))
        }),
        Command::Assign(a) => cmd_assign(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

/// Runs the tool, writing reports to `out` and diagnostics to stderr.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("semid: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock())
}
