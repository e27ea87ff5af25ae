use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hawkfeed::features::lexicon::MatchMode;
use hawkfeed::features::store::population_of;
use hawkfeed::fit::{cross_validate, fit, FitConfig, WeightMask};
use hawkfeed::io::{self, ModelFile, SimSpec};
use hawkfeed::likelihood::Zeta;
use hawkfeed::rank_eval::{
    build_ranker, candidates, evaluate, CandidatePolicy, RankReport, RankerKind,
};
use hawkfeed::simulate::simulate_corpus;
use hawkfeed::{Cascade, Error, FeatureStore, Lexicon, Result};

/// Feature-modulated Hawkes feed ranking for conversation cascades.
#[derive(Parser)]
#[command(name = "hawkfeed", version)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Seed for randomized steps; overrides seeds in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build publisher-user and content features from a training corpus.
    ExtractFeatures(ExtractArgs),
    /// Estimate model weights by L1-penalized maximum likelihood.
    Fit(FitArgs),
    /// Draw a synthetic corpus from a model.
    Simulate(SimulateArgs),
    /// Order a user's feed at one instant.
    Rank(RankArgs),
    /// Replay test comments through a ranker and report average ranks per group.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Matching {
    Exact,
    Prefix,
}

impl From<Matching> for MatchMode {
    fn from(m: Matching) -> Self {
        match m {
            Matching::Exact => MatchMode::Exact,
            Matching::Prefix => MatchMode::PrefixWildcard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Open,
    Active,
}

impl From<Policy> for CandidatePolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Open => CandidatePolicy::Open,
            Policy::Active => CandidatePolicy::Active,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// JSONL lexicon, one category per line; the bundled demo lexicon if omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "exact")]
    matching: Matching,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// JSON fit settings; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Uniform L1 penalty; overrides the config.
    #[arg(long)]
    zeta: Option<f64>,
    /// Pick the penalty from the config's grid by cross-validation.
    #[arg(long)]
    cv: bool,
    /// Restrict weights to one variant's feature sets (e.g. HWK-LNG).
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    omega_mu: Option<f64>,
    #[arg(long)]
    omega_a: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON simulation spec with inline parameters and features.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the spec's feature store for later fitting.
    #[arg(long)]
    features_out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    user: String,
    /// Global time in minutes.
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    #[arg(long, value_enum, default_value = "open")]
    policy: Policy,
}

#[derive(Args)]
struct EvaluateArgs {
    /// One of RCHR, NN, COX-LNG, COX-PSY, HWK, HWK-CHR, HWK-RLTN, HWK-LNG, HWK-PSY, HWK-ALL.
    #[arg(long)]
    ranker: String,
    /// Fitted model for the HWK-CHR..HWK-ALL rankers; fit on the training set if omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    fit_config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "open")]
    policy: Policy,
    /// Include per-comment ranks in the report.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: PathBuf,
}

fn load_corpus(path: &Path, store: Option<&FeatureStore>) -> Result<Vec<Cascade>> {
    let mut cs = io::read_corpus(path)?;
    if let Some(s) = store {
        s.annotate(&mut cs)?;
    }
    Ok(cs)
}

fn extract_features(a: ExtractArgs) -> Result<()> {
    let lexicon = match &a.lexicon {
        Some(p) => io::load_lexicon(p, a.matching.into())?,
        None => Lexicon::demo(),
    };
    let corpus = io::read_corpus(&a.corpus)?;
    let store = FeatureStore::from_corpus(&corpus, lexicon)?;
    io::save_features(&a.out, &store)?;
    log::info!(
        "{} pair and {} content features for {} users",
        store.pair_dim(),
        store.content_dim(),
        store.population().len()
    );
    Ok(())
}

fn fit_config(path: Option<&Path>) -> Result<FitConfig> {
    match path {
        Some(p) => io::read_json(p),
        None => Ok(FitConfig::default()),
    }
}

fn run_fit(a: FitArgs) -> Result<()> {
    let store = io::load_features(&a.features)?;
    let corpus = load_corpus(&a.corpus, Some(&store))?;
    let mut config = fit_config(a.config.as_deref())?;
    if let Some(z) = a.zeta {
        config.zeta = Zeta::uniform(z);
    }
    if let Some(w) = a.omega_mu {
        config.omega_mu = w;
    }
    if let Some(w) = a.omega_a {
        config.omega_a = w;
    }
    if let Some(v) = &a.variant {
        let kind: RankerKind = v.parse()?;
        if !kind.uses_model() {
            return Err(Error::Usage(format!(
                "{kind} is not a feature-modulated variant"
            )));
        }
        if !kind.feature_sets().is_empty() {
            config.mask = Some(WeightMask::for_sets(
                store.pair_manifest(),
                store.content_manifest(),
                kind.feature_sets(),
            ));
        }
    }
    let users = if store.population().is_empty() {
        population_of(&corpus)
    } else {
        store.population().to_vec()
    };
    if a.cv {
        let cv = cross_validate(&corpus, &store, &users, &config)?;
        for row in &cv.table {
            log::info!(
                "zeta {:?}: mean held-out log-likelihood {}",
                row.zeta,
                row.mean
            );
        }
        config.zeta = cv.best;
    }
    let result = fit(&corpus, &store, &users, &config)?;
    if !result.converged {
        log::warn!(
            "optimizer stopped after {} iterations without converging",
            result.iterations
        );
    }
    io::save_model(&a.out, &ModelFile::from_fit(&result))
}

fn run_simulate(a: SimulateArgs, seed: Option<u64>) -> Result<()> {
    let spec: SimSpec = io::read_json(&a.config)?;
    let config = spec.to_config(seed)?;
    let corpus = simulate_corpus(&config, spec.n_cascades)?;
    io::write_corpus(&a.out, &corpus)?;
    if let Some(p) = &a.features_out {
        io::save_features(p, &spec.features)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RankedItem<'a> {
    cascade_id: &'a str,
    rank: usize,
}

fn run_rank(a: RankArgs) -> Result<()> {
    let model = io::load_model(&a.model)?;
    let store = io::load_features(&a.features)?;
    let corpus = load_corpus(&a.corpus, Some(&store))?;
    let cands = candidates(&corpus, a.t, a.policy.into());
    let mut ranker = hawkfeed::rank_eval::IntensityRanker::new("HWK-ALL", model.params, store);
    let order = hawkfeed::rank_eval::Ranker::rank(&mut ranker, &a.user, a.t, &corpus, &cands)?;
    let items: Vec<RankedItem> = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| RankedItem {
            cascade_id: &corpus[i].id,
            rank,
        })
        .collect();
    println!(
        "{}",
        serde_json::to_string(&items).expect("ranking serializes")
    );
    Ok(())
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let kind: RankerKind = a.ranker.parse()?;
    let store = io::load_features(&a.features)?;
    let model = match (&a.model, kind.uses_model()) {
        (Some(p), true) => Some(io::load_model(p)?.params),
        (Some(p), false) => {
            log::warn!("{kind} does not use a model; ignoring {}", p.display());
            None
        }
        (None, _) => None,
    };
    let train = load_corpus(&a.train, Some(&store))?;
    let test = load_corpus(&a.test, Some(&store))?;
    let config = fit_config(a.fit_config.as_deref())?;

    let mut groups: BTreeMap<&str, Vec<Cascade>> = BTreeMap::new();
    for c in &test {
        groups.entry(c.group.as_str()).or_default().push(c.clone());
    }
    let mut reports: Vec<RankReport> = Vec::new();
    for (group, cascades) in groups {
        let mut ranker = build_ranker(kind, &train, &store, model.clone(), &config)?;
        let mut report = evaluate(ranker.as_mut(), &cascades, a.policy.into())?;
        report.group = group.to_string();
        if !a.trace {
            report.trace.clear();
        }
        log::info!(
            "{group}: AveRank {:.4}, NAveRank {:.4}",
            report.ave_rank,
            report.nave_rank
        );
        reports.push(report);
    }
    io::write_jsonl(&a.out, &reports)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ExtractFeatures(a) => extract_features(a),
        Command::Fit(a) => run_fit(a),
        Command::Simulate(a) => run_simulate(a, cli.seed),
        Command::Rank(a) => run_rank(a),
        Command::Evaluate(a) => run_evaluate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hawkfeed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
