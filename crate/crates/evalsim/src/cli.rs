//! The `evalsim` subcommands.

use crate::io::{read_profile, write_histograms, write_positions, write_profile, ScaleHint};
use crate::report::{self, to_pretty};
use crate::{input, numerical, Error};
use clap::{Args, Parser, Subcommand};
use evalsim_core::embedding::{
    evals_to_dissimilarities, refit_voter_distribution, smacof_nested, EmbeddingError, RefitFamily, SmacofOptions,
};
use evalsim_core::fitting::{
    fit_pipeline_with, jitter_scores, CandidateFit, DependenceChoice, FitError, FitOptions,
};
use evalsim_core::generators::{CandidatePositions, Generator, GeneratorModel, LinkFunction, SpatialModel, SpatialSample};
use evalsim_core::profile::{Profile, Scale};
use evalsim_core::rng::derive_stream;
use evalsim_core::rules::{approval_winner, majority_judgment_winner, range_winner, ranking_distribution, TieMode};
use evalsim_core::special::chi2_sf;
use evalsim_core::stats;
use evalsim_core::univariate::Family;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Stream indices under the master seed, one per consumer.
const SIMULATE_STREAM: u64 = 0;
const JITTER_STREAM: u64 = 1;
const EMBED_STREAM: u64 = 2;
const REFIT_STREAM: u64 = 3;

#[derive(Parser, Debug)]
#[command(name = "evalsim", version, about = "Simulate, fit, embed and elect on evaluation profiles")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, env = "EVALSIM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for generation and per-candidate fitting. Outputs do
    /// not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a profile from a model JSON file.
    Simulate(SimulateArgs),
    /// Fit marginals, test identity and independence, and emit a model.
    Fit(FitArgs),
    /// Embed voters and candidates in a latent space.
    Embed(EmbedArgs),
    /// Run a voting rule.
    Elect(ElectArgs),
    /// Per-candidate descriptive statistics and a ranking uniformity check.
    Summary(SummaryArgs),
}

#[derive(Args, Debug)]
pub struct ProfileInput {
    /// Profile CSV (`-` for stdin).
    #[arg(long, short)]
    pub input: PathBuf,
    /// auto, continuous or discrete:K.
    #[arg(long, default_value = "auto")]
    pub scale: ScaleHint,
    /// Input has candidates in rows.
    #[arg(long)]
    pub transpose: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, short = 'n')]
    pub voters: usize,
    /// Profile CSV; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Latent positions of a spatial model. Defaults to
    /// `<out>.positions.csv`.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    /// Write candidates in rows.
    #[arg(long)]
    pub transpose: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub profile: ProfileInput,
    /// Report JSON; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Comma-separated families (uniform, trunc_normal, beta,
    /// discrete_uniform, binomial, beta_binomial).
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,
    /// Significance level of the identity and independence tests.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    /// gaussian or checkerboard:B.
    #[arg(long, default_value = "gaussian")]
    pub copula: String,
    /// Binomial p = mean/(K+1) instead of mean/K.
    #[arg(long = "paper-estimator", visible_alias = "k-plus-one-estimator")]
    pub k_plus_one_estimator: bool,
    /// Bin each candidate into G classes and write a TSV table.
    #[arg(long = "hist", value_name = "G")]
    pub hist: Option<u32>,
    /// Histogram TSV. Defaults to `<out>.hist.tsv`.
    #[arg(long)]
    pub hist_out: Option<PathBuf>,
    /// Read integer scores on {0..TOP}, add a uniform draw and divide by
    /// TOP+1 before fitting.
    #[arg(long, value_name = "TOP")]
    pub jitter: Option<u32>,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub profile: ProfileInput,
    #[arg(long, short, default_value_t = 2)]
    pub d: usize,
    /// Report JSON; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Positions CSV. Defaults to `<out>.positions.csv`.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    /// Invert a link to get dissimilarities: linear:ELL or
    /// sigmoid:LAMBDA,BETA. Without it, dissimilarity is 1 - e.
    #[arg(long)]
    pub link: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Random starts per dimension.
    #[arg(long, default_value_t = 1)]
    pub starts: usize,
    /// gaussian or mixture:K; adds a regeneration model to the report.
    #[arg(long)]
    pub refit: Option<String>,
}

#[derive(Args, Debug)]
pub struct ElectArgs {
    #[command(flatten)]
    pub profile: ProfileInput,
    /// range, mj or approval:T.
    #[arg(long)]
    pub rule: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub profile: ProfileInput,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| input(format!("cannot start {} threads: {e}", cli.threads.unwrap_or(0))))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Fit(a) => fit(a, cli.seed),
        Command::Embed(a) => embed(a, cli.seed),
        Command::Elect(a) => elect(a),
        Command::Summary(a) => summary(a),
    })
}

fn read_text(path: &Path) -> Result<String, Error> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| input(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| input(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| input(format!("stdout: {e}")))
        }
    }
}

/// `dir/name.ext` → `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn load_profile(p: &ProfileInput) -> Result<Profile, Error> {
    read_profile(&read_text(&p.input)?, p.scale, p.transpose)
        .map_err(|e| input(format!("{}: {e}", p.input.display())))
}

/// Parses and validates a model; errors name the JSON path at fault.
pub fn parse_model(text: &str) -> Result<GeneratorModel, Error> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let model: GeneratorModel = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            input(format!("model JSON: {}", e.inner()))
        } else {
            input(format!("model JSON at {path}: {}", e.inner()))
        }
    })?;
    model.validate().map_err(|e| input(format!("invalid model at {}: {}", if e.path.is_empty() { "." } else { &e.path }, e.message)))?;
    Ok(model)
}

/// Generates `n` voters, one block per task.
pub fn generate_parallel(model: &GeneratorModel, n: usize, seed: u64) -> Result<SpatialSample, Error> {
    if n == 0 {
        return Err(input("--voters must be at least 1"));
    }
    let source = derive_stream(seed, SIMULATE_STREAM);
    let generator: Generator = model.prepare(&source).map_err(|e| input(format!("invalid model at {}: {}", e.path, e.message)))?;
    let blocks = (0..Generator::block_count(n)).into_par_iter().map(|b| generator.block(&source, b, n)).collect();
    Ok(generator.assemble(n, blocks))
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<(), Error> {
    let model = parse_model(&read_text(&a.model)?).map_err(|e| match e {
        Error::Input(m) => input(format!("{}: {m}", a.model.display())),
        other => other,
    })?;
    let sample = generate_parallel(&model, a.voters, seed)?;
    write_out(a.out.as_deref(), &write_profile(&sample.profile, a.transpose))?;
    if matches!(model, GeneratorModel::Spatial(_)) {
        let target = a.positions.clone().or_else(|| a.out.as_deref().map(|o| sibling(o, "positions.csv")));
        if let Some(t) = target {
            let bytes = write_positions(&sample.voters, &sample.candidates, sample.profile.names());
            write_out(Some(&t), &bytes)?;
        }
    }
    Ok(())
}

fn parse_copula(s: &str) -> Result<DependenceChoice, Error> {
    if s == "gaussian" {
        return Ok(DependenceChoice::Gaussian);
    }
    s.strip_prefix("checkerboard:")
        .and_then(|b| b.parse::<u32>().ok())
        .filter(|&b| b >= 1)
        .map(DependenceChoice::Checkerboard)
        .ok_or_else(|| input(format!("--copula: expected gaussian or checkerboard:B with B >= 1, got {s:?}")))
}

fn fit_error(e: FitError) -> Error {
    match e {
        FitError::TooFewSamples { .. } | FitError::LengthMismatch(..) | FitError::OutOfSupport(_) | FitError::Model(_) => {
            input(e.to_string())
        }
        other => numerical(other.to_string()),
    }
}

fn fit(a: &FitArgs, seed: u64) -> Result<(), Error> {
    let mut profile_in = ProfileInput { input: a.profile.input.clone(), scale: a.profile.scale, transpose: a.profile.transpose };
    if let Some(top) = a.jitter {
        if top == 0 {
            return Err(input("--jitter needs TOP >= 1"));
        }
        profile_in.scale = ScaleHint::Fixed(Scale::Discrete { levels: top });
    }
    let mut profile = load_profile(&profile_in)?;
    if let Some(top) = a.jitter {
        let mut s = derive_stream(seed, JITTER_STREAM);
        let values = jitter_scores(profile.values(), top, &mut s);
        profile = Profile::from_flat(profile.n_voters(), profile.n_candidates(), values, Scale::Continuous, Some(profile.names().to_vec()))
            .map_err(|e| input(e.to_string()))?;
    }
    let families = match &a.families {
        None => None,
        Some(list) => Some(
            list.iter()
                .map(|f| Family::from_name(f.trim()).ok_or_else(|| input(format!("--families: unknown family {f:?}"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(input(format!("--level must be in (0, 1), got {}", a.level)));
    }
    if a.hist == Some(0) {
        return Err(input("--hist needs G >= 1"));
    }
    let hist_target = match (&a.hist, &a.hist_out, &a.out) {
        (None, _, _) => None,
        (Some(_), Some(p), _) => Some(p.clone()),
        (Some(_), None, Some(o)) => Some(sibling(o, "hist.tsv")),
        (Some(_), None, None) => return Err(input("--hist with the report on stdout needs --hist-out")),
    };
    let opts = FitOptions {
        families,
        level: a.level,
        dependence: parse_copula(&a.copula)?,
        k_plus_one_estimator: a.k_plus_one_estimator,
        histogram_classes: a.hist,
        ..FitOptions::default()
    };
    let report = fit_pipeline_with(&profile, &opts, |count, f| -> Vec<CandidateFit> {
        (0..count).into_par_iter().map(f).collect()
    })
    .map_err(fit_error)?;
    write_out(a.out.as_deref(), &to_pretty(&report::fit_report_json(&report)))?;
    if let Some(t) = hist_target {
        write_out(Some(&t), &write_histograms(&report.candidates, report.scale))?;
    }
    Ok(())
}

/// `linear:ELL` or `sigmoid:LAMBDA,BETA`.
pub fn parse_link(s: &str) -> Result<LinkFunction, Error> {
    let bad = || input(format!("--link: expected linear:ELL or sigmoid:LAMBDA,BETA, got {s:?}"));
    let link = if let Some(ell) = s.strip_prefix("linear:") {
        LinkFunction::LinearTruncated { ell: ell.parse().map_err(|_| bad())? }
    } else if let Some(rest) = s.strip_prefix("sigmoid:") {
        let (l, b) = rest.split_once(',').ok_or_else(bad)?;
        LinkFunction::Sigmoid { lambda: l.parse().map_err(|_| bad())?, beta_link: b.parse().map_err(|_| bad())? }
    } else {
        return Err(bad());
    };
    link.validate().map_err(|e| input(format!("--link: {e}")))?;
    Ok(link)
}

fn parse_refit(s: &str) -> Result<RefitFamily, Error> {
    if s == "gaussian" {
        return Ok(RefitFamily::Gaussian);
    }
    s.strip_prefix("mixture:")
        .and_then(|k| k.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .map(RefitFamily::GaussianMixture)
        .ok_or_else(|| input(format!("--refit: expected gaussian or mixture:K with K >= 1, got {s:?}")))
}

fn embedding_error(e: EmbeddingError) -> Error {
    match e {
        EmbeddingError::InvalidProblem(_) | EmbeddingError::TooFewPoints { .. } | EmbeddingError::DimensionMismatch { .. } => {
            input(e.to_string())
        }
        other => numerical(other.to_string()),
    }
}

fn embed(a: &EmbedArgs, seed: u64) -> Result<(), Error> {
    if a.d == 0 {
        return Err(input("--d must be at least 1"));
    }
    if a.max_iter == 0 || a.eps.is_nan() || a.eps <= 0.0 || a.starts == 0 {
        return Err(input("--max-iter and --starts must be >= 1 and --eps > 0"));
    }
    let link = a.link.as_deref().map(parse_link).transpose()?;
    let refit_family = a.refit.as_deref().map(parse_refit).transpose()?;
    let profile = load_profile(&a.profile)?;
    let problem = evals_to_dissimilarities(&profile, link.as_ref());
    let opts = SmacofOptions { max_iter: a.max_iter, eps: a.eps, starts: a.starts };
    let sols = smacof_nested(&problem, a.d, &opts, &derive_stream(seed, EMBED_STREAM)).map_err(embedding_error)?;
    let sol = sols.last().expect("at least one dimension");
    // the forward link whose inverse produced the dissimilarities
    let forward = link.unwrap_or(LinkFunction::LinearTruncated { ell: 1.0 });
    let refit = match refit_family {
        None => None,
        Some(fam) => {
            let r = refit_voter_distribution(&sol.voters, fam, &derive_stream(seed, REFIT_STREAM)).map_err(embedding_error)?;
            let model = GeneratorModel::Spatial(SpatialModel {
                d: a.d,
                voters: r.distribution.clone(),
                candidates: CandidatePositions::Fixed(sol.candidates.to_rows()),
                m: None,
                candidate_dist: None,
                link: forward,
                levels: profile.scale().levels(),
            });
            Some(report::refit_json(&r, &model))
        }
    };
    let dissimilarity = match &link {
        None => json!({"type": "one_minus_e"}),
        Some(l) => json!({"type": "inverse_link", "link": serde_json::to_value(l).expect("links serialize")}),
    };
    let view = report::EmbeddingView {
        solution: sol,
        by_dimension: &sols,
        dissimilarity,
        n: profile.n_voters(),
        m: profile.n_candidates(),
        refit,
    };
    write_out(a.out.as_deref(), &to_pretty(&report::embedding_json(&view)))?;
    let target = a.positions.clone().or_else(|| a.out.as_deref().map(|o| sibling(o, "positions.csv")));
    if let Some(t) = target {
        write_out(Some(&t), &write_positions(&sol.voters, &sol.candidates, profile.names()))?;
    }
    Ok(())
}

fn elect(a: &ElectArgs) -> Result<(), Error> {
    enum R {
        Range,
        Mj,
        Approval(f64),
    }
    let rule = match a.rule.as_str() {
        "range" => R::Range,
        "mj" => R::Mj,
        s => match s.strip_prefix("approval:").map(str::parse::<f64>) {
            Some(Ok(t)) if t.is_finite() => R::Approval(t),
            _ => return Err(input(format!("--rule: unknown rule {s:?}; expected range, mj or approval:T"))),
        },
    };
    let profile = load_profile(&a.profile)?;
    let result = match rule {
        R::Range => range_winner(&profile),
        R::Mj => majority_judgment_winner(&profile),
        R::Approval(t) => approval_winner(&profile, t).map_err(|e| input(e.to_string()))?,
    };
    write_out(a.out.as_deref(), &to_pretty(&report::election_json(&result, &profile)))
}

fn summary(a: &SummaryArgs) -> Result<(), Error> {
    let profile = load_profile(&a.profile)?;
    let n = profile.n_voters();
    let candidates: Vec<Value> = (0..profile.n_candidates())
        .map(|c| {
            let col = profile.column(c);
            let mut o = json!({
                "candidate": profile.names()[c],
                "mean": stats::mean(&col),
                "sd": if n > 1 { stats::variance(&col).sqrt() } else { 0.0 },
                "median": stats::lower_median(&col),
                "min": col.iter().cloned().fold(f64::INFINITY, f64::min),
                "max": col.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            });
            if let Some(k) = profile.scale().levels() {
                o["grade_counts"] = json!(evalsim_core::fitting::grade_counts(&col, k));
            }
            o
        })
        .collect();
    let rankings = match ranking_distribution(&profile, TieMode::StrictOrFail) {
        Ok(dist) => {
            let expected = n as f64 / dist.len() as f64;
            let chi2: f64 = dist.iter().map(|(_, k)| (*k as f64 - expected).powi(2) / expected).sum();
            let df = dist.len() as f64 - 1.0;
            json!({"orders": dist.len(), "chi2": chi2, "df": df, "p": if df > 0.0 { chi2_sf(chi2, df) } else { 1.0 }})
        }
        Err(e) => json!({"skipped": e.to_string()}),
    };
    let out = json!({
        "n": n,
        "m": profile.n_candidates(),
        "scale": report::scale_json(profile.scale()),
        "candidates": candidates,
        "rankings": rankings,
    });
    write_out(a.out.as_deref(), &to_pretty(&out))
}
