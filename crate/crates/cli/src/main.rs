//! `kdist`: batch analysis, verification and parameter sweeps over
//! preference profiles.
//!
//! Exit status: 0 on success, 1 on invalid input or parameters, 2 when a
//! verification fails or a lottery solve is not certified.

mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kdist::bench::{build_lb5, cyclic_suite, unblanketed_params, verify_lb5};
use kdist::certificates::{
    cert_local, cert_lottery_partition, cert_partition, cert_partition_edges, cert_post_shift,
    cert_post_shift_edges, cert_two_step, certify_against_all, CertificateReport,
};
use kdist::lottery::{solve_reverse_stable, solve_stable, Lottery, SolverConfig};
use kdist::metric::{distortion_exact, Target};
use kdist::rules::{
    copeland_weighted, pruned_double_lotteries, quasi_kernel_prune, ranked_pairs,
    simultaneous_lottery_veto, uncovered_set, unblanketed_set,
};
use kdist::scalar::{parse_rational, Rational, Scalar};
use kdist::{parse_profile, CandidateId, Error, ExactMatrix, ExactProfile};

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "kdist", version, about = "Metric distortion of tournament and k-tournament rules")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Output format (default: csv for sweep, json otherwise).
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Lottery solver tolerance (default: 1e-6 for k = 1, 1e-4 otherwise).
    #[arg(long, global = true)]
    eps: Option<f64>,

    /// Lottery solver iteration cap.
    #[arg(long, default_value_t = 100_000, global = true)]
    max_iters: usize,

    /// Seed for generated instances (recorded with every report).
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

impl Global {
    fn solver(&self, k: usize) -> SolverConfig {
        let mut cfg = SolverConfig::default_for(k);
        if let Some(eps) = self.eps {
            cfg.epsilon = eps;
        }
        cfg.max_iters = self.max_iters;
        cfg.seed = self.seed;
        cfg
    }

    fn to_json(&self) -> Value {
        json!({
            "format": self.format.map(Format::name),
            "eps": self.eps,
            "max_iters": self.max_iters,
            "seed": self.seed,
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pairwise matrix, plurality shares and (optionally) k-set shares.
    Stats(StatsArgs),
    /// Apply a voting rule.
    Run(RunArgs),
    /// Exact worst-case distortion of a candidate or lottery.
    Distortion(DistortionArgs),
    /// Stable (or reverse stable) k-lottery with its certificate.
    Lottery(LotteryArgs),
    /// Tournament-only distortion certificate.
    Certify(CertifyArgs),
    /// Check the bundled numeric artifacts.
    VerifyPaper(VerifyArgs),
    /// Evaluate a measurement over a range of one parameter (CSV by default).
    Sweep(sweep::SweepArgs),
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Profile file (text or JSON), `-` for stdin, or `lb5:N` for a bundled case.
    input: String,
    /// Also report top/bottom shares of every set of this size.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum RuleName {
    Copeland,
    Uncovered,
    RankedPairs,
    Unblanketed,
    Slv,
    Pdl,
}

#[derive(Args, Debug)]
struct RunArgs {
    input: String,
    #[arg(long, value_enum)]
    rule: RuleName,
    /// Unblanketed Set α (default 1/λ with λ³ = λ² + 1).
    #[arg(long)]
    alpha: Option<String>,
    /// Threshold β (default 2 − λ for unblanketed, 1/2 for copeland/uncovered).
    #[arg(long)]
    beta: Option<String>,
    /// Pruning threshold θ.
    #[arg(long, default_value = "0.55")]
    theta: String,
    /// Lottery size k.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Weight of the stable 1-lottery in Pruned Double Lotteries.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
}

#[derive(Args, Debug)]
struct DistortionArgs {
    input: String,
    /// Candidate label.
    #[arg(long, conflicts_with = "lottery", required_unless_present = "lottery")]
    candidate: Option<String>,
    /// Comma-separated probabilities (decimals or p/q), one per candidate.
    #[arg(long)]
    lottery: Option<String>,
}

#[derive(Args, Debug)]
struct LotteryArgs {
    input: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Solve on the reversed profile.
    #[arg(long)]
    reverse: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CertMethod {
    Partition,
    PartitionEdges,
    PostShift,
    PostShiftEdges,
    Local,
    TwoStep,
    LotteryPartition,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Profile; omit and pass `--lb5-matrix` to use the lower-bound matrix.
    input: Option<String>,
    #[arg(long, value_enum)]
    method: CertMethod,
    /// Certified candidate (label).
    #[arg(long)]
    jstar: Option<String>,
    /// Reference candidate (label); all others when omitted.
    #[arg(long)]
    istar: Option<String>,
    /// Proxy candidate for post-shift methods.
    #[arg(long)]
    kcand: Option<String>,
    /// Lottery for `lottery-partition` (comma-separated probabilities).
    #[arg(long)]
    lottery: Option<String>,
    /// Use the symbolic lower-bound matrix (edge-only methods).
    #[arg(long, conflicts_with = "input")]
    lb5_matrix: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Instance {
    Lb5,
    Cyclic,
    /// The default unblanketed-set parameters and their bound.
    #[value(name = "theorem6-params")]
    UnblanketedParams,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    instance: Instance,
    /// Candidates per profile for the cyclic suite.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Number of cyclic profiles.
    #[arg(long, default_value_t = 10)]
    trials: usize,
}

/// Failure modes mapped to exit codes.
enum Failure {
    Invalid(String),
    Unverified(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<Report, Failure>;

/// A report plus whether it certifies what was asked.
pub(crate) struct Report {
    body: Value,
    ok: bool,
    /// Preferred rows for csv/table output (sweeps).
    rows: Option<(Vec<String>, Vec<Vec<String>>)>,
}

impl Report {
    fn ok(body: Value) -> Self {
        Report { body, ok: true, rows: None }
    }

    fn checked(body: Value, ok: bool) -> Self {
        Report { body, ok, rows: None }
    }
}

/// The command-line spelling of an enum value.
pub(crate) fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map_or_else(String::new, |p| p.get_name().to_string())
}

pub(crate) fn load_profile(input: &str) -> Result<ExactProfile, Error> {
    if let Some(case) = input.strip_prefix("lb5:") {
        let j: usize = case
            .parse()
            .map_err(|_| Error::Precondition(format!("unknown bundled case {input:?}")))?;
        let inst = build_lb5()?;
        return inst
            .profiles
            .get(j)
            .cloned()
            .ok_or_else(|| Error::Precondition(format!("bundled cases are lb5:0 … lb5:4, got {input:?}")));
    }
    let text = if input == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(input)
    }
    .map_err(|e| Error::Precondition(format!("cannot read {input}: {e}")))?;
    parse_profile(&text)
}

pub(crate) fn rational_arg(name: &str, text: &str) -> Result<Rational, Error> {
    parse_rational(text).map_err(|_| Error::Precondition(format!("--{name}: not a number: {text:?}")))
}

fn probabilities(text: &str, m: usize) -> Result<Vec<Rational>, Error> {
    let probs = text
        .split(',')
        .map(|t| rational_arg("lottery", t))
        .collect::<Result<Vec<_>, _>>()?;
    if probs.len() != m {
        return Err(Error::Precondition(format!(
            "--lottery has {} entries for {m} candidates",
            probs.len()
        )));
    }
    Ok(probs)
}

fn label_json(p: &ExactProfile, c: CandidateId) -> Value {
    json!({"index": c.0, "label": p.label(c)})
}

fn stats(g: &Global, a: &StatsArgs) -> Outcome {
    let p = load_profile(&a.input)?;
    let t = p.tournament_matrix();
    let mut body = json!({
        "parameters": {"global": g.to_json(), "input": a.input, "k": a.k},
        "m": p.m(),
        "candidates": p.labels(),
        "blocks": p.blocks().len(),
        "weight_correction": p.weight_correction().render(),
        "tournament": t.rows().iter().map(|r| r.iter().map(|x| x.render()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "plurality": p.candidates().map(|c| p.plurality_share(c).render()).collect::<Vec<_>>(),
        "triple_violations": t.triple_violations().len(),
    });
    if let Some(k) = a.k {
        let s = p.summarize(k)?;
        let m = p.m();
        let mut sets = Vec::new();
        for mask in 1u64..(1 << m) {
            let set = kdist::CandidateSet::from_bits(mask);
            if set.len() > k || set.len() < 2 {
                continue;
            }
            let top: Vec<String> = set.iter().map(|c| s.top_share(set, c).map_or("-".into(), |x| x.render())).collect();
            let bottom: Vec<String> = set
                .iter()
                .map(|c| s.bottom_share(set, c).map_or("-".into(), |x| x.render()))
                .collect();
            sets.push(json!({
                "set": set.iter().map(|c| p.label(c)).collect::<Vec<_>>(),
                "top": top,
                "bottom": bottom,
            }));
        }
        body["k_sets"] = Value::Array(sets);
    }
    Ok(Report::ok(body))
}

/// Resolved rule parameters (defaults filled in).
pub(crate) struct RuleParams {
    pub alpha: Rational,
    pub beta: Rational,
    pub theta: Rational,
    pub k: usize,
    pub mu: f64,
}

impl RuleParams {
    pub(crate) fn to_json(&self, rule: RuleName) -> Value {
        let mut v = json!({"rule": format!("{rule:?}").to_lowercase()});
        match rule {
            RuleName::Copeland | RuleName::Uncovered => v["beta"] = json!(self.beta.render()),
            RuleName::RankedPairs => {}
            RuleName::Unblanketed => {
                v["alpha"] = json!(self.alpha.render());
                v["beta"] = json!(self.beta.render());
            }
            RuleName::Slv => {
                v["k"] = json!(self.k);
                v["theta"] = json!(self.theta.render());
            }
            RuleName::Pdl => {
                v["k"] = json!(self.k);
                v["theta"] = json!(self.theta.render());
                v["mu"] = json!(self.mu);
            }
        }
        v
    }
}

pub(crate) fn resolve_rule_params(
    rule: RuleName,
    alpha: Option<&str>,
    beta: Option<&str>,
    theta: &str,
    k: usize,
    mu: f64,
) -> Result<RuleParams, Error> {
    let defaults = unblanketed_params()?;
    let alpha = match alpha {
        Some(a) => rational_arg("alpha", a)?,
        None => defaults.alpha,
    };
    let beta = match beta {
        Some(b) => rational_arg("beta", b)?,
        None if rule == RuleName::Unblanketed => defaults.beta,
        None => Rational::new(1.into(), 2.into()),
    };
    Ok(RuleParams {
        alpha,
        beta,
        theta: rational_arg("theta", theta)?,
        k,
        mu,
    })
}

/// Runs a rule; the boolean is false when a lottery solve was not certified.
pub(crate) fn apply_rule(p: &ExactProfile, rule: RuleName, rp: &RuleParams, g: &Global) -> Result<(Value, bool), Error> {
    Ok(match rule {
        RuleName::Copeland => {
            let w = copeland_weighted(p, &rp.beta)?;
            (json!({"winner": label_json(p, w)}), true)
        }
        RuleName::Uncovered => {
            let set = uncovered_set(p, &rp.beta)?;
            let w = set.first().ok_or_else(|| Error::Internal("uncovered set is empty".into()))?;
            (
                json!({"winner": label_json(p, w), "set": set.iter().map(|c| p.label(c)).collect::<Vec<_>>()}),
                true,
            )
        }
        RuleName::RankedPairs => {
            let w = ranked_pairs(p)?;
            (json!({"winner": label_json(p, w)}), true)
        }
        RuleName::Unblanketed => {
            let (w, set) = unblanketed_set(p, &rp.alpha, &rp.beta)?;
            (
                json!({"winner": label_json(p, w), "set": set.iter().map(|c| p.label(c)).collect::<Vec<_>>()}),
                true,
            )
        }
        RuleName::Slv => {
            let (w, trace) = simultaneous_lottery_veto(p, rp.k, &rp.theta, &g.solver(rp.k))?;
            (json!({"winner": label_json(p, w), "trace": trace.to_json()}), trace.certified)
        }
        RuleName::Pdl => {
            let d = pruned_double_lotteries(p, rp.k, rp.mu, &rp.theta, &g.solver(rp.k))?;
            (json!({"lottery": d.lottery.probs(), "trace": d.to_json()}), d.certified())
        }
    })
}

fn run(g: &Global, a: &RunArgs) -> Outcome {
    let p = load_profile(&a.input)?;
    let rp = resolve_rule_params(a.rule, a.alpha.as_deref(), a.beta.as_deref(), &a.theta, a.k, a.mu)?;
    let (mut body, certified) = apply_rule(&p, a.rule, &rp, g)?;
    body["parameters"] = json!({
        "global": g.to_json(),
        "input": a.input,
        "rule": rp.to_json(a.rule),
        "solver": g.solver(rp.k).to_json(),
    });
    body["certified"] = json!(certified);
    Ok(Report::checked(body, certified))
}

fn distortion(g: &Global, a: &DistortionArgs) -> Outcome {
    let p = load_profile(&a.input)?;
    let target = match (&a.candidate, &a.lottery) {
        (Some(c), _) => Target::Candidate(p.candidate(c)?),
        (None, Some(l)) => Target::Lottery(probabilities(l, p.m())?),
        (None, None) => return Err(Failure::Invalid("pass --candidate or --lottery".into())),
    };
    let report = distortion_exact(&p, &target)?;
    let mut body = report.to_json();
    body["parameters"] = json!({
        "global": g.to_json(),
        "input": a.input,
        "candidate": a.candidate,
        "lottery": a.lottery,
    });
    Ok(Report::ok(body))
}

fn lottery(g: &Global, a: &LotteryArgs) -> Outcome {
    let p = load_profile(&a.input)?;
    let cfg = g.solver(a.k);
    let (d, cert) = if a.reverse {
        solve_reverse_stable(&p, a.k, &cfg)?
    } else {
        solve_stable(&p, a.k, &cfg)?
    };
    let body = json!({
        "parameters": {"global": g.to_json(), "input": a.input, "k": a.k, "reverse": a.reverse, "solver": cfg.to_json()},
        "probs": d.probs(),
        "worst_response": label_json(&p, cert.worst_response),
        "worst_value": cert.worst_value,
        "target_value": cert.target_value,
        "certified": cert.certified,
        "iterations": cert.iterations,
    });
    Ok(Report::checked(body, cert.certified))
}

fn certify(g: &Global, a: &CertifyArgs) -> Outcome {
    let (profile, matrix): (Option<ExactProfile>, ExactMatrix) = if a.lb5_matrix {
        (None, build_lb5()?.matrix)
    } else {
        let input = a
            .input
            .as_deref()
            .ok_or_else(|| Failure::Invalid("pass a profile or --lb5-matrix".into()))?;
        let p = load_profile(input)?;
        let t = p.tournament_matrix();
        (Some(p), t)
    };
    let m = matrix.m();
    let pick = |name: &str, label: &Option<String>| -> Result<Option<CandidateId>, Error> {
        label
            .as_ref()
            .map(|l| match &profile {
                Some(p) => p.candidate(l),
                None => l
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i < m)
                    .map(CandidateId)
                    .ok_or_else(|| Error::Precondition(format!("--{name}: unknown candidate {l:?}"))),
            })
            .transpose()
    };
    let jstar = pick("jstar", &a.jstar)?;
    let istar = pick("istar", &a.istar)?;
    let kcand = pick("kcand", &a.kcand)?;
    let needs_profile = matches!(a.method, CertMethod::Partition | CertMethod::PostShift | CertMethod::LotteryPartition);
    if needs_profile && profile.is_none() {
        return Err(Failure::Invalid(format!(
            "method {} needs a profile; the matrix supports edge-only methods",
            value_name(a.method)
        )));
    }
    let lottery = match (&a.lottery, a.method) {
        (Some(l), CertMethod::LotteryPartition) => Some(Lottery::new(probabilities(l, m)?)?),
        (None, CertMethod::LotteryPartition) => {
            return Err(Failure::Invalid("lottery-partition requires --lottery".into()))
        }
        _ => None,
    };
    let one = |i: CandidateId| -> Result<CertificateReport<Rational>, Error> {
        let j = jstar.ok_or_else(|| Error::Precondition("--jstar is required".into()))?;
        let need_k = || kcand.ok_or_else(|| Error::Precondition("post-shift methods require --kcand".into()));
        match a.method {
            CertMethod::Partition => cert_partition(profile.as_ref().expect("checked"), j, i),
            CertMethod::PartitionEdges => cert_partition_edges(&matrix, j, i),
            CertMethod::PostShift => cert_post_shift(profile.as_ref().expect("checked"), j, i, need_k()?),
            CertMethod::PostShiftEdges => cert_post_shift_edges(&matrix, j, i, need_k()?),
            CertMethod::Local => cert_local(&matrix, j, i),
            CertMethod::TwoStep => cert_two_step(&matrix, j, i),
            CertMethod::LotteryPartition => {
                cert_lottery_partition(profile.as_ref().expect("checked"), lottery.as_ref().expect("checked"), i)
            }
        }
    };
    let report = match (istar, a.method) {
        (Some(i), _) => one(i)?,
        (None, CertMethod::LotteryPartition) => {
            let mut worst: Option<CertificateReport<Rational>> = None;
            for i in (0..m).map(CandidateId) {
                let r = one(i)?;
                if worst.as_ref().map_or(true, |w| w.bound.to_f64() < r.bound.to_f64()) {
                    worst = Some(r);
                }
            }
            worst.ok_or_else(|| Failure::Invalid("no candidates".into()))?
        }
        (None, _) => {
            let j = jstar.ok_or_else(|| Failure::Invalid("--jstar is required".into()))?;
            certify_against_all(m, j, one)?.ok_or_else(|| Failure::Invalid("needs at least two candidates".into()))?
        }
    };
    let mut body = report.to_json();
    body["parameters"] = json!({
        "global": g.to_json(),
        "input": a.input,
        "lb5_matrix": a.lb5_matrix,
        "method": value_name(a.method),
        "jstar": a.jstar,
        "istar": a.istar,
        "kcand": a.kcand,
        "lottery": a.lottery,
    });
    Ok(Report::ok(body))
}

fn verify(g: &Global, a: &VerifyArgs) -> Outcome {
    let params = json!({"global": g.to_json(), "instance": value_name(a.instance), "m": a.m, "trials": a.trials});
    let (mut body, ok) = match a.instance {
        Instance::Lb5 => {
            let r = verify_lb5()?;
            (r.to_json(), r.passed())
        }
        Instance::Cyclic => {
            let r = cyclic_suite(a.m, a.trials, g.seed)?;
            (r.to_json(), r.passed)
        }
        Instance::UnblanketedParams => {
            let p = unblanketed_params()?;
            let ok = (p.alpha.to_f64_lossy() - 0.68233).abs() < 1e-5 && (p.beta.to_f64_lossy() - 0.53443).abs() < 1e-5;
            let mut v = p.to_json();
            v["passed"] = json!(ok);
            (v, ok)
        }
    };
    body["parameters"] = params;
    if ok {
        Ok(Report::ok(body))
    } else {
        Err(Failure::Unverified(body))
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Stats(a) => stats(g, a),
        Command::Run(a) => run(g, a),
        Command::Distortion(a) => distortion(g, a),
        Command::Lottery(a) => lottery(g, a),
        Command::Certify(a) => certify(g, a),
        Command::VerifyPaper(a) => verify(g, a),
        Command::Sweep(a) => sweep::sweep(g, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (report, code) = match dispatch(&cli) {
        Ok(r) => {
            let code = if r.ok { 0 } else { 2 };
            (r, code)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(Failure::Unverified(body)) => (Report::checked(body, false), 2),
    };
    let format = match (&cli.command, cli.global.format) {
        (_, Some(f)) => f,
        (Command::Sweep(_), None) => Format::Csv,
        (_, None) => Format::Json,
    };
    let text = output::render(&report, format);
    match &cli.global.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
