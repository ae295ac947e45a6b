//! One-parameter sweeps. Exactly one of the parameter flags carries a range,
//! written `start:stop:step` (inclusive, exact rationals) or as a
//! comma-separated list; every other flag is a single value.

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use kdist::lottery::solve_stable;
use kdist::metric::{distortion_exact, Target};
use kdist::scalar::{rational_from_f64, Rational, Scalar};
use kdist::{Error, ExactProfile};

use crate::{apply_rule, load_profile, quasi_kernel_prune, rational_arg, resolve_rule_params, value_name, Failure, Global, Outcome, Report, RuleName};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum Measure {
    /// Size and members of the quasi-kernel at θ.
    Kernel,
    /// Stable k-lottery certificate values.
    Lottery,
    Copeland,
    Uncovered,
    RankedPairs,
    Unblanketed,
    Slv,
    Pdl,
}

impl Measure {
    fn rule(self) -> Option<RuleName> {
        match self {
            Measure::Kernel | Measure::Lottery => None,
            Measure::Copeland => Some(RuleName::Copeland),
            Measure::Uncovered => Some(RuleName::Uncovered),
            Measure::RankedPairs => Some(RuleName::RankedPairs),
            Measure::Unblanketed => Some(RuleName::Unblanketed),
            Measure::Slv => Some(RuleName::Slv),
            Measure::Pdl => Some(RuleName::Pdl),
        }
    }
}

#[derive(Args, Debug)]
pub(crate) struct SweepArgs {
    input: String,
    #[arg(long, value_enum)]
    measure: Measure,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long, default_value = "0.55")]
    theta: String,
    #[arg(long, default_value = "2")]
    k: String,
    #[arg(long, default_value = "0.5")]
    mu: String,
}

fn is_range(text: &str) -> bool {
    text.contains(':') || text.contains(',')
}

/// The values of a ranged flag, in order.
fn expand(name: &str, text: &str) -> Result<Vec<String>, Error> {
    let values: Vec<String> = if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| Error::Precondition(format!("--{name}: a range is start:stop:step")))?;
        let (start, stop, step) = (rational_arg(name, start)?, rational_arg(name, stop)?, rational_arg(name, step)?);
        if !step.is_pos() {
            return Err(Error::Precondition(format!("--{name}: range step must be positive")));
        }
        let mut out = Vec::new();
        let mut x = start;
        while x <= stop {
            out.push(x.render());
            x += step.clone();
        }
        out
    } else {
        text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
    };
    if values.is_empty() {
        return Err(Error::Precondition(format!("--{name}: empty range {text:?}")));
    }
    Ok(values)
}

/// Resolved flag values for one row.
struct Point {
    alpha: Option<String>,
    beta: Option<String>,
    theta: String,
    k: String,
    mu: String,
}

fn parse_k(text: &str) -> Result<usize, Error> {
    text.trim()
        .parse()
        .map_err(|_| Error::Precondition(format!("--k: not a positive integer: {text:?}")))
}

fn parse_mu(text: &str) -> Result<f64, Error> {
    rational_arg("mu", text).map(|r| r.to_f64_lossy())
}

fn distortion_text(p: &ExactProfile, target: &Target<Rational>) -> Result<String, Error> {
    Ok(distortion_exact(p, target)?.value.render())
}

fn evaluate(g: &Global, p: &ExactProfile, measure: Measure, pt: &Point) -> Result<Vec<String>, Error> {
    match measure {
        Measure::Kernel => {
            let theta = rational_arg("theta", &pt.theta)?;
            let kernel = quasi_kernel_prune(p, &theta)?;
            let names: Vec<&str> = kernel.iter().map(|c| p.label(c)).collect();
            Ok(vec![kernel.len().to_string(), names.join(" ")])
        }
        Measure::Lottery => {
            let k = parse_k(&pt.k)?;
            let (d, cert) = solve_stable(p, k, &g.solver(k))?;
            Ok(vec![
                kdist::scalar::float_string(cert.worst_value),
                kdist::scalar::float_string(cert.target_value),
                cert.certified.to_string(),
                d.probs().iter().map(|x| kdist::scalar::float_string(*x)).collect::<Vec<_>>().join(" "),
            ])
        }
        _ => {
            let rule = measure.rule().expect("rule measure");
            let rp = resolve_rule_params(
                rule,
                pt.alpha.as_deref(),
                pt.beta.as_deref(),
                &pt.theta,
                parse_k(&pt.k)?,
                parse_mu(&pt.mu)?,
            )?;
            let (out, certified) = apply_rule(p, rule, &rp, g)?;
            let (selected, target) = match out.get("lottery") {
                Some(Value::Array(probs)) => {
                    let probs = probs
                        .iter()
                        .map(|x| rational_from_f64(x.as_f64().unwrap_or(f64::NAN)))
                        .collect::<Result<Vec<_>, _>>()?;
                    let sum = probs.iter().fold(Rational::from_integer(0.into()), |a, x| a + x);
                    let probs: Vec<Rational> = probs.into_iter().map(|x| x / sum.clone()).collect();
                    let text = probs.iter().map(|x| x.to_f64_lossy()).map(kdist::scalar::float_string).collect::<Vec<_>>().join(" ");
                    (text, Target::Lottery(probs))
                }
                _ => {
                    let idx = out["winner"]["index"].as_u64().unwrap_or(0) as usize;
                    (p.label(kdist::CandidateId(idx)).to_string(), Target::Candidate(kdist::CandidateId(idx)))
                }
            };
            Ok(vec![selected, distortion_text(p, &target)?, certified.to_string()])
        }
    }
}

fn output_columns(measure: Measure) -> Vec<&'static str> {
    match measure {
        Measure::Kernel => vec!["kernel_size", "kernel"],
        Measure::Lottery => vec!["worst_value", "target_value", "certified", "probs"],
        _ => vec!["selected", "distortion", "certified"],
    }
}

fn input_columns(measure: Measure) -> Vec<&'static str> {
    match measure {
        Measure::Kernel => vec!["theta"],
        Measure::Lottery => vec!["k"],
        Measure::Copeland | Measure::Uncovered => vec!["beta"],
        Measure::RankedPairs => vec![],
        Measure::Unblanketed => vec!["alpha", "beta"],
        Measure::Slv => vec!["k", "theta"],
        Measure::Pdl => vec!["k", "theta", "mu"],
    }
}

pub(crate) fn sweep(g: &Global, a: &SweepArgs) -> Outcome {
    let p = load_profile(&a.input)?;
    let flags: [(&str, Option<&str>); 5] = [
        ("alpha", a.alpha.as_deref()),
        ("beta", a.beta.as_deref()),
        ("theta", Some(a.theta.as_str())),
        ("k", Some(a.k.as_str())),
        ("mu", Some(a.mu.as_str())),
    ];
    let ranged: Vec<(&str, &str)> = flags
        .iter()
        .filter_map(|(n, v)| v.filter(|v| is_range(v)).map(|v| (*n, v)))
        .collect();
    let (name, range) = match ranged.as_slice() {
        [one] => *one,
        [] => return Err(Failure::Invalid("sweep needs exactly one ranged flag, got none".into())),
        many => {
            let names: Vec<String> = many.iter().map(|(n, _)| format!("--{n}")).collect();
            return Err(Failure::Invalid(format!(
                "sweep needs exactly one ranged flag, got {}",
                names.join(", ")
            )));
        }
    };
    let values = expand(name, range)?;
    let points: Vec<Point> = values
        .iter()
        .map(|v| {
            let pick = |n: &str, current: Option<&str>| if n == name { Some(v.clone()) } else { current.map(String::from) };
            Point {
                alpha: pick("alpha", a.alpha.as_deref()),
                beta: pick("beta", a.beta.as_deref()),
                theta: pick("theta", Some(&a.theta)).expect("has default"),
                k: pick("k", Some(&a.k)).expect("has default"),
                mu: pick("mu", Some(&a.mu)).expect("has default"),
            }
        })
        .collect();

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(points.len());
    let results: Vec<Result<Vec<String>, Error>> = std::thread::scope(|scope| {
        let chunk = points.len().div_ceil(workers);
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|pts| scope.spawn(|| pts.iter().map(|pt| evaluate(g, &p, a.measure, pt)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap_or_else(|_| vec![Err(Error::Internal("sweep worker panicked".into()))]))
            .collect()
    });

    let mut header: Vec<String> = vec![name.to_string()];
    header.extend(input_columns(a.measure).into_iter().filter(|c| *c != name).map(String::from));
    header.extend(output_columns(a.measure).into_iter().map(String::from));
    let mut rows = Vec::new();
    let mut all_certified = true;
    for (pt, r) in points.iter().zip(results) {
        let outputs = r?;
        // lottery and rule rows both carry `certified` in the third output column
        if a.measure != Measure::Kernel {
            all_certified &= outputs[2] == "true";
        }
        let value_of = |c: &str| -> String {
            match c {
                "alpha" => pt.alpha.clone().unwrap_or_else(|| "default".into()),
                "beta" => pt.beta.clone().unwrap_or_else(|| "default".into()),
                "theta" => pt.theta.clone(),
                "k" => pt.k.clone(),
                _ => pt.mu.clone(),
            }
        };
        let mut row: Vec<String> = vec![value_of(name)];
        row.extend(input_columns(a.measure).into_iter().filter(|c| *c != name).map(value_of));
        row.extend(outputs);
        rows.push(row);
    }
    let body = json!({
        "parameters": {
            "global": g.to_json(),
            "input": a.input,
            "measure": value_name(a.measure),
            "ranged": name,
            "alpha": a.alpha, "beta": a.beta, "theta": a.theta, "k": a.k, "mu": a.mu,
        },
        "columns": header,
        "rows": rows,
    });
    Ok(Report {
        body,
        ok: all_certified,
        rows: Some((header, rows)),
    })
}
