//! Command-line front end: parse function literals, run norm evaluations,
//! constructions and verification suites, and emit JSON/CSV reports with
//! reproducible seeds.
//!
//! Exit codes: 0 all checks passed, 1 a certificate failed, 2 usage or
//! parse error, 3 numeric error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use orlicz_lab::construction::{assemble_ah, construction_to_json, AssembleOptions};
use orlicz_lab::error::Error;
use orlicz_lab::geometry::bm_distance_symmetric;
use orlicz_lab::grid::GridSpec;
use orlicz_lab::kalton::equivalence_report_to_json;
use orlicz_lab::literal::{parse_literal, parse_phi_literal};
use orlicz_lab::musielak::{FiniteVector, MusielakSection};
use orlicz_lab::num::parse_ratio;
use orlicz_lab::report::Report;
use orlicz_lab::suites::{run_suite, SuiteConfig};

#[derive(Parser)]
#[command(name = "orlicz-lab", version, about = "Orlicz sequence-space numerics")]
struct Cli {
    /// Config file with key=value lines; flags override config entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized sweep.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: json or csv (where a table is natural).
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an Orlicz function literal at points.
    Eval(EvalArgs),
    /// Luxemburg norm of a vector in a section.
    Norm(NormArgs),
    /// Dilation-index estimation and the containment report.
    Indices(IndicesArgs),
    /// Run the block construction pipeline end to end.
    Construct(ConstructArgs),
    /// Banach-Mazur distance tables over a dimension range.
    Bm(BmArgs),
    /// Twisted-sum operations.
    #[command(subcommand)]
    Kp(KpCommand),
    /// Named verification suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Function literal, e.g. power:p=2 or powerlog:alpha=1.
    #[arg(long)]
    func: Option<String>,
    /// Comma-separated evaluation points.
    #[arg(long)]
    t: Option<String>,
}

#[derive(Args)]
struct NormArgs {
    /// Section function literal.
    #[arg(long)]
    space: Option<String>,
    /// Comma-separated coordinates.
    #[arg(long)]
    vec: Option<String>,
    /// CSV file with one coordinate per line (alternative to --vec).
    #[arg(long)]
    vec_file: Option<PathBuf>,
}

#[derive(Args)]
struct IndicesArgs {
    #[arg(long)]
    func: Option<String>,
}

#[derive(Args)]
struct ConstructArgs {
    /// Base function literal.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated nondecreasing distance targets (one per level).
    #[arg(long)]
    targets: Option<String>,
    /// Dimension cap for the multiplicity searches.
    #[arg(long)]
    ncap: Option<u64>,
    /// ln-scale cap override (for searches beyond materializable sizes).
    #[arg(long)]
    ncap_ln: Option<f64>,
}

#[derive(Args)]
struct BmArgs {
    #[arg(long)]
    space: Option<String>,
    /// Dimension range lo..hi (inclusive), swept geometrically.
    #[arg(long)]
    n_range: Option<String>,
}

#[derive(Subcommand)]
enum KpCommand {
    /// Quasinorm of a pair (f, g).
    Quasinorm(KpQuasinormArgs),
    /// Mollify phi and synthesize the equivalent Orlicz function.
    Synthesize(KpPhiArgs),
    /// Equivalence spread between the w_n basis and the synthesized norm.
    Equivalence(KpEquivalenceArgs),
}

#[derive(Args)]
struct KpQuasinormArgs {
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    g: Option<String>,
}

#[derive(Args)]
struct KpPhiArgs {
    #[arg(long)]
    phi: Option<String>,
}

#[derive(Args)]
struct KpEquivalenceArgs {
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: lemma41, lemma42, claim33, lemma32, prop54, ineq53, lemma55.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// key=value config lines; later flags override these.
fn load_config(path: &Option<PathBuf>) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e.to_string()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(Error::parse(lineno, format!("expected key=value, got {line:?}")));
            };
            out.insert(line[..eq].trim().to_string(), line[eq + 1..].trim().to_string());
        }
    }
    Ok(out)
}

fn conf_get<T: std::str::FromStr>(conf: &BTreeMap<String, String>, key: &str) -> Option<T> {
    conf.get(key).and_then(|v| v.parse().ok())
}

fn parse_vec(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(0, format!("bad number {p:?}")))
        })
        .collect()
}

fn evaluation_cert(name: &str, value: f64) -> orlicz_lab::cert::Certificate {
    let mut c = orlicz_lab::cert::Certificate::new(name);
    c.constant("value", value);
    c.observe(0.0, 0.0, String::new);
    c.finish()
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| Error::Io(e.to_string())),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn emit_report(report: &Report, out: &Option<PathBuf>) -> Result<bool, Error> {
    write_output(out, &report.to_json())?;
    Ok(report.pass)
}

fn run(cli: Cli) -> Result<bool, Error> {
    let conf = load_config(&cli.config)?;
    let seed = cli.seed.or_else(|| conf_get(&conf, "seed")).unwrap_or(42);
    let started = std::time::Instant::now();
    match cli.command {
        Command::Eval(args) => {
            let lit = args
                .func
                .or_else(|| conf.get("func").cloned())
                .ok_or_else(|| Error::Argument("eval needs --func".into()))?;
            let points = args
                .t
                .or_else(|| conf.get("t").cloned())
                .ok_or_else(|| Error::Argument("eval needs --t".into()))?;
            let m = parse_literal(&lit)?;
            let ts = parse_vec(&points)?;
            let values: Result<Vec<f64>, Error> = ts.iter().map(|&t| m.eval(t)).collect();
            let values = values?;
            for v in &values {
                println!("{v:.12e}");
            }
            let mut report = Report::new("eval", seed, json!({ "func": lit, "t": ts }));
            report.results = json!({ "values": values });
            report.certificates.push(evaluation_cert("evaluation", values[0]));
            emit_report(&report.finish(started), &cli.out)
        }
        Command::Norm(args) => {
            let lit = args
                .space
                .or_else(|| conf.get("space").cloned())
                .ok_or_else(|| Error::Argument("norm needs --space".into()))?;
            let coords = match (args.vec, args.vec_file) {
                (Some(v), _) => parse_vec(&v)?,
                (None, Some(path)) => {
                    let text =
                        std::fs::read_to_string(&path).map_err(|e| Error::Io(e.to_string()))?;
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(|l| {
                            l.parse::<f64>()
                                .map_err(|_| Error::parse(0, format!("bad coordinate {l:?}")))
                        })
                        .collect::<Result<Vec<f64>, Error>>()?
                }
                (None, None) => {
                    let v = conf
                        .get("vec")
                        .cloned()
                        .ok_or_else(|| Error::Argument("norm needs --vec or --vec-file".into()))?;
                    parse_vec(&v)?
                }
            };
            let m = parse_literal(&lit)?;
            let section = MusielakSection::uniform(m, coords.len() as u64);
            let x = FiniteVector::new(coords.clone())?;
            let value = section.lux_norm(&x)?;
            println!("{value:.12}");
            let mut report = Report::new("norm", seed, json!({ "space": lit, "vec": coords }));
            report.results = json!({ "norm": value });
            report.certificates.push(evaluation_cert("norm-evaluation", value));
            emit_report(&report.finish(started), &cli.out)
        }
        Command::Indices(args) => {
            let lit = args
                .func
                .or_else(|| conf.get("func").cloned())
                .ok_or_else(|| Error::Argument("indices needs --func".into()))?;
            let m = parse_literal(&lit)?;
            let est = orlicz_lab::indices::estimate_indices(&m, &GridSpec::indices_default())?;
            let rep = orlicz_lab::indices::containment_report(&est);
            let mut report = Report::new("indices", seed, json!({ "func": lit }));
            report.results = json!({
                "alpha": [est.alpha_lo, est.alpha_hi],
                "beta": [est.beta_lo, est.beta_hi],
                "containment": { "p_lo": rep.p_lo, "p_hi": rep.p_hi,
                                  "near_hilbert_candidate": rep.near_hilbert_candidate },
            });
            let mut c = orlicz_lab::cert::Certificate::new("index-estimate");
            c.constant("alpha", format!("[{:.4}, {:.4}]", est.alpha_lo, est.alpha_hi));
            c.constant("beta", format!("[{:.4}, {:.4}]", est.beta_lo, est.beta_hi));
            c.observe(0.0, 0.0, String::new);
            report.certificates.push(c.finish());
            emit_report(&report.finish(started), &cli.out)
        }
        Command::Construct(args) => {
            let lit = args
                .family
                .or_else(|| conf.get("family").cloned())
                .ok_or_else(|| Error::Argument("construct needs --family".into()))?;
            let targets = args
                .targets
                .or_else(|| conf.get("targets").cloned())
                .ok_or_else(|| Error::Argument("construct needs --targets".into()))?;
            let targets = parse_vec(&targets)?;
            let m = parse_literal(&lit)?;
            let mut opts = AssembleOptions {
                seed,
                ..Default::default()
            };
            if let Some(cap) = args.ncap.or_else(|| conf_get(&conf, "ncap")) {
                opts.ln_n_cap = (cap as f64).ln();
            }
            if let Some(cap_ln) = args.ncap_ln.or_else(|| conf_get(&conf, "ncap_ln")) {
                opts.ln_n_cap = cap_ln;
            }
            let c = assemble_ah(&m, targets.len() as u32, &targets, opts)?;
            let mut report = Report::new(
                "construct",
                seed,
                json!({ "family": lit, "targets": targets, "ln_n_cap": opts.ln_n_cap }),
            );
            report.results = construction_to_json(&c);
            for l in &c.levels {
                report.certificates.extend(l.certificates.clone());
            }
            emit_report(&report.finish(started), &cli.out)
        }
        Command::Bm(args) => {
            let lit = args
                .space
                .or_else(|| conf.get("space").cloned())
                .ok_or_else(|| Error::Argument("bm needs --space".into()))?;
            let range = args
                .n_range
                .or_else(|| conf.get("n_range").cloned())
                .unwrap_or_else(|| "2..16".into());
            let (lo, hi) = range
                .split_once("..")
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .ok_or_else(|| Error::parse(0, format!("bad n-range {range:?}")))?;
            if lo < 1 || hi < lo {
                return Err(Error::Argument(format!("bad n-range {lo}..{hi}")));
            }
            let m = parse_literal(&lit)?;
            let mut ns = vec![];
            let mut n = lo;
            while n <= hi {
                ns.push(n);
                n = (n * 2).max(n + 1);
            }
            if *ns.last().unwrap() != hi {
                ns.push(hi);
            }
            let section = MusielakSection::uniform(m, hi as u64);
            let mut rows = Vec::new();
            for &n in &ns {
                let est = bm_distance_symmetric(&section, n, seed)?;
                rows.push((n, est));
            }
            let format = cli
                .format
                .clone()
                .or_else(|| conf.get("format").cloned())
                .unwrap_or_else(|| "json".into());
            if format == "csv" {
                let mut csv = String::from("n,lower,upper,method\n");
                for (n, est) in &rows {
                    csv.push_str(&format!(
                        "{n},{:.9},{:.9},{}\n",
                        est.lower, est.upper, est.method_lower
                    ));
                }
                write_output(&cli.out, &csv)?;
                return Ok(true);
            }
            let mut report = Report::new("bm", seed, json!({ "space": lit, "n_range": range }));
            let mut monotone = orlicz_lab::cert::Certificate::new("distance-monotone-in-n");
            let mut prev = 0.0;
            for (n, est) in &rows {
                monotone.observe(est.lower - prev + 1e-9, 0.0, || format!("n = {n}"));
                prev = est.lower;
            }
            report.results = json!({
                "table": rows
                    .iter()
                    .map(|(n, e)| json!({ "n": n, "lower": e.lower, "upper": e.upper,
                                            "method": e.method_lower.to_string() }))
                    .collect::<Vec<_>>(),
            });
            report.certificates.push(monotone.finish());
            emit_report(&report.finish(started), &cli.out)
        }
        Command::Kp(kp) => run_kp(kp, &conf, seed, started, &cli.out),
        Command::Verify(args) => {
            let suite = args
                .suite
                .clone()
                .or_else(|| conf.get("suite").cloned())
                .ok_or_else(|| Error::Argument("verify needs --suite".into()))?;
            let cfg = build_suite_config(&args, &conf, seed)?;
            let report = run_suite(&suite, &cfg)?;
            emit_report(&report, &cli.out)
        }
    }
}

fn build_suite_config(
    args: &VerifyArgs,
    conf: &BTreeMap<String, String>,
    seed: u64,
) -> Result<SuiteConfig, Error> {
    let mut cfg = SuiteConfig {
        seed,
        ..Default::default()
    };
    let family_lit = args.family.clone().or_else(|| conf.get("family").cloned());
    if let Some(lit) = &family_lit {
        cfg.family = Some(parse_literal(lit)?);
        cfg.family_literal = lit.clone();
    }
    let phi_lit = args.phi.clone().or_else(|| conf.get("phi").cloned());
    if let Some(lit) = &phi_lit {
        cfg.phi = Some(parse_phi_literal(lit)?);
        cfg.phi_literal = lit.clone();
    }
    if let Some(v) = args.eps.or_else(|| conf_get(conf, "eps")) {
        cfg.eps = v;
    }
    if let Some(v) = args.nu.or_else(|| conf_get(conf, "nu")) {
        cfg.nu = v;
    }
    if let Some(v) = args.tau.clone().or_else(|| conf.get("tau").cloned()) {
        cfg.tau = Some(parse_ratio(&v)?);
    }
    if let Some(v) = args.eta.or_else(|| conf_get(conf, "eta")) {
        cfg.eta = v;
    }
    if let Some(v) = args.kappa.clone().or_else(|| conf.get("kappa").cloned()) {
        cfg.kappa = Some(parse_ratio(&v)?);
    }
    if let Some(v) = args.dim.or_else(|| conf_get(conf, "dim")) {
        cfg.dim = v;
    }
    if let Some(v) = args.n.or_else(|| conf_get(conf, "n")) {
        cfg.n = v;
    }
    if let Some(v) = args.samples.or_else(|| conf_get(conf, "samples")) {
        cfg.samples = v;
    }
    if let Some(v) = args.trials.or_else(|| conf_get(conf, "trials")) {
        cfg.trials = v;
    }
    Ok(cfg)
}

fn run_kp(
    kp: KpCommand,
    conf: &BTreeMap<String, String>,
    seed: u64,
    started: std::time::Instant,
    out: &Option<PathBuf>,
) -> Result<bool, Error> {
    match kp {
        KpCommand::Quasinorm(args) => {
            let phi_lit = args
                .phi
                .or_else(|| conf.get("phi").cloned())
                .unwrap_or_else(|| "identity".into());
            let phi = parse_phi_literal(&phi_lit)?;
            let f = parse_vec(
                &args
                    .f
                    .or_else(|| conf.get("f").cloned())
                    .ok_or_else(|| Error::Argument("kp quasinorm needs --f".into()))?,
            )?;
            let g = parse_vec(
                &args
                    .g
                    .or_else(|| conf.get("g").cloned())
                    .ok_or_else(|| Error::Argument("kp quasinorm needs --g".into()))?,
            )?;
            let value = orlicz_lab::suites::quasinorm_value(&phi, &f, &g)?;
            println!("{value:.12}");
            let mut report = Report::new(
                "kp-quasinorm",
                seed,
                json!({ "phi": phi_lit, "f": f, "g": g }),
            );
            report.results = json!({ "quasinorm": value });
            report
                .certificates
                .push(evaluation_cert("quasinorm-evaluation", value));
            emit_report(&report.finish(started), out)
        }
        KpCommand::Synthesize(args) => {
            let phi_lit = args
                .phi
                .or_else(|| conf.get("phi").cloned())
                .unwrap_or_else(|| "identity".into());
            let phi = parse_phi_literal(&phi_lit)?;
            let moll = orlicz_lab::mollify::mollify_default(&phi)?;
            let syn = orlicz_lab::mollify::synthesize_orlicz(&moll)?;
            let mut report = Report::new("kp-synthesize", seed, json!({ "phi": phi_lit }));
            report.results = json!({
                "A": moll.a_sup,
                "b": moll.b_inf,
                "K": moll.k_const,
                "c": syn.c_lower,
                "C": syn.c_upper,
                "shift": syn.shift,
                "synthesized": orlicz_lab::literal::to_value(&syn.m),
            });
            report.certificates.push(syn.certificate.clone());
            emit_report(&report.finish(started), out)
        }
        KpCommand::Equivalence(args) => {
            let phi_lit = args
                .phi
                .or_else(|| conf.get("phi").cloned())
                .unwrap_or_else(|| "identity".into());
            let phi = parse_phi_literal(&phi_lit)?;
            let dim = args.dim.or_else(|| conf_get(conf, "dim")).unwrap_or(128);
            let trials = args
                .trials
                .or_else(|| conf_get(conf, "trials"))
                .unwrap_or(1000);
            let moll = orlicz_lab::mollify::mollify_default(&phi)?;
            let syn = orlicz_lab::mollify::synthesize_orlicz(&moll)?;
            let rep = orlicz_lab::kalton::equivalence_report(&phi, &syn.m, trials, dim, seed)?;
            let mut report = Report::new(
                "kp-equivalence",
                seed,
                json!({ "phi": phi_lit, "dim": dim, "trials": trials }),
            );
            report.results = equivalence_report_to_json(&rep);
            let mut c = orlicz_lab::cert::Certificate::new("equivalence-spread");
            c.constant("spread", rep.spread);
            c.constant("ratio_min", rep.ratio_min);
            c.constant("ratio_max", rep.ratio_max);
            c.observe(
                if rep.spread.is_finite() { 0.0 } else { -1.0 },
                0.0,
                || "spread diverged".to_string(),
            );
            report.certificates.push(c.finish());
            emit_report(&report.finish(started), out)
        }
    }
}
