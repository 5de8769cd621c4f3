//! Command-line front end. Reports are JSON (CSV for `bench`); exit code 0
//! on success, 1 when a binding runtime check fails, 2 on usage or I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::ToPrimitive;
use serde::Serialize;

use crate::action_space::{self, ActionSpace};
use crate::config::{Budget, ConstantOverrides, Constants, Mode};
use crate::error::{Error, Result};
use crate::instance_gen::{dilute, make_xt, perturb, random, torus};
use crate::oracle;
use crate::presentation::{build_e, build_presentation, commutator_equations, AbelianPresentation, EquationSet, PresentationSpec, Word};
use crate::rational::{fmt_ratio, parse_big_rational, Rational};
use crate::report::{any_violation, Check};
use crate::testing_harness::{amplified_test, estimate_rejection, polynomial_delta};
use crate::tiling_engine::{repair, repair_via_quotient, Engine};

#[derive(Parser, Debug)]
#[command(name = "permstab", version, about = "Defect measurement, testing and exact repair of permutation tuples")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Equations {
    /// Commutators of all signed generator pairs plus torsion relators.
    Full,
    /// One commutator per unordered pair plus torsion relators.
    Commutators,
}

#[derive(Args, Debug, Clone)]
pub struct PresentationArgs {
    /// Free rank d; defaults to the instance file's presentation, else m.
    #[arg(long)]
    pub d: Option<usize>,
    /// Torsion orders β_{d+1} ≤ … ≤ β_m.
    #[arg(long, value_delimiter = ',')]
    pub betas: Vec<u64>,
    #[arg(long, value_enum, default_value = "full")]
    pub equations: Equations,
}

#[derive(Args, Debug, Clone)]
pub struct ConstantArgs {
    #[arg(long, default_value = "certified", value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long = "scale-cd")]
    pub scale_cd: Option<String>,
    #[arg(long = "scale-cbox")]
    pub scale_cbox: Option<String>,
    #[arg(long = "scale-h")]
    pub scale_h: Option<String>,
    #[arg(long = "scale-te")]
    pub scale_te: Option<String>,
    #[arg(long = "budget-points", default_value_t = Budget::default().points)]
    pub budget_points: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    Xt,
    Torus,
    Random,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Local defect L_E with per-word violation counts.
    Defect {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        pres: PresentationArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Tiling repair to an exact solution.
    Stabilize {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        pres: PresentationArgs,
        #[command(flatten)]
        consts: ConstantArgs,
        /// Upper bound on |X \ X_E|/n; defaults to max(that ratio, 1/n).
        #[arg(long)]
        delta: Option<String>,
        /// Where to write the repaired instance.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Where to write the JSON report (stdout when absent).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Restrict an exact solution to the orbits on which extra words act trivially.
    Quotient {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        pres: PresentationArgs,
        /// Extra relator, e.g. "e1^4"; repeatable.
        #[arg(long = "word", required = true)]
        words: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Canonical tester statistics, or one amplified run.
    Test {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        pres: PresentationArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        amplified: bool,
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        /// Degree D in δ(ε) = min(1, ε^D).
        #[arg(long, default_value_t = 1)]
        degree: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate an instance file.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        sides: Vec<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dilution "p/q": p copies plus (q−p)·n fixed points.
        #[arg(long)]
        dilute: Option<String>,
        /// Number of random transposition edits.
        #[arg(long)]
        perturb: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Brute-force oracles for tiny instances.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
    /// Repair sweep over a family, as CSV.
    Bench {
        #[arg(long, value_enum, default_value = "xt")]
        family: Family,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long = "t-values", value_delimiter = ',', default_value = "4,8,16,32")]
        t_values: Vec<usize>,
        #[arg(long)]
        perturb: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        consts: ConstantArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Exact global defect G_E.
    G {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        pres: PresentationArgs,
        #[arg(long, default_value_t = 1 << 22)]
        budget: u64,
    },
    /// Exact d_S between two instances.
    Ds {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        other: PathBuf,
    },
    /// Exact interference set η_t(A) for the engine's tiles.
    Eta {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        pres: PresentationArgs,
        #[command(flatten)]
        consts: ConstantArgs,
        #[arg(long)]
        t: i64,
        #[arg(long, value_delimiter = ',')]
        set: Vec<usize>,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli.command) {
        Ok(violation) => i32::from(violation),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{json}")?;
        }
    }
    Ok(())
}

struct Loaded {
    x: ActionSpace,
    p: AbelianPresentation,
    e: EquationSet,
    file_overrides: Option<ConstantOverrides>,
}

fn load(path: &Path, args: &PresentationArgs) -> Result<Loaded> {
    let (x, spec) = action_space::load(path)?;
    let (d, betas) = match (args.d, &spec) {
        (Some(d), _) => (d, args.betas.clone()),
        (None, Some(s)) if args.betas.is_empty() => (s.d, s.betas.clone()),
        (None, _) => (x.m() - args.betas.len(), args.betas.clone()),
    };
    let p = build_presentation(x.m(), d, &betas)?;
    let e = match args.equations {
        Equations::Full => build_e(&p),
        Equations::Commutators => commutator_equations(&p),
    };
    let file_overrides = spec.and_then(|s| s.constant_scale);
    Ok(Loaded { x, p, e, file_overrides })
}

fn constants(p: &AbelianPresentation, args: &ConstantArgs, file: Option<&ConstantOverrides>) -> Result<Constants> {
    let parse = |s: &Option<String>| s.as_deref().map(parse_big_rational).transpose();
    let cli = ConstantOverrides {
        c_d: parse(&args.scale_cd)?,
        t_e: parse(&args.scale_te)?,
        c_box: parse(&args.scale_cbox)?,
        h: parse(&args.scale_h)?,
    };
    match args.mode {
        Mode::Certified => Constants::for_mode(p, Mode::Certified, &cli),
        Mode::Scaled => Constants::scaled(p, &file.cloned().unwrap_or_default().merged(&cli)),
    }
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Defect { instance, pres, output } => {
            let l = load(&instance, &pres)?;
            let report = l.x.local_defect(&l.e)?;
            #[derive(Serialize)]
            struct Out {
                equations: usize,
                #[serde(flatten)]
                report: action_space::DefectReport,
            }
            emit(&Out { equations: l.e.len(), report }, output.as_deref())?;
            Ok(false)
        }
        Command::Stabilize { instance, pres, consts, delta, output, report } => {
            let l = load(&instance, &pres)?;
            let c = constants(&l.p, &consts, l.file_overrides.as_ref())?;
            let delta = delta.as_deref().map(parse_big_rational).transpose()?;
            let r = repair(&l.x, &l.p, &l.e, &c, delta, consts.budget_points)?;
            if let Some(out) = &output {
                action_space::store(&r.psi, Some(PresentationSpec::of(&l.p)), out)?;
            }
            let violation = any_violation(&r.report.checks);
            emit(&Tagged { command: "stabilize", body: r.report }, report.as_deref())?;
            Ok(violation)
        }
        Command::Quotient { instance, pres, words, output, report } => {
            let l = load(&instance, &pres)?;
            let e2 = EquationSet::custom(words.iter().map(|w| Word::parse(w)).collect::<Result<Vec<_>>>()?)?;
            let (psi, rep) = repair_via_quotient(&l.x, &l.e, &e2)?;
            if let Some(out) = &output {
                action_space::store(&psi, None, out)?;
            }
            let violation = any_violation(&rep.checks);
            emit(&Tagged { command: "quotient", body: rep }, report.as_deref())?;
            Ok(violation)
        }
        Command::Test { instance, pres, trials, seed, amplified, epsilon, degree, output } => {
            let l = load(&instance, &pres)?;
            if amplified {
                let eps = parse_big_rational(&epsilon)?;
                let out = amplified_test(&l.x, &l.e, &eps, |e| polynomial_delta(e, degree), seed)?;
                emit(&out, output.as_deref())?;
            } else {
                let stats = estimate_rejection(&l.x, &l.e, trials, seed)?;
                emit(&stats, output.as_deref())?;
            }
            Ok(false)
        }
        Command::Gen { family, d, t, sides, n, m, seed, dilute: dil, perturb: k, output } => {
            let need = |v: Option<usize>, name: &str| v.ok_or_else(|| Error::Argument(format!("--{name} is required")));
            let (mut x, pres) = match family {
                Family::Xt => {
                    let d = need(d, "d")?;
                    (make_xt(d, need(t, "t")?)?, Some(PresentationSpec::of(&build_presentation(d, d, &[])?)))
                }
                Family::Torus => {
                    let x = torus(&sides)?;
                    (x, Some(PresentationSpec::of(&build_presentation(sides.len(), sides.len(), &[])?)))
                }
                Family::Random => (random(need(n, "n")?, need(m, "m")?, seed)?, None),
            };
            if let Some(pq) = dil {
                let (p, q) = pq
                    .split_once('/')
                    .and_then(|(p, q)| Some((p.trim().parse().ok()?, q.trim().parse().ok()?)))
                    .ok_or_else(|| Error::Argument(format!("bad dilution {pq:?}, expected p/q")))?;
                x = dilute(&x, p, q)?;
            }
            if let Some(k) = k {
                x = perturb(&x, k, seed)?;
            }
            action_space::store(&x, pres, &output)?;
            Ok(false)
        }
        Command::Oracle { which } => run_oracle(which),
        Command::Bench { family, d, t_values, perturb: k, seed, consts, output } => {
            let rows = bench(family, d, &t_values, k, seed, &consts)?;
            let sink: Box<dyn Write> = match &output {
                Some(p) => Box::new(std::fs::File::create(p)?),
                None => Box::new(std::io::stdout()),
            };
            let mut w = csv::Writer::from_writer(sink);
            for r in &rows {
                w.serialize(r).map_err(|e| Error::Argument(e.to_string()))?;
            }
            w.flush()?;
            Ok(false)
        }
    }
}

fn run_oracle(which: OracleCommand) -> Result<bool> {
    match which {
        OracleCommand::G { instance, pres, budget } => {
            let l = load(&instance, &pres)?;
            let g = oracle::oracle_g(&l.x, &l.e, budget)?;
            let lower = l.x.local_defect(&l.e)?.local_defect / Rational::from_integer(l.e.total_length() as i64);
            let check = Check::new("oracle_g.local_defect_lower_bound", g >= lower, true);
            emit(&serde_json::json!({ "global_defect": fmt_ratio(&g), "checks": [check] }), None)?;
            Ok(!check.holds)
        }
        OracleCommand::Ds { instance, other } => {
            let (x, _) = action_space::load(&instance)?;
            let (y, _) = action_space::load(&other)?;
            emit(&serde_json::json!({ "d_s": fmt_ratio(&oracle::oracle_ds(&x, &y)?) }), None)?;
            Ok(false)
        }
        OracleCommand::Eta { instance, pres, consts, t, set } => {
            let l = load(&instance, &pres)?;
            let c = constants(&l.p, &consts, l.file_overrides.as_ref())?;
            let mut a = vec![false; l.x.n()];
            for q in set {
                *a.get_mut(q).ok_or_else(|| Error::Argument(format!("point {q} out of range")))? = true;
            }
            let mut engine = Engine::new(&l.x, &l.p, &l.e, &c, consts.budget_points)?;
            let exact = oracle::oracle_eta(&mut engine, &a, t)?;
            let sup = engine.eta_superset(&a, t)?;
            let inside = exact.iter().zip(&sup).all(|(e, s)| !e || *s);
            let pts: Vec<usize> = (0..exact.len()).filter(|&q| exact[q]).collect();
            let check = Check::new("oracle_eta.inside_superset", inside, true);
            emit(&serde_json::json!({ "eta": pts, "superset_size": sup.iter().filter(|&&b| b).count(), "checks": [check] }), None)?;
            Ok(!inside)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub t: usize,
    pub distance: String,
    pub distance_f64: f64,
    pub baseline: String,
    pub eq_ratio: f64,
    pub tiles: usize,
    pub wall_ms: f64,
}

fn bench(family: Family, d: usize, ts: &[usize], k: Option<usize>, seed: u64, consts: &ConstantArgs) -> Result<Vec<BenchRow>> {
    let p = build_presentation(d, d, &[])?;
    let e = build_e(&p);
    let c = constants(&p, consts, None)?;
    let mut rows = Vec::new();
    for &t in ts {
        let base = match family {
            Family::Xt => make_xt(d, t)?,
            Family::Torus => torus(&vec![t; d])?,
            Family::Random => return Err(Error::Argument("bench supports the xt and torus families".into())),
        };
        let x = match k {
            Some(k) => perturb(&base, k, seed)?,
            None => base,
        };
        let start = Instant::now();
        let r = repair(&x, &p, &e, &c, None, consts.budget_points)?;
        let wall_ms = (start.elapsed().as_secs_f64() * 1e3).max(1e-6);
        rows.push(BenchRow {
            family: format!("{family:?}").to_lowercase(),
            n: x.n(),
            t,
            distance: fmt_ratio(&r.report.distance),
            distance_f64: r.report.distance.to_f64().unwrap_or(f64::NAN),
            baseline: fmt_ratio(&r.report.baseline_distance),
            eq_ratio: r.report.eq_total as f64 / x.n() as f64,
            tiles: r.report.tiles,
            wall_ms,
        });
    }
    Ok(rows)
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
