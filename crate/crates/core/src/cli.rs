//! Command-line front end: argument and config-file parsing, validation,
//! dispatch and report rendering.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_ap, check_bergman_primary, check_bergman_secondary, check_carleson_box, check_h1_average, check_lp_hp,
    ConditionReport,
};
use crate::error::{Error, Result};
use crate::functions::RadialGridFunction;
use crate::kernels::{bergman_kernel, g_kernel, k_kernel};
use crate::operators::{apply_h_point, test_function_fa};
use crate::protocol::Schedule;
use crate::report::RatioReport;
use crate::suite::{run_suite, SuiteConfig, SuiteReport, CRITERIA};
use crate::verify::{
    inclusion_chain, polynomial_corpus, probe_h1, probe_hinfty_bloch, probe_lp, ratio_scan_m1, ratio_scan_mq_g,
    ratio_scan_radial_kernel, restriction_check, weighted_restriction_check, BoundCheck, ProbeReport,
    BLOCH_PROBE_DEPTH, CIRCLE_RATIO_DEPTH, CORPUS_COEFFS, CORPUS_SEED, CORPUS_SIZE, H1_PROBE_DEPTH, LP_PROBE_DEPTH,
    RATIO_DEPTH,
};
use crate::weights::{classify_dcheck, classify_dhat, classify_m, ClassReport, RadialWeight, DEFAULT_K_CANDIDATES};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "HOMEGA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "homega", version, about = "Hilbert-type operators induced by radial weights")]
pub struct Cli {
    /// Key-value (TOML) file with any of the options below; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Weight `family:param[,param]`, e.g. `standard:0.5`.
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// Second weight for the Bergman-space conditions.
    #[arg(long, global = true)]
    pub nu: Option<String>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Relative tolerance of kernel and operator evaluations.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Deepest level `k` of the grid `1 - 2^-k`.
    #[arg(long = "grid-depth", global = true)]
    pub grid_depth: Option<usize>,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Membership of the weights in D-hat, D-check and M.
    Classify,
    /// Evaluate a kernel at `(t, z)`.
    Kernel(KernelArgs),
    /// Apply the operator to a radial test function at `z`.
    Apply(ApplyArgs),
    /// Scan one of the boundedness conditions.
    Check(CheckArgs),
    /// Run a ratio scan, a growth probe or a corpus check.
    Verify(VerifyArgs),
    /// Run the acceptance matrix; fails with exit status 1.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub t: Option<f64>,
    /// Real part of `z`.
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long = "z-im")]
    pub z_im: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<KernelName>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ApplyArgs {
    /// Test function: `one`, `t`, `t2` or `fa:A`.
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long = "z-im")]
    pub z_im: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub condition: Option<ConditionName>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub scan: Option<ScanName>,
    /// Seed of the polynomial corpus.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SuiteArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run only these criteria, e.g. `--only 1,2,3`.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Classify,
    Kernel,
    Apply,
    Check,
    Verify,
    Suite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelName {
    /// The averaged kernel `K^w_t(z)`.
    #[default]
    K,
    /// The reproducing kernel `B^w_t(z)`.
    Bergman,
    /// `G^w_t(z)`, the derivative of `K^w_t` in `z`.
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionName {
    LpHp,
    BergmanPrimary,
    BergmanSecondary,
    #[value(alias = "h1-average")]
    #[serde(alias = "h1-average")]
    H1,
    #[value(alias = "carleson-box")]
    #[serde(alias = "carleson-box")]
    Carleson,
    Ap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanName {
    Radial,
    M1,
    MqG,
    Bloch,
    H1,
    Lp,
    Restriction,
    WeightedRestriction,
    Inclusion,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Contents of a `--config` file. Lists of weights, second weights and
/// exponents run as a matrix.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<CommandName>,
    weight: Option<OneOrMany<String>>,
    nu: Option<OneOrMany<String>>,
    p: Option<OneOrMany<f64>>,
    q: Option<f64>,
    tol: Option<f64>,
    grid_depth: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    threads: Option<usize>,
    t: Option<f64>,
    z: Option<f64>,
    z_im: Option<f64>,
    kind: Option<KernelName>,
    function: Option<String>,
    condition: Option<ConditionName>,
    scan: Option<ScanName>,
    seed: Option<u64>,
    only: Option<Vec<usize>>,
}

/// A fully resolved and validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandName,
    pub weights: Vec<RadialWeight>,
    pub nus: Vec<RadialWeight>,
    pub ps: Vec<f64>,
    pub q: Option<f64>,
    pub tol: f64,
    pub grid_depth: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub t: f64,
    pub z: Complex64,
    pub kind: KernelName,
    pub function: String,
    pub condition: Option<ConditionName>,
    pub scan: Option<ScanName>,
    pub seed: u64,
    pub only: Vec<usize>,
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn parse_weights(specs: Vec<String>) -> Result<Vec<RadialWeight>> {
    specs.iter().map(|s| RadialWeight::parse(s)).collect()
}

impl RunConfig {
    /// Merge flags over the config file, then check every precondition of
    /// the command before anything is computed.
    pub fn resolve(cli: Cli) -> Result<Self> {
        let file: FileConfig = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let (command, kernel, apply, check, verify, suite) = match cli.command {
            Some(Command::Classify) => (Some(CommandName::Classify), None, None, None, None, None),
            Some(Command::Kernel(a)) => (Some(CommandName::Kernel), Some(a), None, None, None, None),
            Some(Command::Apply(a)) => (Some(CommandName::Apply), None, Some(a), None, None, None),
            Some(Command::Check(a)) => (Some(CommandName::Check), None, None, Some(a), None, None),
            Some(Command::Verify(a)) => (Some(CommandName::Verify), None, None, None, Some(a), None),
            Some(Command::Suite(a)) => (Some(CommandName::Suite), None, None, None, None, Some(a)),
            None => (None, None, None, None, None, None),
        };
        let command = pick(command, file.command).ok_or_else(|| Error::config("no command given"))?;
        let (kernel, apply) = (kernel.unwrap_or_default(), apply.unwrap_or_default());
        let (check, verify, suite) = (check.unwrap_or_default(), verify.unwrap_or_default(), suite.unwrap_or_default());

        let weights = match cli.weight {
            Some(w) => vec![w],
            None => file.weight.map(OneOrMany::into_vec).unwrap_or_default(),
        };
        let nus = match cli.nu {
            Some(w) => vec![w],
            None => file.nu.map(OneOrMany::into_vec).unwrap_or_default(),
        };
        let ps = match cli.p {
            Some(p) => vec![p],
            None => file.p.map(OneOrMany::into_vec).unwrap_or_default(),
        };
        let z_re = pick(kernel.z.or(apply.z), file.z);
        let z_im = pick(kernel.z_im.or(apply.z_im), file.z_im).unwrap_or(0.0);
        let config = RunConfig {
            command,
            weights: parse_weights(weights)?,
            nus: parse_weights(nus)?,
            ps,
            q: pick(cli.q, file.q),
            tol: pick(cli.tol, file.tol).unwrap_or(1e-12),
            grid_depth: pick(cli.grid_depth, file.grid_depth),
            out: pick(cli.out, file.out),
            format: pick(cli.format, file.format).unwrap_or_default(),
            threads: pick(cli.threads, file.threads),
            t: pick(kernel.t, file.t).unwrap_or(f64::NAN),
            z: Complex64::new(z_re.unwrap_or(f64::NAN), z_im),
            kind: pick(kernel.kind, file.kind).unwrap_or_default(),
            function: pick(apply.function, file.function).unwrap_or_else(|| "one".into()),
            condition: pick(check.condition, file.condition),
            scan: pick(verify.scan, file.scan),
            seed: pick(verify.seed.or(suite.seed), file.seed).unwrap_or(CORPUS_SEED),
            only: pick(suite.only, file.only).unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let need_weight = || {
            if self.weights.is_empty() {
                Err(Error::config("this command needs --weight"))
            } else {
                Ok(())
            }
        };
        let need_nu = || {
            if self.nus.is_empty() {
                Err(Error::config("this command needs --nu"))
            } else {
                Ok(())
            }
        };
        let need_p = |lo: f64, what: &str| {
            if self.ps.is_empty() {
                return Err(Error::config(format!("{what} needs --p")));
            }
            match self.ps.iter().find(|&&p| !(p > lo && p.is_finite())) {
                Some(p) => Err(Error::config(format!("{what} needs p > {lo}, got {p}"))),
                None => Ok(()),
            }
        };
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::config(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        if let Some(d) = self.grid_depth {
            if d < Schedule::MIN_DEPTH {
                return Err(Error::config(format!("--grid-depth must be at least {}, got {d}", Schedule::MIN_DEPTH)));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::config("--threads must be positive"));
        }
        match self.command {
            CommandName::Classify => need_weight(),
            CommandName::Kernel => {
                need_weight()?;
                if !(0.0..1.0).contains(&self.t) {
                    return Err(Error::config(format!("kernel needs --t in [0, 1), got {}", self.t)));
                }
                self.need_disc_point()
            }
            CommandName::Apply => {
                need_weight()?;
                parse_test_function(&self.function)?;
                self.need_disc_point()
            }
            CommandName::Check => {
                need_weight()?;
                let condition = self.condition.ok_or_else(|| Error::config("check needs --condition"))?;
                match condition {
                    ConditionName::LpHp => need_p(1.0, "lp-hp"),
                    ConditionName::BergmanPrimary | ConditionName::BergmanSecondary | ConditionName::Ap => {
                        need_nu()?;
                        need_p(1.0, "the Bergman conditions")
                    }
                    ConditionName::H1 | ConditionName::Carleson => Ok(()),
                }
            }
            CommandName::Verify => {
                let scan = self.scan.ok_or_else(|| Error::config("verify needs --scan"))?;
                match scan {
                    ScanName::Radial | ScanName::M1 | ScanName::Bloch | ScanName::H1 => need_weight(),
                    ScanName::MqG => {
                        need_weight()?;
                        match self.q {
                            Some(q) if !(q > 0.0 && q.is_finite()) => Err(Error::config(format!("mq-g needs q > 0, got {q}"))),
                            _ => Ok(()),
                        }
                    }
                    ScanName::Lp => {
                        need_weight()?;
                        need_p(1.0, "the L^p probe")
                    }
                    ScanName::Restriction | ScanName::Inclusion => need_p(0.0, "corpus checks"),
                    ScanName::WeightedRestriction => {
                        need_nu()?;
                        need_p(0.0, "corpus checks")
                    }
                }
            }
            CommandName::Suite => match self.only.iter().find(|&&c| !(1..=CRITERIA).contains(&c)) {
                Some(c) => Err(Error::config(format!("no criterion {c}; criteria are 1..={CRITERIA}"))),
                None => Ok(()),
            },
        }
    }

    fn need_disc_point(&self) -> Result<()> {
        if self.z.re.is_nan() {
            return Err(Error::config("this command needs --z"));
        }
        if !(self.z.norm() < 1.0) {
            return Err(Error::config(format!("|z| must be below 1, got {}", self.z.norm())));
        }
        Ok(())
    }

    fn schedule(&self, default: usize) -> Schedule {
        Schedule::new(self.grid_depth.unwrap_or(default))
    }

    fn default_schedule(&self) -> Schedule {
        self.grid_depth.map(Schedule::new).unwrap_or_default()
    }
}

fn parse_test_function(spec: &str) -> Result<RadialGridFunction> {
    match spec {
        "one" | "1" => RadialGridFunction::from_real(vec![0.0], vec![1.0]),
        "t" => Ok(RadialGridFunction::sample_real(30, 32, |at| at.t)),
        "t2" | "t^2" => Ok(RadialGridFunction::sample_real(30, 32, |at| at.t * at.t)),
        other => match other.strip_prefix("fa:") {
            Some(a) => {
                let a: f64 = a.trim().parse().map_err(|_| Error::config(format!("bad parameter in `{other}`")))?;
                test_function_fa(a).map_err(|e| Error::config(e.to_string()))
            }
            None => Err(Error::config(format!("unknown test function `{other}`; use one, t, t2 or fa:A"))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub weight: String,
    pub dhat: ClassReport,
    pub dcheck: ClassReport,
    pub m: ClassReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub weight: String,
    pub quantity: String,
    pub t: Option<f64>,
    pub z_re: f64,
    pub z_im: f64,
    pub value_re: f64,
    pub value_im: f64,
}

/// Everything a run can produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Report {
    Class(Box<ClassRow>),
    Point(PointValue),
    Condition(ConditionReport),
    Ratio(RatioReport),
    Probe(ProbeReport),
    Bound(BoundCheck),
    Suite(SuiteReport),
}

/// Run the computation and collect its reports.
pub fn run(config: &RunConfig) -> Result<Vec<Report>> {
    let mut reports = Vec::new();
    match config.command {
        CommandName::Classify => {
            let s = config.default_schedule();
            for w in &config.weights {
                reports.push(Report::Class(Box::new(ClassRow {
                    weight: w.id(),
                    dhat: classify_dhat(w, s)?,
                    dcheck: classify_dcheck(w, s, &DEFAULT_K_CANDIDATES)?,
                    m: classify_m(w, s, &DEFAULT_K_CANDIDATES)?,
                })));
            }
        }
        CommandName::Kernel => {
            for w in &config.weights {
                let value = match config.kind {
                    KernelName::K => k_kernel(w, config.t, config.z, config.tol)?,
                    KernelName::Bergman => bergman_kernel(w, config.t, config.z, config.tol)?,
                    KernelName::G => g_kernel(w, config.t, config.z, config.tol)?,
                };
                reports.push(point(w, &format!("{:?}", config.kind).to_lowercase(), Some(config.t), config.z, value));
            }
        }
        CommandName::Apply => {
            let f = parse_test_function(&config.function)?;
            for w in &config.weights {
                let value = apply_h_point(w, &f, config.z, config.tol)?;
                reports.push(point(w, &format!("H({})", config.function), None, config.z, value));
            }
        }
        CommandName::Check => run_check(config, &mut reports)?,
        CommandName::Verify => run_verify(config, &mut reports)?,
        CommandName::Suite => {
            reports.push(Report::Suite(run_suite(&SuiteConfig { seed: config.seed, only: config.only.clone() })));
        }
    }
    Ok(reports)
}

fn point(w: &RadialWeight, quantity: &str, t: Option<f64>, z: Complex64, value: Complex64) -> Report {
    Report::Point(PointValue {
        weight: w.id(),
        quantity: quantity.into(),
        t,
        z_re: z.re,
        z_im: z.im,
        value_re: value.re,
        value_im: value.im,
    })
}

fn run_check(config: &RunConfig, reports: &mut Vec<Report>) -> Result<()> {
    let s = config.default_schedule();
    let condition = config.condition.expect("validated");
    for w in &config.weights {
        match condition {
            ConditionName::H1 => reports.push(Report::Condition(check_h1_average(w, s)?)),
            ConditionName::Carleson => reports.push(Report::Condition(check_carleson_box(w, s)?)),
            ConditionName::LpHp => {
                for &p in &config.ps {
                    reports.push(Report::Condition(check_lp_hp(w, p, s)?));
                }
            }
            ConditionName::BergmanPrimary | ConditionName::BergmanSecondary | ConditionName::Ap => {
                for nu in &config.nus {
                    for &p in &config.ps {
                        let r = match condition {
                            ConditionName::BergmanPrimary => check_bergman_primary(w, nu, p, s)?,
                            ConditionName::BergmanSecondary => check_bergman_secondary(w, nu, p, s)?,
                            _ => check_ap(w, nu, p, s)?,
                        };
                        reports.push(Report::Condition(r));
                    }
                }
            }
        }
    }
    Ok(())
}

fn run_verify(config: &RunConfig, reports: &mut Vec<Report>) -> Result<()> {
    let scan = config.scan.expect("validated");
    match scan {
        ScanName::Restriction | ScanName::WeightedRestriction | ScanName::Inclusion => {
            let corpus = polynomial_corpus(CORPUS_SIZE, CORPUS_COEFFS, config.seed)?;
            for &p in &config.ps {
                match scan {
                    ScanName::Restriction => reports.push(Report::Bound(restriction_check(&corpus, p)?)),
                    ScanName::WeightedRestriction => {
                        for nu in &config.nus {
                            let (a, b) = weighted_restriction_check(&corpus, p, nu)?;
                            reports.extend([Report::Bound(a), Report::Bound(b)]);
                        }
                    }
                    _ => {
                        let (a, b) = inclusion_chain(&corpus, p)?;
                        reports.extend([Report::Ratio(a), Report::Ratio(b)]);
                    }
                }
            }
            return Ok(());
        }
        _ => {}
    }
    for w in &config.weights {
        match scan {
            ScanName::Radial => reports.push(Report::Ratio(ratio_scan_radial_kernel(w, config.schedule(RATIO_DEPTH))?)),
            ScanName::M1 => reports.push(Report::Ratio(ratio_scan_m1(w, config.schedule(CIRCLE_RATIO_DEPTH))?)),
            ScanName::MqG => {
                let qs = config.q.map_or(vec![1.0, 2.0], |q| vec![q]);
                for q in qs {
                    let (a, b) = ratio_scan_mq_g(w, q, config.schedule(CIRCLE_RATIO_DEPTH))?;
                    reports.extend([Report::Ratio(a), Report::Ratio(b)]);
                }
            }
            ScanName::Bloch => reports.push(Report::Probe(probe_hinfty_bloch(w, config.schedule(BLOCH_PROBE_DEPTH))?)),
            ScanName::H1 => reports.push(Report::Probe(probe_h1(w, config.schedule(H1_PROBE_DEPTH))?)),
            ScanName::Lp => {
                for &p in &config.ps {
                    reports.push(Report::Probe(probe_lp(w, p, config.schedule(LP_PROBE_DEPTH))?));
                }
            }
            _ => unreachable!("corpus scans handled above"),
        }
    }
    Ok(())
}

/// Render reports in the requested format.
pub fn render(reports: &[Report], format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let text = match reports {
                [one] => serde_json::to_string_pretty(one),
                many => serde_json::to_string_pretty(many),
            };
            text.map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Io(e.to_string()))
        }
        Format::Csv => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&render_csv(r)?);
            }
            Ok(out)
        }
        Format::Table => Ok(reports.iter().map(render_table).collect::<Vec<_>>().join("\n")),
    }
}

fn render_csv(report: &Report) -> Result<String> {
    let (comment, rows): (String, Vec<(String, f64)>) = match report {
        Report::Class(c) => (
            format!("classification {} (D-hat samples: grid point r, doubling ratio)", c.weight),
            c.dhat.samples.iter().map(|(x, v)| (x.to_string(), *v)).collect(),
        ),
        Report::Point(p) => (
            format!("{} of {}", p.quantity, p.weight),
            vec![(format!("t={};z={}{:+}i", p.t.map_or("-".into(), |t| t.to_string()), p.z_re, p.z_im), p.value_re)],
        ),
        Report::Condition(c) => (
            format!("condition {} weight {} (grid point 1 - r)", c.condition_id, c.params.weight),
            c.sup_trace.iter().map(|t| (t.one_minus_r.to_string(), t.value)).collect(),
        ),
        Report::Ratio(r) => (
            format!("ratio {} / {} over {}", r.lhs_id, r.rhs_id, r.grid),
            r.samples
                .iter()
                .map(|s| (s.point.iter().map(f64::to_string).collect::<Vec<_>>().join(";"), s.ln_ratio.exp()))
                .collect(),
        ),
        Report::Probe(p) => (
            format!("probe {} {} -> {} on {} weight {}", p.operator, p.source_norm, p.target_norm, p.test_family, p.weight),
            p.trace.iter().map(|(x, v)| (x.to_string(), *v)).collect(),
        ),
        Report::Bound(b) => (
            format!("{} p = {} bound {}", b.property, b.p, b.bound),
            b.ratios.iter().enumerate().map(|(i, v)| (i.to_string(), *v)).collect(),
        ),
        Report::Suite(s) => (
            format!("suite seed {}", s.seed),
            s.criteria.iter().map(|c| (c.id.to_string(), if c.passed() { 1.0 } else { 0.0 })).collect(),
        ),
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(["grid_point", "value"]).map_err(io)?;
    for (point, value) in rows {
        writer.write_record([point, value.to_string()]).map_err(io)?;
    }
    let body = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(format!("# {comment}\n{}", String::from_utf8_lossy(&body)))
}

fn render_table(report: &Report) -> String {
    let mut s = String::new();
    match report {
        Report::Class(c) => {
            let _ = writeln!(s, "{:<18} {:<7} {:<13} {:>14}  method", "weight", "class", "verdict", "witness ratio");
            for r in [&c.dhat, &c.dcheck, &c.m] {
                let _ = writeln!(
                    s,
                    "{:<18} {:<7} {:<13} {:>14.6}  {}",
                    c.weight,
                    format!("{:?}", r.class_tested),
                    format!("{:?}", r.verdict),
                    r.witness_ratio,
                    r.method
                );
            }
        }
        Report::Point(p) => {
            let t = p.t.map_or(String::new(), |t| format!(" t = {t}"));
            let _ = writeln!(
                s,
                "{} {}{t} z = {}{:+}i: {:.12}{:+.12}i",
                p.weight, p.quantity, p.z_re, p.z_im, p.value_re, p.value_im
            );
        }
        Report::Condition(c) => {
            let nu = c.params.nu.as_ref().map_or(String::new(), |n| format!(" nu {n}"));
            let p = c.params.p.map_or(String::new(), |p| format!(" p {p}"));
            let trace = if c.sup_trace.is_empty() {
                String::new()
            } else {
                format!("sup {:.6}, slope {:.4}, ", c.sup(), c.slope_estimate)
            };
            let _ = writeln!(
                s,
                "{} weight {}{nu}{p}: {:?} ({trace}depth {})",
                c.condition_id, c.params.weight, c.verdict, c.params.depth
            );
            for n in &c.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }
        Report::Ratio(r) => {
            let _ = writeln!(
                s,
                "{} / {} over {}: band [{:.8}, {:.8}], {}",
                r.lhs_id,
                r.rhs_id,
                r.grid,
                r.ratio_min,
                r.ratio_max,
                if r.stable { "stable" } else { "not stable" }
            );
            for (level, width) in &r.level_widths {
                let _ = writeln!(s, "  level {level:>3}: ln width {width:.6}");
            }
            for e in &r.excluded {
                let _ = writeln!(s, "  excluded: {e}");
            }
        }
        Report::Probe(p) => {
            let _ = writeln!(
                s,
                "{} {} -> {} on {} weight {}: {:?} (sup {:.6}, slope {:.4})",
                p.operator,
                p.source_norm,
                p.target_norm,
                p.test_family,
                p.weight,
                p.verdict,
                p.sup(),
                p.slope_estimate
            );
            for (level, v) in &p.level_stats {
                let _ = writeln!(s, "  level {level:>3}: running sup {v:.6}");
            }
            for n in &p.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }
        Report::Bound(b) => {
            let _ = writeln!(
                s,
                "{} p = {}: max ratio {:.6} against {:.6}: {}",
                b.property,
                b.p,
                b.max_ratio,
                b.bound,
                if b.holds { "holds" } else { "violated" }
            );
        }
        Report::Suite(r) => {
            for c in &r.criteria {
                let _ = writeln!(s, "{}", c.summary_line());
                for f in c.failures() {
                    let _ = writeln!(s, "    {}: {}", f.label, f.detail);
                }
            }
            let _ = writeln!(s, "{}", if r.passed() { "suite passed" } else { "suite failed" });
        }
    }
    s
}

/// Write `text` to `path` through a temporary file in the same directory.
fn write_atomically(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(if e.is_config() { 2 } else { 3 })
}

/// Parse arguments, run, write the report. Exit status 2 for configuration
/// errors, 3 for numeric failures, 1 for a failed suite.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = match RunConfig::resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("homega: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = config.threads {
        // a pool may already exist when embedded; its size then stands
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let reports = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("homega: {e}");
            return exit_code(&e);
        }
    };
    let written = render(&reports, config.format).and_then(|text| match &config.out {
        Some(path) => write_atomically(path, &text),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    });
    if let Err(e) = written {
        eprintln!("homega: {e}");
        return exit_code(&e);
    }
    let suite_failed = reports.iter().any(|r| matches!(r, Report::Suite(s) if !s.passed()));
    if suite_failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
