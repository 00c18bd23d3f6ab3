//! `pellrep` command-line front end.
//!
//! [`dispatch`] parses one invocation, runs exactly one subcommand and
//! returns the process exit code: 0 success, 1 verification mismatch,
//! 2 usage error, 3 certification failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pellrep_core::baker::{self, BakerError, BoundReport};
use pellrep_core::reduction::{self, ChainConfig, InstanceKind, InstanceRecord, ReductionError};
use pellrep_core::repdigits::{decompose, digit_runs, is_two_run};
use pellrep_core::search::{self, SearchError, VerificationReport};
use pellrep_core::sequences::{self, PellLucasContext, SequenceError, MAX_EXACT_INDEX};
use pellrep_core::Integer;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

pub const DEFAULT_PRECISION_BITS: u32 = 512;
pub const MIN_PRECISION_BITS: u32 = 128;
pub const MAX_KMAX: usize = 2000;
pub const MAX_NMAX: u64 = 5000;
pub const MAX_SEQ_COUNT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundStage {
    Lambda1,
    Lambda2,
    Lemma31,
    Lemma32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceArg {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
    Chain,
}

#[derive(Debug, Parser)]
#[command(name = "pellrep", version, about = "Two-repdigit k-Pell-Lucas numbers: sequences, bounds, reduction, search")]
struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Starting precision in bits (overrides PRECISION_BITS)
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact terms Q_n^(k)
    Seq {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Write JSON to the path, or to stdout without a value
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json: Option<String>,
    },
    /// Digit runs and two-repdigit decompositions of N
    Digits {
        #[arg(long)]
        check: String,
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json: Option<String>,
    },
    /// Dominant root gamma(k) and g_k(gamma)
    Root {
        #[arg(long)]
        k: usize,
        /// Decimal digits to print
        #[arg(long, default_value_t = 50)]
        digits: usize,
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json: Option<String>,
    },
    /// Explicit bound pipeline stages
    Bound {
        #[arg(long, value_enum)]
        stage: BoundStage,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json: Option<String>,
    },
    /// Continued-fraction reduction of one instance or the whole chain
    Reduce {
        #[arg(long, value_enum)]
        instance: InstanceArg,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        a: Option<u8>,
        #[arg(long)]
        b: Option<u8>,
        #[arg(long)]
        l: Option<u32>,
        /// Every k instead of the CI-scale sample (chain only)
        #[arg(long)]
        full: bool,
        /// Keep every instance in the chain certificate
        #[arg(long)]
        record_all: bool,
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json: Option<String>,
    },
    /// Exhaustive search reconciled against the expected solution table
    Verify {
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        nmax: Option<u64>,
        /// Only solutions with l, m >= 1 (drops single digits)
        #[arg(long)]
        strict_eq12: bool,
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        json: Option<String>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Mismatch(String),
    Certification(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Mismatch(_) => EXIT_MISMATCH,
            CliError::Certification(_) | CliError::Io(_) => EXIT_CERTIFICATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Mismatch(m) | CliError::Certification(m) | CliError::Io(m) => m,
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::BadOrder(_) | SequenceError::IndexBelowStart { .. } | SequenceError::Domain(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Certification(e.to_string()),
        }
    }
}

impl From<BakerError> for CliError {
    fn from(e: BakerError) -> Self {
        match e {
            BakerError::Precondition(_) | BakerError::InvalidForm(_) => CliError::Usage(e.to_string()),
            BakerError::Sequence(s) => s.into(),
            _ => CliError::Certification(e.to_string()),
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::InvalidInstance(_) => CliError::Usage(e.to_string()),
            ReductionError::NoPositiveEpsilon { .. } | ReductionError::DegenerateMu { .. } => {
                CliError::Mismatch(e.to_string())
            }
            ReductionError::Sequence(s) => s.into(),
            _ => CliError::Certification(e.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Range(_) => CliError::Usage(e.to_string()),
            SearchError::Sequence(s) => s.into(),
            SearchError::Inconsistent { .. } => CliError::Certification(e.to_string()),
        }
    }
}

/// Settings merged from defaults, `PRECISION_BITS`, the config file and
/// flags, in increasing priority.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub format: Format,
    pub kmax: usize,
    pub nmax: u64,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision_bits: DEFAULT_PRECISION_BITS,
            format: Format::Text,
            kmax: 60,
            nmax: 400,
            output: None,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value for {key}: {v:?}")))
}

impl RunConfig {
    pub fn resolve(
        env_precision: Option<&str>,
        file: Option<&BTreeMap<String, String>>,
        precision_flag: Option<u32>,
        format_flag: Option<Format>,
    ) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(p) = env_precision {
            cfg.precision_bits = parse_field("PRECISION_BITS", p.trim())?;
        }
        if let Some(file) = file {
            for (key, v) in file {
                match key.as_str() {
                    "precision_bits" => cfg.precision_bits = parse_field(key, v)?,
                    "format" => {
                        cfg.format = Format::from_str(v, true)
                            .map_err(|_| CliError::Usage(format!("invalid format {v:?}")))?
                    }
                    "kmax" => cfg.kmax = parse_field(key, v)?,
                    "nmax" => cfg.nmax = parse_field(key, v)?,
                    "output" => cfg.output = Some(v.clone()),
                    other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
                }
            }
        }
        if let Some(p) = precision_flag {
            cfg.precision_bits = p;
        }
        if let Some(f) = format_flag {
            cfg.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.precision_bits < MIN_PRECISION_BITS || self.precision_bits > pellrep_core::numerics::MAX_PRECISION_BITS {
            return Err(CliError::Usage(format!(
                "precision must be in [{MIN_PRECISION_BITS}, {}] bits",
                pellrep_core::numerics::MAX_PRECISION_BITS
            )));
        }
        check_ranges(self.kmax, self.nmax)
    }
}

fn check_ranges(kmax: usize, nmax: u64) -> Result<(), CliError> {
    if !(2..=MAX_KMAX).contains(&kmax) {
        return Err(CliError::Usage(format!("kmax must be in [2, {MAX_KMAX}]")));
    }
    if !(1..=MAX_NMAX).contains(&nmax) {
        return Err(CliError::Usage(format!("nmax must be in [1, {MAX_NMAX}]")));
    }
    Ok(())
}

/// sha256 over the sorted `key=value` lines.
pub fn config_hash(params: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in params {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    format!("{:x}", h.finalize())
}

#[derive(Serialize)]
struct Certificate<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    precision_bits: u32,
    config_hash: String,
    config: &'a BTreeMap<String, String>,
    result: T,
}

/// What a subcommand produced: JSON payload, text rendering, optional CSV,
/// and the exit code it asks for.
struct Output {
    command: &'static str,
    params: BTreeMap<String, String>,
    json: Value,
    text: String,
    csv: Option<String>,
    code: i32,
}

fn params<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    dispatch_to(argv, std::env::var("PRECISION_BITS").ok().as_deref(), &mut out, &mut err)
}

/// [`dispatch`] with explicit streams and `PRECISION_BITS` value.
pub fn dispatch_to<I, S>(argv: I, env_precision: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match run(cli, env_precision, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn run(cli: Cli, env_precision: Option<&str>, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(p) => Some(parse_config(
            &std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        )?),
        None => None,
    };
    let mut cfg = RunConfig::resolve(env_precision, file.as_ref(), cli.precision, cli.format)?;
    let json_target = match &cli.command {
        Command::Seq { json, .. }
        | Command::Digits { json, .. }
        | Command::Root { json, .. }
        | Command::Bound { json, .. }
        | Command::Reduce { json, .. }
        | Command::Verify { json, .. } => json.clone(),
    };
    if json_target.is_some() {
        cfg.output = json_target;
    }
    let result = match cli.command {
        Command::Seq { k, n, count, .. } => cmd_seq(k, n, count)?,
        Command::Digits { check, .. } => cmd_digits(&check)?,
        Command::Root { k, digits, .. } => cmd_root(k, digits, cfg.precision_bits)?,
        Command::Bound { stage, k, n, .. } => cmd_bound(stage, k, n)?,
        Command::Reduce {
            instance,
            k,
            a,
            b,
            l,
            full,
            record_all,
            ..
        } => cmd_reduce(instance, k, a, b, l, full, record_all, cfg.precision_bits)?,
        Command::Verify {
            kmax,
            nmax,
            strict_eq12,
            ..
        } => {
            let kmax = kmax.unwrap_or(cfg.kmax);
            let nmax = nmax.unwrap_or(cfg.nmax);
            check_ranges(kmax, nmax)?;
            cmd_verify(kmax, nmax, strict_eq12)?
        }
    };
    emit(&cfg, result, out)
}

fn emit(cfg: &RunConfig, res: Output, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut params = res.params.clone();
    params.insert("command".into(), res.command.into());
    params.insert("precision_bits".into(), cfg.precision_bits.to_string());
    let cert = Certificate {
        tool: "pellrep",
        version: env!("CARGO_PKG_VERSION"),
        command: res.command,
        precision_bits: cfg.precision_bits,
        config_hash: config_hash(&params),
        config: &params,
        result: &res.json,
    };
    let rendered = serde_json::to_string_pretty(&cert).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match cfg.output.as_deref() {
        Some("-") => out.write_all(rendered.as_bytes()).map_err(io)?,
        Some(path) => {
            std::fs::write(Path::new(path), &rendered).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            out.write_all(res.text.as_bytes()).map_err(io)?;
        }
        None => match cfg.format {
            Format::Json => out.write_all(rendered.as_bytes()).map_err(io)?,
            Format::Csv => out
                .write_all(res.csv.as_deref().unwrap_or(&res.text).as_bytes())
                .map_err(io)?,
            Format::Text => out.write_all(res.text.as_bytes()).map_err(io)?,
        },
    }
    Ok(res.code)
}

fn cmd_seq(k: usize, n: i64, count: usize) -> Result<Output, CliError> {
    if count == 0 || count > MAX_SEQ_COUNT {
        return Err(CliError::Usage(format!("count must be in [1, {MAX_SEQ_COUNT}]")));
    }
    let last = n.saturating_add(count as i64 - 1);
    if last > MAX_EXACT_INDEX {
        return Err(CliError::Usage(format!("n must not exceed {MAX_EXACT_INDEX}")));
    }
    let first = sequences::term(k, n)?;
    let mut values = vec![(n, first)];
    if count > 1 {
        let min = -(k as i64 - 2);
        let it = sequences::PellLucasTerms::new(k)?;
        values = it
            .skip((n - min) as usize)
            .take(count)
            .collect();
    }
    let mut text = String::new();
    let mut csv = String::from("k,n,value\n");
    for (i, v) in &values {
        let _ = writeln!(text, "{v}");
        let _ = writeln!(csv, "{k},{i},{v}");
    }
    let json = json!({
        "k": k.to_string(),
        "values": values.iter().map(|(i, v)| json!({"n": i.to_string(), "value": v.to_string()})).collect::<Vec<_>>(),
    });
    Ok(Output {
        command: "seq",
        params: params([("k", k.to_string()), ("n", n.to_string()), ("count", count.to_string())]),
        json,
        text,
        csv: Some(csv),
        code: EXIT_OK,
    })
}

fn cmd_digits(check: &str) -> Result<Output, CliError> {
    let n: Integer = check
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("not an integer: {check:?}")))?;
    if n < 1 {
        return Err(CliError::Usage("N must be at least 1".into()));
    }
    let runs = digit_runs(&n);
    let decs = decompose(&n);
    let json = json!({
        "value": n.to_string(),
        "runs": runs.iter().map(|(d, len)| json!({"digit": d.to_string(), "length": len.to_string()})).collect::<Vec<_>>(),
        "two_run": is_two_run(&n),
        "decompositions": decs,
    });
    let text = serde_json::to_string_pretty(&json).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    Ok(Output {
        command: "digits",
        params: params([("check", n.to_string())]),
        json,
        text,
        csv: None,
        code: EXIT_OK,
    })
}

fn cmd_root(k: usize, digits: usize, prec: u32) -> Result<Output, CliError> {
    if !(2..=100_000).contains(&k) {
        return Err(CliError::Usage("k must be in [2, 100000]".into()));
    }
    let digits = digits.clamp(1, 10_000);
    let prec = prec.max(sequences::default_precision(k)).max((digits as f64 * 3.33) as u32 + 64);
    let ctx = PellLucasContext::with_precision(k, prec)?;
    let gamma = ctx.gamma().to_decimal(digits);
    let g = ctx.g_gamma().to_decimal(digits);
    let c = ctx.dominant_coefficient().to_decimal(digits);
    let (lo, hi) = sequences::root_bracket(k, 64);
    let text = format!(
        "gamma({k}) = {gamma}\ng_k(gamma) = {g}\n(2gamma-2)g_k(gamma) = {c}\nbracket: ({}, {})\n",
        lo.to_string_radix(10, Some(20)),
        hi.to_string_radix(10, Some(20))
    );
    let json = json!({
        "k": k.to_string(),
        "gamma": gamma,
        "g_k_gamma": g,
        "dominant_coefficient": c,
        "precision_used": prec.to_string(),
    });
    Ok(Output {
        command: "root",
        params: params([("k", k.to_string()), ("digits", digits.to_string())]),
        json,
        text,
        csv: None,
        code: EXIT_OK,
    })
}

fn bound_text(r: &BoundReport) -> String {
    let mut s = format!("{}: {} < {}\n", r.stage, r.formula, r.value_rounded_up);
    for c in &r.checks {
        let _ = writeln!(s, "  [{}] {}: {} vs {}", if c.holds { "ok" } else { "FAIL" }, c.label, c.lhs, c.rhs);
    }
    for n in &r.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    s
}

fn cmd_bound(stage: BoundStage, k: Option<usize>, n: Option<u64>) -> Result<Output, CliError> {
    let need_k = || k.ok_or_else(|| CliError::Usage("--k is required for this stage".into()));
    let report = match stage {
        BoundStage::Lambda1 => baker::lambda1_report(need_k()?, n)?,
        BoundStage::Lambda2 => baker::lambda2_report(need_k()?, n)?,
        BoundStage::Lemma31 => baker::lemma31_report(need_k()?)?,
        BoundStage::Lemma32 => baker::lemma32_report()?,
    };
    let code = if report.all_hold() { EXIT_OK } else { EXIT_MISMATCH };
    let stage_name = format!("{stage:?}").to_ascii_lowercase();
    let mut p = params([("stage", stage_name)]);
    if let Some(k) = k {
        p.insert("k".into(), k.to_string());
    }
    if let Some(n) = n {
        p.insert("n".into(), n.to_string());
    }
    Ok(Output {
        command: "bound",
        params: p,
        json: to_value(&report)?,
        text: bound_text(&report),
        csv: None,
        code,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_reduce(
    instance: InstanceArg,
    k: Option<usize>,
    a: Option<u8>,
    b: Option<u8>,
    l: Option<u32>,
    full: bool,
    record_all: bool,
    prec: u32,
) -> Result<Output, CliError> {
    let kind = match instance {
        InstanceArg::Chain => return reduce_chain(full, record_all),
        InstanceArg::Gamma1 => InstanceKind::Gamma1,
        InstanceArg::Gamma2 => InstanceKind::Gamma2,
        InstanceArg::Gamma3 => InstanceKind::Gamma3,
        InstanceArg::Gamma4 => InstanceKind::Gamma4,
    };
    let needs_k = matches!(kind, InstanceKind::Gamma1 | InstanceKind::Gamma2);
    let needs_bl = matches!(kind, InstanceKind::Gamma2 | InstanceKind::Gamma4);
    let k = match (needs_k, k) {
        (true, Some(k)) if (2..=MAX_KMAX).contains(&k) => k,
        (true, _) => return Err(CliError::Usage(format!("--k in [2, {MAX_KMAX}] is required"))),
        (false, _) => 0,
    };
    let a = a.ok_or_else(|| CliError::Usage("--a is required".into()))?;
    let (b, l) = if needs_bl {
        let l = l.ok_or_else(|| CliError::Usage("--l is required".into()))?;
        if !(1..=1000).contains(&l) {
            return Err(CliError::Usage("--l must be in [1, 1000]".into()));
        }
        (b.ok_or_else(|| CliError::Usage("--b is required".into()))?, l)
    } else {
        (0, 0)
    };
    let (inst, out) = reduction::reduce_single(kind, k, a, b, l, prec)?;
    let (tau, mu) = reduction::expressions(kind, a, b, l);
    let rec = InstanceRecord::new(&inst, tau, mu, &out);
    let text = format!(
        "{}: q = {} (convergent {}), epsilon = {}, t < {} [{:?}, {} bits]\n",
        rec.label, rec.q, rec.convergent_index, rec.epsilon, rec.t_bound, rec.method, rec.precision
    );
    let mut p = params([("instance", format!("{instance:?}").to_ascii_lowercase()), ("a", a.to_string())]);
    if needs_k {
        p.insert("k".into(), k.to_string());
    }
    if needs_bl {
        p.insert("b".into(), b.to_string());
        p.insert("l".into(), l.to_string());
    }
    Ok(Output {
        command: "reduce",
        params: p,
        json: to_value(&rec)?,
        text,
        csv: None,
        code: EXIT_OK,
    })
}

fn reduce_chain(full: bool, record_all: bool) -> Result<Output, CliError> {
    let mut config = if full { ChainConfig::full() } else { ChainConfig::default() };
    config.record_all = record_all;
    let report = reduction::reduce_chain_with(&config, &|line| eprintln!("{line}"))?;
    let s = &report.summary;
    let ext_ok = s
        .extension_n_bound
        .as_deref()
        .map(|n| n.parse::<u64>().map(|v| v <= 250).unwrap_or(false))
        .unwrap_or(true);
    let ok = s.all_stages_conclusive && s.k_bound_ii < 3200 && s.n_bound_v <= 250 && ext_ok;
    let mut text = String::new();
    for st in &report.stages {
        let _ = writeln!(
            text,
            "stage {}: {} instances, max t = {:.6}{}",
            st.stage,
            st.instance_count,
            st.max_t,
            if st.inconclusive { " (INCONCLUSIVE)" } else { "" }
        );
        for (k, v) in &st.conclusions {
            let _ = writeln!(text, "  {k}: {v}");
        }
        for n in &st.notes {
            let _ = writeln!(text, "  note: {n}");
        }
        for f in st.failures.iter().take(10) {
            let _ = writeln!(text, "  failure: {f}");
        }
    }
    let _ = writeln!(text, "n <= 250 established: {ok}");
    Ok(Output {
        command: "reduce",
        params: params([
            ("instance", "chain".into()),
            ("full", full.to_string()),
            ("record_all", record_all.to_string()),
        ]),
        json: to_value(&report)?,
        text,
        csv: None,
        code: if ok { EXIT_OK } else { EXIT_MISMATCH },
    })
}

fn verify_text(r: &VerificationReport) -> String {
    let mut s = format!(
        "k in [{}, {}], n in [{}, {}]{}\n",
        r.k_min,
        r.k_max,
        r.n_min,
        r.n_max,
        if r.strict { ", strict" } else { "" }
    );
    let _ = writeln!(
        s,
        "found {} solutions, expected {}, matched {}, missing {}, extras {}",
        r.solutions.len(),
        r.expected.len(),
        r.matches,
        r.missing.len(),
        r.extras.len()
    );
    for m in &r.missing {
        let _ = writeln!(s, "  missing: k = {}, n = {}, value {}", m.k, m.n, m.value);
    }
    for e in &r.extras {
        let _ = writeln!(s, "  extra: k = {}, n = {}, value {}", e.k, e.n, e.value);
    }
    for d in &r.discrepancies {
        let _ = writeln!(s, "  discrepancy: {d}");
    }
    let window_fail = r.window_checks.iter().filter(|w| !w.holds).count();
    let _ = writeln!(
        s,
        "digit-count window: {} checked, {} failed; threshold stability: {}; solutions with n > 250: {}",
        r.window_checks.len(),
        window_fail,
        r.stability.iter().all(|x| x.stable),
        r.above_reduction_bound
    );
    let _ = writeln!(s, "{}", if r.all_checks_hold() { "PASS" } else { "FAIL" });
    s
}

fn cmd_verify(kmax: usize, nmax: u64, strict: bool) -> Result<Output, CliError> {
    let report = search::verify_theorem_with(kmax, nmax, strict)?;
    let mut csv = String::from("k,n,value,decompositions,degenerate\n");
    for sol in &report.solutions {
        let decs: Vec<String> = sol.decompositions.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(csv, "{},{},{},\"{}\",{}", sol.k, sol.n, sol.value, decs.join(" "), sol.degenerate);
    }
    let code = if report.all_checks_hold() { EXIT_OK } else { EXIT_MISMATCH };
    Ok(Output {
        command: "verify",
        params: params([
            ("kmax", kmax.to_string()),
            ("nmax", nmax.to_string()),
            ("strict_eq12", strict.to_string()),
        ]),
        json: to_value(&report)?,
        text: verify_text(&report),
        csv: Some(csv),
        code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let m = parse_config("# c\nprecision_bits = 1024\nformat=json\n\nkmax=10 # trailing\n").unwrap();
        assert_eq!(m["precision_bits"], "1024");
        assert_eq!(m["kmax"], "10");
        assert!(parse_config("oops").is_err());
        let cfg = RunConfig::resolve(Some("768"), Some(&m), None, None).unwrap();
        assert_eq!(cfg.precision_bits, 1024);
        assert_eq!(cfg.format, Format::Json);
        let cfg = RunConfig::resolve(Some("768"), None, None, None).unwrap();
        assert_eq!(cfg.precision_bits, 768);
        let cfg = RunConfig::resolve(Some("768"), Some(&m), Some(300), Some(Format::Text)).unwrap();
        assert_eq!((cfg.precision_bits, cfg.format), (300, Format::Text));
        assert!(RunConfig::resolve(None, None, Some(64), None).is_err());
        let bad = parse_config("colour = red").unwrap();
        assert!(RunConfig::resolve(None, Some(&bad), None, None).is_err());
    }

    #[test]
    fn hash_is_order_independent() {
        let a = params([("x", "1".into()), ("y", "2".into())]);
        let b = params([("y", "2".into()), ("x", "1".into())]);
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        assert_ne!(config_hash(&a), config_hash(&params([("x", "2".into())])));
    }
}
