//! `pp84` command-line frontend.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid parameter value.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytics::{
    self, curve, efficiency, efficiency_crossover, qdc_eavesdrop_success, security_threshold, EfficiencyInput, EveCurve,
};
use crate::attacks::{AttackParams, AttackStrategy};
use crate::error::Error;
use crate::protocol::{
    qdc_success_frequency, run_bb84_baseline, run_session, ControlBasis, RunConfig, RunRecord, SessionInput,
    SessionMode,
};
use crate::stats::{compare_z, critical_z, ComparisonReport, Estimate};
use crate::validation::{comparisons, per_control_detection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Header of the per-run transcript CSV.
pub const TRANSCRIPT_HEADER: [&str; 10] = [
    "run",
    "prep",
    "mode",
    "alice_basis",
    "alice_outcome",
    "alice_op",
    "bob_outcome",
    "detection",
    "lost_fwd",
    "lost_bwd",
];

pub const CURVES_HEADER: [&str; 5] = ["x", "d", "i_ab", "i_ae", "i_ae_bound"];
pub const EFFICIENCY_HEADER: [&str; 3] = ["P", "pp84_eff", "bb84_eff"];

#[derive(Debug, Parser)]
#[command(
    name = "pp84",
    version,
    about = "Simulate and analyze the PP84 two-way quantum protocol"
)]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write the primary output here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    None,
    Projective,
    Incoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Qdc,
    Qkd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControlBasisArg {
    Random,
    Match,
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    #[arg(long, value_enum, default_value_t = AttackKind::None)]
    pub attack: AttackKind,
    #[arg(long = "f", default_value_t = 1.0)]
    pub f: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long = "f-prime", default_value_t = 1.0)]
    pub f_prime: f64,
    /// Defaults to `--x`.
    #[arg(long = "x-prime")]
    pub x_prime: Option<f64>,
    /// Defaults to `--y`.
    #[arg(long = "y-prime")]
    pub y_prime: Option<f64>,
}

impl AttackArgs {
    fn strategy(&self) -> Result<AttackStrategy, Error> {
        Ok(match self.attack {
            AttackKind::None => AttackStrategy::NoAttack,
            AttackKind::Projective => AttackStrategy::ProjectiveInterceptResend,
            AttackKind::Incoherent => AttackStrategy::IncoherentTwoAncilla(AttackParams::new(
                self.f,
                self.x,
                self.y,
                self.f_prime,
                self.x_prime.unwrap_or(self.x),
                self.y_prime.unwrap_or(self.y),
            )?),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub attack: AttackArgs,
    #[arg(long = "control-prob", default_value_t = 0.5)]
    pub control_prob: f64,
    /// One-way transmission probability.
    #[arg(long = "loss-p", default_value_t = 1.0)]
    pub loss_p: f64,
    #[arg(long = "control-basis", value_enum, default_value_t = ControlBasisArg::Random)]
    pub control_basis: ControlBasisArg,
}

impl RunArgs {
    fn config(&self, seed: u64, mode: SessionMode) -> Result<RunConfig, Error> {
        let policy = match self.control_basis {
            ControlBasisArg::Random => ControlBasis::Random,
            ControlBasisArg::Match => ControlBasis::MatchPreparation,
        };
        let cfg = RunConfig::new(self.control_prob, self.attack.strategy()?, seed)
            .with_transmission(self.loss_p)
            .with_mode(mode)
            .with_control_basis(policy);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a session and compare its statistics with the closed forms.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Qkd)]
        mode: ModeArg,
        /// Hex message, QDC only.
        #[arg(long)]
        payload: Option<String>,
        /// |z| above which a comparison fails.
        #[arg(long = "z-max", default_value_t = 4.0)]
        z_max: f64,
    },
    /// Information and detection curves of the balanced attack.
    Curves {
        #[arg(long, default_value_t = 91)]
        points: usize,
    },
    /// Detection thresholds where Bob's and Eve's information cross.
    Thresholds,
    /// Practical efficiency of PP84 vs BB84 over a transmission grid.
    Efficiency {
        /// Explicit transmission probabilities; overrides `--points`.
        #[arg(long = "p", value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Send a message with direct communication.
    QdcSend {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        payload: String,
        /// Repeat with independent seeds and report the undetected-delivery frequency.
        #[arg(long, default_value_t = 1)]
        sessions: u64,
    },
    /// One-way BB84 with sifting, for comparison.
    Bb84Baseline {
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[arg(long, value_enum, default_value_t = AttackKind::None)]
        attack: AttackKind,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Invalid(String),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

type CliResult<T> = Result<T, CliError>;

/// Formats a value with 9 significant digits.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        // rounding can carry into a new leading digit (9.99999999995 -> 10.00000000)
        let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        if digits.trim_start_matches('0').len() > 9 && decimals > 0 {
            let decimals = decimals - 1;
            return format!("{v:.decimals$}");
        }
        s
    } else {
        format!("{v:.8e}")
    }
}

/// Parses a hex string (optional `0x`) into bits, most significant first.
pub fn parse_payload(hex: &str) -> Result<Vec<u8>, String> {
    let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
    let mut bits = Vec::with_capacity(digits.len() * 4);
    for c in digits.chars() {
        let v = c
            .to_digit(16)
            .ok_or_else(|| format!("invalid hex digit {c:?} in payload"))?;
        bits.extend((0..4).rev().map(|k| ((v >> k) & 1) as u8));
    }
    Ok(bits)
}

/// Inverse of [`parse_payload`]; pads a trailing partial nibble with zeros.
pub fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|nib| {
            let v = (0..4).fold(0u32, |acc, k| (acc << 1) | nib.get(k).copied().unwrap_or(0) as u32);
            std::char::from_digit(v, 16).expect("nibble")
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One transcript row in [`TRANSCRIPT_HEADER`] order.
pub fn transcript_row(rec: &RunRecord) -> [String; 10] {
    let alice_label = rec
        .alice_basis
        .zip(rec.alice_outcome)
        .map(|(b, o)| b.measurement().label(o as usize).to_string());
    let bob_label = rec
        .bob_outcome
        .map(|o| rec.prep.basis().measurement().label(o as usize).to_string());
    [
        rec.index.to_string(),
        rec.prep.to_string(),
        rec.mode_taken.to_string(),
        opt(rec.alice_basis),
        alice_label.unwrap_or_default(),
        opt(rec.alice_op),
        bob_label.unwrap_or_default(),
        rec.detection.to_string(),
        (rec.lost_forward as u8).to_string(),
        (rec.lost_backward as u8).to_string(),
    ]
}

pub fn write_transcript<W: Write>(out: W, records: &[RunRecord]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRANSCRIPT_HEADER)?;
    for rec in records {
        w.write_record(transcript_row(rec))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn write_reports_csv<W: Write>(out: W, reports: &[ComparisonReport]) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["quantity", "analytic", "empirical", "stderr", "z", "verdict"])?;
    for r in reports {
        w.write_record([
            r.quantity.clone(),
            fmt_sig(r.analytic),
            fmt_sig(r.empirical),
            fmt_sig(r.stderr),
            fmt_sig(r.z),
            format!("{:?}", r.verdict).to_lowercase(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Runs the CLI with `args` (including the program name). Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.output {
        Some(path) => File::create(path)
            .map_err(CliError::from)
            .and_then(|f| dispatch(&cli, &mut io::BufWriter::new(f), stderr)),
        None => dispatch(&cli, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Invalid(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INVALID
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Simulate {
            run,
            runs,
            mode,
            payload,
            z_max,
        } => cmd_simulate(cli, run, *runs, *mode, payload.as_deref(), *z_max, out),
        Command::Curves { points } => cmd_curves(cli, *points, out),
        Command::Thresholds => cmd_thresholds(cli, out),
        Command::Efficiency { p, points } => cmd_efficiency(cli, p, *points, out, err),
        Command::QdcSend { run, payload, sessions } => cmd_qdc_send(cli, run, payload, *sessions, out),
        Command::Bb84Baseline { runs, attack } => cmd_bb84(cli, *runs, *attack, out),
    }
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    config: &'a RunConfig,
    stats: &'a crate::stats::SessionStats,
    reports: &'a [ComparisonReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    qdc: Option<&'a crate::protocol::QdcOutcome>,
}

/// Information estimates must land within this many bits of the closed form.
pub const MI_TOLERANCE: f64 = 0.01;

fn cmd_simulate(
    cli: &Cli,
    run: &RunArgs,
    runs: u64,
    mode: ModeArg,
    payload: Option<&str>,
    z_max: f64,
    out: &mut dyn Write,
) -> CliResult<()> {
    let (mode, input) = match (mode, payload) {
        (ModeArg::Qkd, None) => (SessionMode::Qkd, SessionInput::Runs(runs)),
        (ModeArg::Qkd, Some(_)) => return Err(CliError::Usage("--payload is only valid with --mode qdc".into())),
        (ModeArg::Qdc, None) => return Err(CliError::Usage("--mode qdc requires --payload".into())),
        (ModeArg::Qdc, Some(hex)) => {
            let bits = parse_payload(hex).map_err(CliError::Invalid)?;
            if bits.is_empty() {
                return Err(CliError::Usage("empty payload".into()));
            }
            (SessionMode::Qdc, SessionInput::Payload(bits))
        }
    };
    if runs == 0 {
        return Err(CliError::Invalid("--runs must be positive".into()));
    }
    let cfg = run.config(cli.seed, mode)?;
    let result = run_session(&cfg, &input)?;
    match cli.format {
        Format::Csv => write_transcript(out, &result.records)?,
        Format::Json => {
            let reports = comparisons(&cfg, &result.stats, z_max, MI_TOLERANCE)?;
            write_json(
                out,
                &SimulateOutput {
                    config: &cfg,
                    stats: &result.stats,
                    reports: &reports,
                    qdc: result.qdc.as_ref(),
                },
            )?
        }
    }
    Ok(())
}

fn cmd_curves(cli: &Cli, points: usize, out: &mut dyn Write) -> CliResult<()> {
    if points < 2 {
        return Err(CliError::Invalid(format!("--points must be at least 2, got {points}")));
    }
    let rows = curve(points)?;
    match cli.format {
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(CURVES_HEADER)?;
            for r in &rows {
                w.write_record([r.x, r.d, r.i_ab, r.i_ae, r.i_ae_bound].map(fmt_sig))?;
            }
            w.flush()?;
        }
        Format::Json => write_json(out, &rows)?,
    }
    Ok(())
}

fn cmd_thresholds(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let inc = security_threshold(EveCurve::Incoherent)?;
    let bnd = security_threshold(EveCurve::Bound)?;
    match cli.format {
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(["curve", "x", "d"])?;
            w.write_record(["incoherent".to_string(), fmt_sig(inc.x), fmt_sig(inc.d)])?;
            w.write_record(["bound".to_string(), fmt_sig(bnd.x), fmt_sig(bnd.d)])?;
            w.write_record([
                "bb84_reference".to_string(),
                String::new(),
                fmt_sig(analytics::BB84_REFERENCE_THRESHOLD),
            ])?;
            w.flush()?;
        }
        Format::Json => write_json(
            out,
            &serde_json::json!({
                "incoherent": inc,
                "bound": bnd,
                "bb84_reference": analytics::BB84_REFERENCE_THRESHOLD,
            }),
        )?,
    }
    Ok(())
}

fn cmd_efficiency(cli: &Cli, ps: &[f64], points: usize, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let grid: Vec<f64> = if ps.is_empty() {
        if points < 1 {
            return Err(CliError::Invalid("--points must be positive".into()));
        }
        (1..=points).map(|k| k as f64 / points as f64).collect()
    } else {
        ps.to_vec()
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &p in &grid {
        let (_, pp) = efficiency(&EfficiencyInput::pp84(p))?;
        let (_, bb) = efficiency(&EfficiencyInput::bb84(p))?;
        rows.push([p, pp, bb]);
    }
    let (pp84_e, _) = efficiency(&EfficiencyInput::pp84(1.0))?;
    let (bb84_e, _) = efficiency(&EfficiencyInput::bb84(1.0))?;
    let crossover = efficiency_crossover(pp84_e, bb84_e)?;
    match cli.format {
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(EFFICIENCY_HEADER)?;
            for r in &rows {
                w.write_record(r.map(fmt_sig))?;
            }
            w.flush()?;
            writeln!(err, "crossover P = {}", fmt_sig(crossover))?;
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| serde_json::json!({"P": r[0], "pp84_eff": r[1], "bb84_eff": r[2]}))
                .collect();
            write_json(out, &serde_json::json!({ "rows": rows, "crossover": crossover }))?
        }
    }
    Ok(())
}

fn cmd_qdc_send(cli: &Cli, run: &RunArgs, payload: &str, sessions: u64, out: &mut dyn Write) -> CliResult<()> {
    let bits = parse_payload(payload).map_err(CliError::Invalid)?;
    if bits.is_empty() {
        return Err(CliError::Usage("empty payload".into()));
    }
    if sessions == 0 {
        return Err(CliError::Invalid("--sessions must be positive".into()));
    }
    let cfg = run.config(cli.seed, SessionMode::Qdc)?;
    if cfg.control_prob >= 1.0 {
        return Err(CliError::Invalid("--control-prob must be below 1 for QDC".into()));
    }
    if sessions == 1 {
        let res = run_session(&cfg, &SessionInput::Payload(bits))?;
        let q = res.qdc.expect("QDC session");
        match cli.format {
            Format::Csv => {
                let mut w = csv_writer(out);
                w.write_record([
                    "status",
                    "bits_delivered",
                    "runs",
                    "detection_run",
                    "alice_bits",
                    "bob_bits",
                ])?;
                w.write_record([
                    format!("{:?}", q.status).to_lowercase(),
                    q.bob_bits.len().to_string(),
                    q.runs.to_string(),
                    opt(q.detection_run),
                    bits_to_hex(&q.alice_bits),
                    bits_to_hex(&q.bob_bits),
                ])?;
                w.flush()?;
            }
            Format::Json => write_json(out, &q)?,
        }
        return Ok(());
    }

    let (delivered, total) = qdc_success_frequency(&cfg, &bits, sessions)?;
    let est = Estimate::proportion(delivered, total)?;
    let d = per_control_detection(&cfg)?;
    let analytic = qdc_eavesdrop_success(cfg.control_prob, d, bits.len() as u32)?;
    let report = compare_z(
        "qdc_undetected_delivery",
        analytic,
        est.rate,
        est.stderr,
        critical_z(1e-4),
    );
    match cli.format {
        Format::Csv => write_reports_csv(out, &[report])?,
        Format::Json => write_json(out, &[report])?,
    }
    Ok(())
}

fn cmd_bb84(cli: &Cli, runs: u64, attack: AttackKind, out: &mut dyn Write) -> CliResult<()> {
    let strategy = match attack {
        AttackKind::None => AttackStrategy::NoAttack,
        AttackKind::Projective => AttackStrategy::ProjectiveInterceptResend,
        AttackKind::Incoherent => {
            return Err(CliError::Invalid(
                "bb84-baseline supports --attack none|projective".into(),
            ))
        }
    };
    if runs == 0 {
        return Err(CliError::Invalid("--runs must be positive".into()));
    }
    let s = run_bb84_baseline(runs, &strategy, cli.seed)?;
    let (rate, se) = s.error_rate()?;
    let analytic = if attack == AttackKind::Projective { 0.25 } else { 0.0 };
    let report = compare_z("bb84_sifted_error", analytic, rate, se, 4.0);
    match cli.format {
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record([
                "qubits",
                "sifted",
                "sift_fraction",
                "error_rate",
                "stderr",
                "efficiency",
                "verdict",
            ])?;
            w.write_record([
                s.qubits.to_string(),
                s.sifted.to_string(),
                fmt_sig(s.sift_fraction()),
                fmt_sig(rate),
                fmt_sig(se),
                fmt_sig(s.efficiency()),
                format!("{:?}", report.verdict).to_lowercase(),
            ])?;
            w.flush()?;
        }
        Format::Json => write_json(
            out,
            &serde_json::json!({
                "stats": s,
                "sift_fraction": s.sift_fraction(),
                "efficiency": s.efficiency(),
                "reports": [report],
            }),
        )?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.375), "0.375000000");
        assert_eq!(fmt_sig(1.0), "1.00000000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(std::f64::consts::FRAC_PI_2), "1.57079633");
        assert_eq!(fmt_sig(1e-7), "1.00000000e-7");
        assert_eq!(fmt_sig(9.999999999), "10.0000000");
    }

    #[test]
    fn payload_hex() {
        assert_eq!(parse_payload("0xA5").unwrap(), vec![1, 0, 1, 0, 0, 1, 0, 1]);
        assert_eq!(bits_to_hex(&parse_payload("a5").unwrap()), "a5");
        assert!(parse_payload("zz").is_err());
        assert!(parse_payload("").unwrap().is_empty());
    }
}
