//! The two-way run engine: Bob prepares, Eve attacks on the way out, Alice
//! either checks (control) or encodes, Eve attacks on the way back, Bob
//! decodes in his preparation basis.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub use crate::alphabet::{Basis, EncodingOp, PrepState};
use crate::attacks::{AttackStrategy, EveRecord, PreparedAttack, QUBIT};
use crate::error::{check_range, Error, Result};
use crate::stats::SessionStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    /// Direct communication: checks are discussed after every run.
    Qdc,
    /// Key distribution: all discussion deferred to the end.
    Qkd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Control,
    Encoding,
}

impl RunMode {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Control => "control",
            RunMode::Encoding => "encoding",
        })
    }
}

/// How Alice picks her measurement basis in control mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlBasis {
    /// Uniformly random; runs whose basis differs from Bob's are not checks.
    #[default]
    Random,
    /// Always Bob's preparation basis, so every control run is a check.
    /// Models the idealized accounting where `d` is the per-control-run
    /// detection probability.
    MatchPreparation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionOutcome {
    NotApplicable,
    Pass,
    DetectE1,
    DetectE2,
}

impl DetectionOutcome {
    pub fn is_detection(self) -> bool {
        matches!(self, DetectionOutcome::DetectE1 | DetectionOutcome::DetectE2)
    }
}

impl fmt::Display for DetectionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectionOutcome::NotApplicable => "n/a",
            DetectionOutcome::Pass => "pass",
            DetectionOutcome::DetectE1 => "detect_e1",
            DetectionOutcome::DetectE2 => "detect_e2",
        })
    }
}

/// Per-pass transmission probabilities that differ by Alice's mode.
///
/// An honest channel cannot know the mode; this exists to exercise the
/// loss-rate comparison against a mode-aware adversary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTransmission {
    pub control: f64,
    pub encoding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub control_prob: f64,
    pub attack: AttackStrategy,
    /// One-way transmission probability `P`.
    pub transmission_prob: f64,
    pub mode: SessionMode,
    pub seed: u64,
    pub control_basis: ControlBasis,
    pub mode_transmission: Option<ModeTransmission>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            control_prob: 0.5,
            attack: AttackStrategy::NoAttack,
            transmission_prob: 1.0,
            mode: SessionMode::Qkd,
            seed: 0,
            control_basis: ControlBasis::Random,
            mode_transmission: None,
        }
    }
}

impl RunConfig {
    pub fn new(control_prob: f64, attack: AttackStrategy, seed: u64) -> Self {
        Self {
            control_prob,
            attack,
            seed,
            ..Self::default()
        }
    }

    pub fn with_mode(mut self, mode: SessionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_transmission(mut self, p: f64) -> Self {
        self.transmission_prob = p;
        self
    }

    pub fn with_mode_transmission(mut self, control: f64, encoding: f64) -> Self {
        self.mode_transmission = Some(ModeTransmission { control, encoding });
        self
    }

    pub fn with_control_basis(mut self, policy: ControlBasis) -> Self {
        self.control_basis = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_range("control_prob", self.control_prob, 0.0, 1.0)?;
        if !(self.transmission_prob > 0.0 && self.transmission_prob <= 1.0) {
            return Err(Error::OutOfRange {
                name: "transmission_prob",
                value: self.transmission_prob,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if let Some(mt) = self.mode_transmission {
            check_range("control transmission", mt.control, 0.0, 1.0)?;
            check_range("encoding transmission", mt.encoding, 0.0, 1.0)?;
        }
        if let AttackStrategy::IncoherentTwoAncilla(p) = &self.attack {
            p.validate()?;
        }
        Ok(())
    }

    fn pass_prob(&self, mode: RunMode) -> f64 {
        match (self.mode_transmission, mode) {
            (Some(mt), RunMode::Control) => mt.control,
            (Some(mt), RunMode::Encoding) => mt.encoding,
            (None, _) => self.transmission_prob,
        }
    }
}

/// Transcript of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: u64,
    pub prep: PrepState,
    pub mode_taken: RunMode,
    pub alice_basis: Option<Basis>,
    /// Outcome index in `alice_basis`.
    pub alice_outcome: Option<u8>,
    pub alice_op: Option<EncodingOp>,
    /// Outcome index in Bob's preparation basis.
    pub bob_outcome: Option<u8>,
    pub detection: DetectionOutcome,
    pub lost_forward: bool,
    pub lost_backward: bool,
    pub eve_record: Option<EveRecord>,
}

impl RunRecord {
    pub fn is_lost(&self) -> bool {
        self.lost_forward || self.lost_backward
    }

    /// Alice's encoded bit, for encoding runs.
    pub fn alice_bit(&self) -> Option<u8> {
        self.alice_op.map(EncodingOp::bit)
    }

    /// Bob's decoded bit: did the qubit come back flipped?
    pub fn bob_bit(&self) -> Option<u8> {
        match self.mode_taken {
            RunMode::Encoding => self.bob_outcome.map(|b| b ^ self.prep.bit()),
            RunMode::Control => None,
        }
    }
}

/// The double correlation test for one run.
pub fn detection_check(record: &RunRecord) -> DetectionOutcome {
    if record.is_lost() || record.mode_taken != RunMode::Control {
        return DetectionOutcome::NotApplicable;
    }
    let (Some(basis), Some(alice), Some(bob)) = (record.alice_basis, record.alice_outcome, record.bob_outcome) else {
        return DetectionOutcome::NotApplicable;
    };
    if basis != record.prep.basis() {
        DetectionOutcome::NotApplicable
    } else if alice != record.prep.bit() {
        DetectionOutcome::DetectE1
    } else if bob != alice {
        DetectionOutcome::DetectE2
    } else {
        DetectionOutcome::Pass
    }
}

/// Deterministic per-run generator: stream `index` of the seeded ChaCha8.
pub fn run_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed for the `index`-th independent session under a master seed.
pub fn session_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A validated configuration with its attack prepared.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: RunConfig,
    attack: PreparedAttack,
}

impl Simulator {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let attack = PreparedAttack::new(&config.attack)?;
        Ok(Self { config, attack })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Runs with the generator derived from `(seed, index)`.
    pub fn run_indexed(&self, index: u64, forced_bit: Option<u8>) -> Result<RunRecord> {
        let mut rng = run_rng(self.config.seed, index);
        self.run_single(index, forced_bit, &mut rng)
    }

    /// One run. Alice's mode and her basis or bit are drawn up front; they
    /// are independent of the qubit and of Eve.
    pub fn run_single<R: Rng + ?Sized>(&self, index: u64, forced_bit: Option<u8>, rng: &mut R) -> Result<RunRecord> {
        let cfg = &self.config;
        let prep = PrepState::ALL[rng.random_range(0..4)];
        let mode = if rng.random_bool(cfg.control_prob) {
            RunMode::Control
        } else {
            RunMode::Encoding
        };
        let (alice_basis, alice_op) = match mode {
            RunMode::Control => {
                let basis = match cfg.control_basis {
                    ControlBasis::Random => Basis::ALL[rng.random_range(0..2)],
                    ControlBasis::MatchPreparation => prep.basis(),
                };
                (Some(basis), None)
            }
            RunMode::Encoding => {
                let bit = forced_bit.unwrap_or_else(|| rng.random_range(0..2u8));
                (None, Some(EncodingOp::from_bit(bit)))
            }
        };

        let mut record = RunRecord {
            index,
            prep,
            mode_taken: mode,
            alice_basis,
            alice_outcome: None,
            alice_op,
            bob_outcome: None,
            detection: DetectionOutcome::NotApplicable,
            lost_forward: false,
            lost_backward: false,
            eve_record: None,
        };

        let pass = cfg.pass_prob(mode);
        if !rng.random_bool(pass) {
            record.lost_forward = true;
            return Ok(record);
        }

        let (state, mut memory) = self.attack.forward(prep.state(), rng)?;
        let state = match (alice_basis, alice_op) {
            (Some(basis), _) => {
                let m = state.measure(&basis.measurement(), QUBIT, rng)?;
                record.alice_outcome = Some(m.index as u8);
                m.state
            }
            (None, Some(op)) => state.apply_isometry(&op.unitary(), &[QUBIT])?,
            (None, None) => unreachable!("mode sets exactly one of basis and op"),
        };
        let state = self.attack.backward(state, &mut memory, rng)?;

        let state = if rng.random_bool(pass) {
            let m = state.measure(&prep.basis().measurement(), QUBIT, rng)?;
            record.bob_outcome = Some(m.index as u8);
            m.state
        } else {
            record.lost_backward = true;
            state
        };

        record.eve_record = self.attack.conclude(&state, &memory, rng)?;
        record.detection = detection_check(&record);
        Ok(record)
    }

    /// Aggregate statistics of runs `0..runs`, in parallel.
    pub fn simulate(&self, runs: u64) -> Result<SessionStats> {
        (0..runs)
            .into_par_iter()
            .map(|i| self.run_indexed(i, None))
            .try_fold(SessionStats::default, |mut acc, rec| {
                acc.record(&rec?);
                Ok(acc)
            })
            .try_reduce(SessionStats::default, |a, b| Ok(a.merged(&b)))
    }

    pub fn transcript(&self, runs: u64) -> Result<Vec<RunRecord>> {
        (0..runs).into_par_iter().map(|i| self.run_indexed(i, None)).collect()
    }
}

/// What a session is asked to do.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionInput {
    /// QDC: message bits to deliver.
    Payload(Vec<u8>),
    /// QKD: number of runs.
    Runs(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QdcStatus {
    Delivered,
    Aborted,
    /// Gave up after the run budget without delivering the whole payload.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdcOutcome {
    pub status: QdcStatus,
    /// Bits Alice encoded on runs that reached Bob, in order.
    pub alice_bits: Vec<u8>,
    /// Bob's decoded bits for the same runs.
    pub bob_bits: Vec<u8>,
    /// Index of the run that revealed Eve.
    pub detection_run: Option<u64>,
    pub runs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
}

impl KeyMaterial {
    pub fn error_rate(&self) -> Option<f64> {
        if self.alice.is_empty() {
            return None;
        }
        let errors = self.alice.iter().zip(&self.bob).filter(|(a, b)| a != b).count();
        Some(errors as f64 / self.alice.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub stats: SessionStats,
    pub records: Vec<RunRecord>,
    pub qdc: Option<QdcOutcome>,
    pub key: Option<KeyMaterial>,
}

/// Upper bound on QDC runs per payload bit before a session is abandoned.
pub const QDC_RUNS_PER_BIT: u64 = 10_000;

pub fn run_session(config: &RunConfig, input: &SessionInput) -> Result<SessionResult> {
    let sim = Simulator::new(config.clone())?;
    match (config.mode, input) {
        (SessionMode::Qdc, SessionInput::Payload(bits)) => run_qdc(&sim, bits),
        (SessionMode::Qkd, SessionInput::Runs(n)) => run_qkd(&sim, *n),
        (SessionMode::Qdc, _) => Err(Error::Invalid("QDC sessions need a payload".into())),
        (SessionMode::Qkd, _) => Err(Error::Invalid("QKD sessions need a run count".into())),
    }
}

fn run_qdc(sim: &Simulator, payload: &[u8]) -> Result<SessionResult> {
    if payload.is_empty() {
        return Err(Error::Invalid("empty payload".into()));
    }
    if sim.config.control_prob >= 1.0 {
        return Err(Error::Invalid("QDC needs control_prob < 1".into()));
    }
    let budget = QDC_RUNS_PER_BIT * payload.len() as u64;
    let mut stats = SessionStats::default();
    let mut records = Vec::new();
    let mut out = QdcOutcome {
        status: QdcStatus::Exhausted,
        alice_bits: Vec::with_capacity(payload.len()),
        bob_bits: Vec::with_capacity(payload.len()),
        detection_run: None,
        runs: 0,
    };
    for index in 0..budget {
        let next = payload[out.alice_bits.len()];
        let rec = sim.run_indexed(index, Some(next))?;
        stats.record(&rec);
        out.runs = index + 1;
        if rec.detection.is_detection() {
            out.status = QdcStatus::Aborted;
            out.detection_run = Some(index);
            records.push(rec);
            break;
        }
        if let (Some(a), Some(b)) = (rec.alice_bit(), rec.bob_bit()) {
            out.alice_bits.push(a);
            out.bob_bits.push(b);
        }
        records.push(rec);
        if out.alice_bits.len() == payload.len() {
            out.status = QdcStatus::Delivered;
            break;
        }
    }
    Ok(SessionResult {
        stats,
        records,
        qdc: Some(out),
        key: None,
    })
}

fn run_qkd(sim: &Simulator, runs: u64) -> Result<SessionResult> {
    let records = sim.transcript(runs)?;
    let mut stats = SessionStats::default();
    let mut key = KeyMaterial {
        alice: Vec::new(),
        bob: Vec::new(),
    };
    for rec in &records {
        stats.record(rec);
        if let (Some(a), Some(b)) = (rec.alice_bit(), rec.bob_bit()) {
            key.alice.push(a);
            key.bob.push(b);
        }
    }
    Ok(SessionResult {
        stats,
        records,
        qdc: None,
        key: Some(key),
    })
}

/// Runs `sessions` independent QDC sessions of `payload` and counts those
/// that deliver everything without a detection.
pub fn qdc_success_frequency(config: &RunConfig, payload: &[u8], sessions: u64) -> Result<(u64, u64)> {
    let base = config.clone().with_mode(SessionMode::Qdc);
    let delivered = (0..sessions)
        .into_par_iter()
        .map(|s| {
            let mut cfg = base.clone();
            cfg.seed = session_seed(config.seed, s);
            let res = run_session(&cfg, &SessionInput::Payload(payload.to_vec()))?;
            Ok(matches!(
                res.qdc,
                Some(QdcOutcome {
                    status: QdcStatus::Delivered,
                    ..
                })
            ) as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok((delivered, sessions))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyVerdict {
    Consistent,
    Anomaly,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossAnomalyReport {
    pub control_runs: u64,
    pub encoding_runs: u64,
    pub control_loss_rate: f64,
    pub encoding_loss_rate: f64,
    pub z: f64,
    pub critical: f64,
    pub verdict: AnomalyVerdict,
}

/// Minimum runs per mode for a loss comparison.
pub const MIN_LOSS_SAMPLES: u64 = 100;

/// Two-sided pooled two-proportion z-test of control vs encoding loss rates.
pub fn loss_anomaly_test(stats: &SessionStats, significance: f64) -> Result<LossAnomalyReport> {
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::OutOfRange {
            name: "significance",
            value: significance,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let n_c = stats.mode_runs[RunMode::Control.index()];
    let n_e = stats.mode_runs[RunMode::Encoding.index()];
    let lost_c = stats.lost(RunMode::Control);
    let lost_e = stats.lost(RunMode::Encoding);
    let rate = |k: u64, n: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let (p_c, p_e) = (rate(lost_c, n_c), rate(lost_e, n_e));
    let critical = Normal::standard().inverse_cdf(1.0 - significance / 2.0);
    let mut report = LossAnomalyReport {
        control_runs: n_c,
        encoding_runs: n_e,
        control_loss_rate: p_c,
        encoding_loss_rate: p_e,
        z: 0.0,
        critical,
        verdict: AnomalyVerdict::Inconclusive,
    };
    if n_c < MIN_LOSS_SAMPLES || n_e < MIN_LOSS_SAMPLES {
        return Ok(report);
    }
    let pooled = (lost_c + lost_e) as f64 / (n_c + n_e) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n_c as f64 + 1.0 / n_e as f64)).sqrt();
    report.z = if se > 0.0 { (p_c - p_e) / se } else { 0.0 };
    report.verdict = if report.z.abs() > critical {
        AnomalyVerdict::Anomaly
    } else {
        AnomalyVerdict::Consistent
    };
    Ok(report)
}

/// One-way BB84 counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bb84Stats {
    pub qubits: u64,
    pub sifted: u64,
    pub sifted_errors: u64,
    /// Public basis announcements, one bit per transmitted qubit.
    pub classical_bits: u64,
}

impl Bb84Stats {
    fn merged(self, o: Self) -> Self {
        Self {
            qubits: self.qubits + o.qubits,
            sifted: self.sifted + o.sifted,
            sifted_errors: self.sifted_errors + o.sifted_errors,
            classical_bits: self.classical_bits + o.classical_bits,
        }
    }

    pub fn sift_fraction(&self) -> f64 {
        self.sifted as f64 / self.qubits as f64
    }

    /// Sifted error rate and its binomial standard error.
    pub fn error_rate(&self) -> Result<(f64, f64)> {
        if self.sifted == 0 {
            return Err(Error::InsufficientData("no sifted bits"));
        }
        let n = self.sifted as f64;
        let r = self.sifted_errors as f64 / n;
        Ok((r, (r * (1.0 - r) / n).sqrt()))
    }

    /// `b_s / (q_t + b_t)` with the sifted bits as `b_s`.
    pub fn efficiency(&self) -> f64 {
        self.sifted as f64 / (self.qubits + self.classical_bits) as f64
    }
}

/// Standard BB84: Alice sends, Bob measures in a random basis, bases are
/// compared publicly and mismatches discarded.
pub fn run_bb84_baseline(n_qubits: u64, attack: &AttackStrategy, seed: u64) -> Result<Bb84Stats> {
    if n_qubits == 0 {
        return Err(Error::Invalid("BB84 needs at least one qubit".into()));
    }
    let intercept = match attack {
        AttackStrategy::NoAttack => false,
        AttackStrategy::ProjectiveInterceptResend => true,
        AttackStrategy::IncoherentTwoAncilla(_) => {
            return Err(Error::Invalid(
                "BB84 baseline supports only none/projective attacks".into(),
            ))
        }
    };
    (0..n_qubits)
        .into_par_iter()
        .map(|i| {
            let mut rng = run_rng(seed, i);
            let sent = PrepState::ALL[rng.random_range(0..4)];
            let mut state = sent.state();
            if intercept {
                let eve = Basis::ALL[rng.random_range(0..2)];
                state = crate::attacks::projective_attack_step(&state, eve, &mut rng)?.1;
            }
            let bob_basis = Basis::ALL[rng.random_range(0..2)];
            let m = state.measure(&bob_basis.measurement(), QUBIT, &mut rng)?;
            let sifted = bob_basis == sent.basis();
            Ok(Bb84Stats {
                qubits: 1,
                sifted: sifted as u64,
                sifted_errors: (sifted && m.index as u8 != sent.bit()) as u64,
                classical_bits: 1,
            })
        })
        .try_reduce(Bb84Stats::default, |a, b| Ok(a.merged(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::AttackParams;

    fn record(prep: PrepState, basis: Basis, alice: u8, bob: u8) -> RunRecord {
        RunRecord {
            index: 0,
            prep,
            mode_taken: RunMode::Control,
            alice_basis: Some(basis),
            alice_outcome: Some(alice),
            alice_op: None,
            bob_outcome: Some(bob),
            detection: DetectionOutcome::NotApplicable,
            lost_forward: false,
            lost_backward: false,
            eve_record: None,
        }
    }

    #[test]
    fn detection_rules() {
        assert_eq!(
            detection_check(&record(PrepState::Zero, Basis::Z, 0, 0)),
            DetectionOutcome::Pass
        );
        assert_eq!(
            detection_check(&record(PrepState::Zero, Basis::Z, 1, 1)),
            DetectionOutcome::DetectE1
        );
        assert_eq!(
            detection_check(&record(PrepState::Zero, Basis::Z, 0, 1)),
            DetectionOutcome::DetectE2
        );
        assert_eq!(
            detection_check(&record(PrepState::Zero, Basis::X, 0, 0)),
            DetectionOutcome::NotApplicable
        );
        let mut lost = record(PrepState::Zero, Basis::Z, 0, 0);
        lost.lost_backward = true;
        assert_eq!(detection_check(&lost), DetectionOutcome::NotApplicable);
    }

    #[test]
    fn encoding_plus_with_flip_decodes_one() {
        let sim = Simulator::new(RunConfig::new(0.0, AttackStrategy::NoAttack, 1)).unwrap();
        let mut found = false;
        for i in 0..64 {
            let rec = sim.run_indexed(i, Some(1)).unwrap();
            if rec.prep == PrepState::Plus {
                assert_eq!(rec.alice_op, Some(EncodingOp::IY));
                assert_eq!(rec.bob_outcome, Some(1)); // "-"
                assert_eq!(rec.bob_bit(), Some(1));
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn honest_control_runs_pass() {
        let sim = Simulator::new(RunConfig::new(1.0, AttackStrategy::NoAttack, 2)).unwrap();
        for i in 0..500 {
            let rec = sim.run_indexed(i, None).unwrap();
            if rec.alice_basis == Some(rec.prep.basis()) {
                assert_eq!(rec.alice_outcome, Some(rec.prep.bit()));
                assert_eq!(rec.bob_outcome, rec.alice_outcome);
                assert_eq!(rec.detection, DetectionOutcome::Pass);
            } else {
                assert_eq!(rec.detection, DetectionOutcome::NotApplicable);
            }
        }
    }

    #[test]
    fn lost_runs_have_no_bob_outcome() {
        let sim = Simulator::new(RunConfig::new(0.5, AttackStrategy::NoAttack, 3).with_transmission(0.5)).unwrap();
        for rec in sim.transcript(2000).unwrap() {
            if rec.is_lost() {
                assert_eq!(rec.bob_outcome, None);
                assert_eq!(rec.detection, DetectionOutcome::NotApplicable);
            }
        }
    }

    #[test]
    fn record_fields_follow_mode() {
        let params = AttackParams::balanced(0.4).unwrap();
        let sim = Simulator::new(RunConfig::new(0.5, AttackStrategy::IncoherentTwoAncilla(params), 4)).unwrap();
        for rec in sim.transcript(1000).unwrap() {
            match rec.mode_taken {
                RunMode::Control => {
                    assert!(rec.alice_basis.is_some() && rec.alice_outcome.is_some() && rec.alice_op.is_none())
                }
                RunMode::Encoding => {
                    assert!(rec.alice_basis.is_none() && rec.alice_outcome.is_none() && rec.alice_op.is_some());
                    assert_eq!(rec.detection, DetectionOutcome::NotApplicable);
                }
            }
            assert!(rec.eve_record.is_some());
        }
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(Simulator::new(RunConfig::new(1.5, AttackStrategy::NoAttack, 0)).is_err());
        assert!(Simulator::new(RunConfig::new(0.5, AttackStrategy::NoAttack, 0).with_transmission(0.0)).is_err());
        let cfg = RunConfig::new(0.5, AttackStrategy::NoAttack, 0).with_mode(SessionMode::Qdc);
        assert!(run_session(&cfg, &SessionInput::Runs(10)).is_err());
        assert!(run_session(&cfg, &SessionInput::Payload(vec![])).is_err());
    }

    #[test]
    fn qdc_honest_delivery() {
        let payload: Vec<u8> = (0..64).map(|i| ((0xA5u64 >> (i % 8)) & 1) as u8).collect();
        let cfg = RunConfig::new(0.5, AttackStrategy::NoAttack, 9).with_mode(SessionMode::Qdc);
        let res = run_session(&cfg, &SessionInput::Payload(payload.clone())).unwrap();
        let q = res.qdc.unwrap();
        assert_eq!(q.status, QdcStatus::Delivered);
        assert_eq!(q.alice_bits, payload);
        assert_eq!(q.bob_bits, payload);
        // about two runs per delivered bit at c = 1/2
        assert!(q.runs > 64 && q.runs < 250, "runs = {}", q.runs);
    }

    #[test]
    fn loss_test_inconclusive_on_small_samples() {
        let sim = Simulator::new(RunConfig::new(0.5, AttackStrategy::NoAttack, 1).with_transmission(0.9)).unwrap();
        let stats = sim.simulate(20).unwrap();
        let r = loss_anomaly_test(&stats, 0.05).unwrap();
        assert_eq!(r.verdict, AnomalyVerdict::Inconclusive);
        assert!((r.critical - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn bb84_honest_has_no_errors() {
        let s = run_bb84_baseline(20_000, &AttackStrategy::NoAttack, 5).unwrap();
        assert_eq!(s.sifted_errors, 0);
        assert!((s.sift_fraction() - 0.5).abs() < 0.02);
        assert!(s.classical_bits as f64 / s.sifted as f64 >= 2.0 - 0.05);
        assert!(s.efficiency() <= 0.25 + 0.01);
    }

    #[test]
    fn session_seeds_differ() {
        let a: std::collections::HashSet<u64> = (0..1000).map(|i| session_seed(42, i)).collect();
        assert_eq!(a.len(), 1000);
    }
}
