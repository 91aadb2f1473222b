//! Session counters and empirical estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::alphabet::Basis;
use crate::error::{Error, Result};
use crate::protocol::{DetectionOutcome, RunMode, RunRecord};

/// A 2×2 contingency table indexed `[row][col]`.
pub type Joint = [[u64; 2]; 2];

/// Aggregated counts of a session. Merging is plain addition, so any split
/// of a session into parts merges back to the whole.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStats {
    pub runs: u64,
    /// Indexed by [`RunMode::index`].
    pub mode_runs: [u64; 2],
    /// Indexed by [`PrepState::index`](crate::alphabet::PrepState::index).
    pub prep_runs: [u64; 4],
    pub applicable_checks: u64,
    pub pass: u64,
    pub detect_e1: u64,
    pub detect_e2: u64,
    /// Per mode, qubits lost on the way to Alice.
    pub lost_forward: [u64; 2],
    /// Per mode, qubits lost on the way back to Bob.
    pub lost_backward: [u64; 2],
    /// Delivered encoding runs by Bob's basis: Alice's bit × Bob's decoded bit.
    pub alice_bob: [Joint; 2],
    /// Delivered encoding runs by Bob's basis: Alice's bit × Eve's guessed bit.
    pub alice_eve: [Joint; 2],
}

fn add_joint(a: &mut Joint, b: &Joint) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += y;
        }
    }
}

fn table_total(t: &Joint) -> u64 {
    t.iter().flatten().sum()
}

impl SessionStats {
    pub fn record(&mut self, rec: &RunRecord) {
        self.runs += 1;
        self.mode_runs[rec.mode_taken.index()] += 1;
        self.prep_runs[rec.prep.index()] += 1;
        let m = rec.mode_taken.index();
        if rec.lost_forward {
            self.lost_forward[m] += 1;
        }
        if rec.lost_backward {
            self.lost_backward[m] += 1;
        }
        match rec.detection {
            DetectionOutcome::NotApplicable => {}
            DetectionOutcome::Pass => self.pass += 1,
            DetectionOutcome::DetectE1 => self.detect_e1 += 1,
            DetectionOutcome::DetectE2 => self.detect_e2 += 1,
        }
        if rec.detection != DetectionOutcome::NotApplicable {
            self.applicable_checks += 1;
        }
        if let (Some(a), Some(b)) = (rec.alice_bit(), rec.bob_bit()) {
            let basis = rec.prep.basis().index();
            self.alice_bob[basis][a as usize][b as usize] += 1;
            if let Some(eve) = rec.eve_record {
                self.alice_eve[basis][a as usize][eve.op_guess.bit() as usize] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &SessionStats) {
        self.runs += other.runs;
        self.applicable_checks += other.applicable_checks;
        self.pass += other.pass;
        self.detect_e1 += other.detect_e1;
        self.detect_e2 += other.detect_e2;
        for i in 0..2 {
            self.mode_runs[i] += other.mode_runs[i];
            self.lost_forward[i] += other.lost_forward[i];
            self.lost_backward[i] += other.lost_backward[i];
            add_joint(&mut self.alice_bob[i], &other.alice_bob[i]);
            add_joint(&mut self.alice_eve[i], &other.alice_eve[i]);
        }
        for i in 0..4 {
            self.prep_runs[i] += other.prep_runs[i];
        }
    }

    pub fn merged(mut self, other: &SessionStats) -> SessionStats {
        self.merge(other);
        self
    }

    pub fn lost(&self, mode: RunMode) -> u64 {
        self.lost_forward[mode.index()] + self.lost_backward[mode.index()]
    }

    pub fn basis_runs(&self, basis: Basis) -> u64 {
        match basis {
            Basis::Z => self.prep_runs[0] + self.prep_runs[1],
            Basis::X => self.prep_runs[2] + self.prep_runs[3],
        }
    }

    pub fn detections(&self) -> u64 {
        self.detect_e1 + self.detect_e2
    }

    /// Alice × Bob over both bases.
    pub fn alice_bob_total(&self) -> Joint {
        let mut t = self.alice_bob[0];
        add_joint(&mut t, &self.alice_bob[1]);
        t
    }

    /// Alice × Eve over both bases.
    pub fn alice_eve_total(&self) -> Joint {
        let mut t = self.alice_eve[0];
        add_joint(&mut t, &self.alice_eve[1]);
        t
    }

    pub fn delivered_encodings(&self) -> u64 {
        table_total(&self.alice_bob_total())
    }

    /// Fraction of Bob's decoded bits that differ from Alice's.
    pub fn bob_error_rate(&self) -> Result<Estimate> {
        agreement(&self.alice_bob_total()).map(|e| e.complement())
    }
}

/// A binomial proportion with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub rate: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn proportion(hits: u64, samples: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InsufficientData("no samples"));
        }
        let n = samples as f64;
        let rate = hits as f64 / n;
        Ok(Self {
            rate,
            stderr: (rate * (1.0 - rate) / n).sqrt(),
            samples,
        })
    }

    fn complement(self) -> Self {
        Self {
            rate: 1.0 - self.rate,
            ..self
        }
    }
}

/// Detection rate over applicable control checks.
pub fn estimate_detection(stats: &SessionStats) -> Result<Estimate> {
    if stats.applicable_checks == 0 {
        return Err(Error::InsufficientData("no applicable control checks"));
    }
    Estimate::proportion(stats.detections(), stats.applicable_checks)
}

/// Fraction of diagonal entries of a 2×2 table.
pub fn agreement(joint: &Joint) -> Result<Estimate> {
    Estimate::proportion(joint[0][0] + joint[1][1], table_total(joint))
}

/// Plug-in mutual information of a 2×2 count table, in bits.
pub fn mutual_information_from_counts(joint: &Joint) -> Result<f64> {
    let total = table_total(joint);
    if total == 0 {
        return Err(Error::InsufficientData("empty contingency table"));
    }
    let n = total as f64;
    let rows = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let cols = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let k = joint[a][b];
            if k == 0 {
                continue;
            }
            let p = k as f64 / n;
            mi += p * (k as f64 * n / (rows[a] as f64 * cols[b] as f64)).log2();
        }
    }
    Ok(mi.max(0.0))
}

/// Alice–Bob information per preparation basis and their average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BobInformation {
    pub i_z: f64,
    pub i_x: f64,
    pub averaged: f64,
}

pub fn i_ab_per_basis(stats: &SessionStats) -> Result<BobInformation> {
    let z = &stats.alice_bob[Basis::Z.index()];
    let x = &stats.alice_bob[Basis::X.index()];
    if table_total(z) == 0 || table_total(x) == 0 {
        return Err(Error::InsufficientData(
            "encoding runs missing in one preparation basis",
        ));
    }
    let i_z = mutual_information_from_counts(z)?;
    let i_x = mutual_information_from_counts(x)?;
    Ok(BobInformation {
        i_z,
        i_x,
        averaged: (i_z + i_x) / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Empirical-vs-analytic comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub quantity: String,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
    /// Non-finite when the standard error is zero and the values differ.
    pub z: f64,
    pub verdict: Verdict,
}

/// Two-sided critical value for `significance`.
pub fn critical_z(significance: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - significance / 2.0)
}

/// Compares with a significance level.
pub fn compare(quantity: &str, analytic: f64, empirical: f64, stderr: f64, significance: f64) -> ComparisonReport {
    compare_z(quantity, analytic, empirical, stderr, critical_z(significance))
}

/// Compares with an explicit `|z|` threshold.
pub fn compare_z(quantity: &str, analytic: f64, empirical: f64, stderr: f64, threshold: f64) -> ComparisonReport {
    let diff = empirical - analytic;
    let z = if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    ComparisonReport {
        quantity: quantity.to_string(),
        analytic,
        empirical,
        stderr,
        z,
        verdict: if z.abs() <= threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    }
}
