//! Analytic expectations for a configured attack, and the reports that
//! compare a simulated session against them.

use crate::alphabet::Basis;
use crate::analytics::{binary_entropy, d_min, i_ae, p_d_average};
use crate::attacks::{AttackParams, AttackStrategy};
use crate::error::Result;
use crate::protocol::{ControlBasis, RunConfig};
use crate::stats::{
    agreement, compare_z, estimate_detection, i_ab_per_basis, mutual_information_from_counts, ComparisonReport,
    Estimate, SessionStats, Verdict,
};

/// Detection probability of random-basis intercept-resend on applicable checks:
/// invisible with the right basis, caught 3/4 of the time with the wrong one.
pub fn intercept_resend_detection() -> f64 {
    0.5 * 0.0 + 0.5 * (1.0 - 0.5 * 0.5)
}

/// Detection probability per applicable control check.
pub fn expected_detection(attack: &AttackStrategy) -> Result<f64> {
    match attack {
        AttackStrategy::NoAttack => Ok(0.0),
        AttackStrategy::ProjectiveInterceptResend => Ok(intercept_resend_detection()),
        AttackStrategy::IncoherentTwoAncilla(p) => p_d_average(p.f_fwd, p.x, p.y, p.f_bwd, p.x_prime, p.y_prime),
    }
}

/// Probability that a control run is an applicable check.
pub fn check_fraction(policy: ControlBasis) -> f64 {
    match policy {
        ControlBasis::Random => 0.5,
        ControlBasis::MatchPreparation => 1.0,
    }
}

/// Detection probability per control run, the `d` that enters the QDC
/// success formula for this configuration.
pub fn per_control_detection(config: &RunConfig) -> Result<f64> {
    Ok(expected_detection(&config.attack)? * check_fraction(config.control_basis))
}

fn minimal(p: &AttackParams) -> bool {
    p.f_fwd == 1.0 && p.f_bwd == 1.0
}

/// Probability that Eve's guess of Alice's operation is right.
pub fn expected_eve_correct(attack: &AttackStrategy) -> Option<f64> {
    match attack {
        AttackStrategy::NoAttack => None,
        // right basis: always; wrong basis: a coin flip
        AttackStrategy::ProjectiveInterceptResend => Some(0.75),
        AttackStrategy::IncoherentTwoAncilla(p) if minimal(p) => Some((1.0 + p.x.sin() * p.x_prime.sin()) / 2.0),
        AttackStrategy::IncoherentTwoAncilla(_) => None,
    }
}

/// Probability that Bob decodes correctly, per preparation basis.
pub fn expected_bob_correct(attack: &AttackStrategy, basis: Basis) -> Option<f64> {
    match attack {
        AttackStrategy::NoAttack => Some(1.0),
        AttackStrategy::ProjectiveInterceptResend => Some(0.75),
        AttackStrategy::IncoherentTwoAncilla(p) => match basis {
            // flips on the two passes are independent and cancel in pairs
            Basis::Z => Some(p.f_fwd * p.f_bwd + p.d_fwd() * p.d_bwd()),
            Basis::X if minimal(p) => Some((1.0 + p.x.cos() * p.x_prime.cos()) / 2.0),
            Basis::X => None,
        },
    }
}

fn info_of_correct_rate(p: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(p)?)
}

/// Delta-method standard error of `1 − h(p̂)` for a binomial `p̂`.
fn info_stderr(est: &Estimate) -> f64 {
    let p = est.rate;
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    ((1.0 - p) / p).log2().abs() * est.stderr
}

fn push_rate(out: &mut Vec<ComparisonReport>, name: &str, analytic: f64, est: Estimate, z_max: f64) {
    out.push(compare_z(name, analytic, est.rate, est.stderr, z_max));
}

/// Information reports pass within `tolerance` bits, or within `z_max`
/// delta-method standard errors when sampling noise exceeds the tolerance.
fn info_report(name: &str, analytic: f64, empirical: f64, stderr: f64, z_max: f64, tolerance: f64) -> ComparisonReport {
    let mut r = compare_z(name, analytic, empirical, stderr, z_max);
    if (empirical - analytic).abs() <= tolerance {
        r.verdict = Verdict::Pass;
        if !r.z.is_finite() {
            r.z = 0.0;
        }
    }
    r
}

/// Every empirical-vs-analytic comparison available for `config`'s attack.
///
/// Information comparisons carry a delta-method standard error and pass
/// within `mi_tolerance` bits or `z_max` standard errors.
pub fn comparisons(
    config: &RunConfig,
    stats: &SessionStats,
    z_max: f64,
    mi_tolerance: f64,
) -> Result<Vec<ComparisonReport>> {
    let mut out = Vec::new();
    let attack = &config.attack;

    if let Ok(est) = estimate_detection(stats) {
        push_rate(&mut out, "detection", expected_detection(attack)?, est, z_max);
    }

    for basis in Basis::ALL {
        let table = &stats.alice_bob[basis.index()];
        if let (Some(analytic), Ok(est)) = (expected_bob_correct(attack, basis), agreement(table)) {
            push_rate(
                &mut out,
                &format!("bob_correct_{}", basis.to_string().to_lowercase()),
                analytic,
                est,
                z_max,
            );
        }
    }
    if let AttackStrategy::IncoherentTwoAncilla(p) = attack {
        if minimal(p) {
            if let (Ok(info), Ok(x_est)) = (i_ab_per_basis(stats), agreement(&stats.alice_bob[Basis::X.index()])) {
                let i_z = info_of_correct_rate(1.0)?;
                let i_x = info_of_correct_rate((1.0 + p.x.cos() * p.x_prime.cos()) / 2.0)?;
                // Z decodes perfectly here, so the noise is all in the X half.
                let se = info_stderr(&x_est) / 2.0;
                out.push(info_report(
                    "i_ab",
                    (i_z + i_x) / 2.0,
                    info.averaged,
                    se,
                    z_max,
                    mi_tolerance,
                ));
            }
        }
    }

    let eve_table = stats.alice_eve_total();
    if let (Some(analytic), Ok(est)) = (expected_eve_correct(attack), agreement(&eve_table)) {
        push_rate(&mut out, "eve_correct", analytic, est, z_max);
        let analytic_info = match attack {
            AttackStrategy::IncoherentTwoAncilla(p) => i_ae(p.x, p.x_prime)?,
            _ => info_of_correct_rate(analytic)?,
        };
        let empirical = mutual_information_from_counts(&eve_table)?;
        out.push(info_report(
            "i_ae",
            analytic_info,
            empirical,
            info_stderr(&est),
            z_max,
            mi_tolerance,
        ));
    }
    Ok(out)
}

/// `d_min` for incoherent attacks with `F = F′ = 1`; convenience for reports.
pub fn minimal_detection(params: &AttackParams) -> Result<f64> {
    d_min(params.x, params.x_prime)
}
