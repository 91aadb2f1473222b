//! End-to-end acceptance criteria. Runs as a plain binary so that every
//! criterion prints its verdict line; exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::time::Instant;

use pp84_core::analytics::{
    self, d_balanced, d_min, efficiency, efficiency_crossover, i_ab, i_ae, i_ae_of_d, p_d_average,
    qdc_eavesdrop_success, security_threshold, verify_lemma, EfficiencyInput, EveCurve,
};
use pp84_core::attacks::{AttackParams, AttackStrategy};
use pp84_core::protocol::{
    loss_anomaly_test, qdc_success_frequency, run_bb84_baseline, session_seed, AnomalyVerdict, ControlBasis, RunConfig,
    Simulator,
};
use pp84_core::stats::{agreement, estimate_detection, i_ab_per_basis, mutual_information_from_counts, Estimate};

const SEED: u64 = 84;
/// Sampling tolerance in binomial standard errors.
const Z_MAX: f64 = 4.0;
const MI_TOL: f64 = 0.01;

const GRID: [f64; 5] = [0.0, FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(est: &Estimate, analytic: f64) -> bool {
    if est.stderr == 0.0 {
        (est.rate - analytic).abs() <= 1e-12
    } else {
        ((est.rate - analytic) / est.stderr).abs() <= Z_MAX
    }
}

fn fmt_est(est: &Estimate, analytic: f64) -> String {
    format!(
        "{:.5}±{:.5} vs {:.5} (n={})",
        est.rate, est.stderr, analytic, est.samples
    )
}

fn c1_projective_detection() -> Outcome {
    let cfg = RunConfig::new(1.0, AttackStrategy::ProjectiveInterceptResend, SEED);
    let stats = Simulator::new(cfg).unwrap().simulate(220_000).unwrap();
    let est = estimate_detection(&stats).unwrap();
    Outcome {
        pass: est.samples >= 100_000 && within(&est, 0.375),
        detail: fmt_est(&est, 0.375),
    }
}

fn c2_bb84() -> Outcome {
    let s = run_bb84_baseline(220_000, &AttackStrategy::ProjectiveInterceptResend, SEED).unwrap();
    let est = Estimate::proportion(s.sifted_errors, s.sifted).unwrap();
    Outcome {
        pass: s.sifted >= 100_000 && within(&est, 0.25),
        detail: fmt_est(&est, 0.25),
    }
}

fn balanced(x: f64) -> AttackStrategy {
    AttackStrategy::IncoherentTwoAncilla(AttackParams::balanced(x).unwrap())
}

fn c3_incoherent_detection() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &x) in GRID.iter().enumerate() {
        let cfg = RunConfig::new(1.0, balanced(x), SEED + k as u64);
        let stats = Simulator::new(cfg).unwrap().simulate(220_000).unwrap();
        let est = estimate_detection(&stats).unwrap();
        let d = d_balanced(x).unwrap();
        pass &= est.samples >= 100_000 && within(&est, d);
        parts.push(format!("x={x:.4}: {}", fmt_est(&est, d)));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

/// Encoding-only sessions shared by criteria 4 and 5.
fn encoding_sessions() -> Vec<(f64, pp84_core::stats::SessionStats)> {
    GRID.iter()
        .enumerate()
        .map(|(k, &x)| {
            let cfg = RunConfig::new(0.0, balanced(x), SEED + 100 + k as u64);
            (x, Simulator::new(cfg).unwrap().simulate(100_000).unwrap())
        })
        .collect()
}

fn c4_eve_information(sessions: &[(f64, pp84_core::stats::SessionStats)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (x, stats) in sessions {
        let table = stats.alice_eve_total();
        let est = agreement(&table).unwrap();
        let want = (1.0 + x.sin().powi(2)) / 2.0;
        let mi = mutual_information_from_counts(&table).unwrap();
        let mi_want = i_ae(*x, *x).unwrap();
        pass &= est.samples >= 100_000 && within(&est, want) && (mi - mi_want).abs() <= MI_TOL;
        parts.push(format!(
            "x={x:.4}: rate {} MI {mi:.4} vs {mi_want:.4}",
            fmt_est(&est, want)
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn entropy_of_rows(t: &[[u64; 2]; 2]) -> f64 {
    let n = (t[0][0] + t[0][1] + t[1][0] + t[1][1]) as f64;
    let p = (t[0][0] + t[0][1]) as f64 / n;
    analytics::binary_entropy(p).unwrap()
}

fn c5_bob_information(sessions: &[(f64, pp84_core::stats::SessionStats)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (x, stats) in sessions {
        let z = &stats.alice_bob[0];
        let xs = &stats.alice_bob[1];
        let info = i_ab_per_basis(stats).unwrap();
        // Z stratum is error-free, so the plug-in MI is exactly Alice's bit entropy.
        let z_exact = z[0][1] == 0 && z[1][0] == 0 && (info.i_z - entropy_of_rows(z)).abs() < 1e-12;
        let est = agreement(xs).unwrap();
        let want = (1.0 + x.cos().powi(2)) / 2.0;
        let avg_want = i_ab(*x).unwrap();
        pass &= z_exact
            && (info.i_z - 1.0).abs() < 1e-3
            && within(&est, want)
            && (info.averaged - avg_want).abs() <= MI_TOL;
        parts.push(format!(
            "x={x:.4}: I_z={:.6} exact={z_exact} X-rate {} I_avg {:.4} vs {avg_want:.4}",
            info.i_z,
            fmt_est(&est, want),
            info.averaged
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn c6_thresholds() -> Outcome {
    let inc = security_threshold(EveCurve::Incoherent).unwrap();
    let bnd = security_threshold(EveCurve::Bound).unwrap();
    let gap_inc = (i_ab(inc.x).unwrap() - i_ae(inc.x, inc.x).unwrap()).abs();
    let gap_bnd = (i_ab(bnd.x).unwrap() - analytics::i_ae_bound(bnd.x).unwrap()).abs();
    let pass = (0.225..=0.235).contains(&inc.d)
        && (0.180..=0.190).contains(&bnd.d)
        && bnd.d < inc.d
        && gap_inc < 1e-9
        && gap_bnd < 1e-9;
    Outcome {
        pass,
        detail: format!(
            "d*(incoherent)={:.6} (x={:.10}), d*(bound)={:.6} (x={:.10})",
            inc.d, inc.x, bnd.d, bnd.x
        ),
    }
}

fn c7_qdc() -> Outcome {
    let a8 = qdc_eavesdrop_success(0.5, 0.375, 8).unwrap();
    let a16 = qdc_eavesdrop_success(0.5, 0.375, 16).unwrap();
    let mut pass = (a8 - 0.0779).abs() <= 5e-4 && (a16 - 0.0061).abs() <= 5e-4;
    let mut parts = vec![format!("analytic n=8 {a8:.5}, n=16 {a16:.5}")];
    // Every control run is a check, the accounting behind the closed form.
    let cfg = RunConfig::new(0.5, AttackStrategy::ProjectiveInterceptResend, SEED)
        .with_control_basis(ControlBasis::MatchPreparation);
    for (n, analytic) in [(8usize, a8), (16, a16)] {
        let payload: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
        let (hits, total) = qdc_success_frequency(&cfg, &payload, 100_000).unwrap();
        let est = Estimate::proportion(hits, total).unwrap();
        pass &= within(&est, analytic);
        parts.push(format!("MC n={n}: {}", fmt_est(&est, analytic)));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn c8_efficiency() -> Outcome {
    let (pp, _) = efficiency(&EfficiencyInput::pp84(1.0)).unwrap();
    let (bb, _) = efficiency(&EfficiencyInput::bb84(1.0)).unwrap();
    let cross = efficiency_crossover(pp, bb).unwrap();
    let (_, pp_c) = efficiency(&EfficiencyInput::pp84(cross)).unwrap();
    let (_, bb_c) = efficiency(&EfficiencyInput::bb84(cross)).unwrap();
    Outcome {
        pass: pp == 1.0 && bb == 0.25 && cross == 0.25 && pp_c == bb_c,
        detail: format!("E_pp84={pp}, E_bb84={bb}, crossover P={cross}, E'={pp_c} vs {bb_c}"),
    }
}

fn grid(n: usize, hi: f64) -> Vec<f64> {
    (0..n).map(|k| hi * k as f64 / (n - 1) as f64).collect()
}

fn c9_formula_consistency() -> Outcome {
    let angles = grid(9, FRAC_PI_2);
    let fs = grid(9, 1.0);
    let mut max_eq = 0.0f64;
    for &x in &angles {
        for &xp in &angles {
            let dm = d_min(x, xp).unwrap();
            for &y in &angles {
                for &yp in &angles {
                    max_eq = max_eq.max((p_d_average(1.0, x, y, 1.0, xp, yp).unwrap() - dm).abs());
                }
            }
        }
    }
    let mut max_comp = 0.0f64;
    for x in grid(50, FRAC_PI_2) {
        let d = d_balanced(x).unwrap().min(analytics::D_MAX);
        max_comp = max_comp.max((i_ae_of_d(d).unwrap() - i_ae(x, x).unwrap()).abs());
    }
    let mut worst = f64::INFINITY;
    for &f in &fs {
        for &fp in &fs {
            for &x in &angles {
                for &xp in &angles {
                    let dm = d_min(x, xp).unwrap();
                    for &y in &angles {
                        for &yp in &angles {
                            worst = worst.min(p_d_average(f, x, y, fp, xp, yp).unwrap() - dm);
                        }
                    }
                }
            }
        }
    }
    Outcome {
        pass: max_eq <= 1e-12 && max_comp <= 1e-9 && worst >= -1e-12,
        detail: format!(
            "|P_d(F=1)-d_min|≤{max_eq:.1e}, |I_AE(d(x))-I_AE(x,x)|≤{max_comp:.1e}, min(P_d-d_min)={worst:.1e}"
        ),
    }
}

fn c10_lemma() -> Outcome {
    let rows = verify_lemma(100, &[0.05, 0.1, 0.2, 0.3]).unwrap();
    let pass = rows
        .iter()
        .all(|r| (r.best_x - r.best_x_prime).abs() <= std::f64::consts::PI / 200.0);
    let detail = rows
        .iter()
        .map(|r| format!("d={}: x={:.4} x'={:.4}", r.d, r.best_x, r.best_x_prime))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail }
}

fn c11_honest_channel() -> Outcome {
    let cfg = RunConfig::new(0.5, AttackStrategy::NoAttack, SEED);
    let stats = Simulator::new(cfg).unwrap().simulate(1_000_000).unwrap();
    let t = stats.alice_bob_total();
    let decode_errors = t[0][1] + t[1][0];
    Outcome {
        pass: stats.runs == 1_000_000 && stats.detections() == 0 && decode_errors == 0,
        detail: format!(
            "runs={} checks={} detections={} decoded={} errors={decode_errors}",
            stats.runs,
            stats.applicable_checks,
            stats.detections(),
            stats.delivered_encodings()
        ),
    }
}

fn anomaly_rate(make: impl Fn(u64) -> RunConfig + Sync, sessions: u64) -> f64 {
    use rayon::prelude::*;
    let flagged: u64 = (0..sessions)
        .into_par_iter()
        .map(|s| {
            let stats = Simulator::new(make(session_seed(SEED, s)))
                .unwrap()
                .simulate(20_000)
                .unwrap();
            (loss_anomaly_test(&stats, 0.05).unwrap().verdict == AnomalyVerdict::Anomaly) as u64
        })
        .sum();
    flagged as f64 / sessions as f64
}

fn c12_loss_anomaly() -> Outcome {
    let null = anomaly_rate(
        |seed| RunConfig::new(0.5, AttackStrategy::NoAttack, seed).with_transmission(0.9),
        1_000,
    );
    let power = anomaly_rate(
        |seed| RunConfig::new(0.5, AttackStrategy::NoAttack, seed ^ 0xA5A5).with_mode_transmission(0.8, 0.9),
        1_000,
    );
    Outcome {
        pass: null <= 0.05 && power >= 0.99,
        detail: format!("null rejection {null:.3}, power {power:.3}"),
    }
}

fn main() {
    let start = Instant::now();
    let mut failures = 0;
    let mut report = |id: u32, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {id:>2} {name} ({:.1}s): {}",
            t.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failures += 1;
        }
    };
    report(1, "projective detection", &c1_projective_detection);
    report(2, "BB84 intercept-resend error", &c2_bb84);
    report(3, "incoherent detection curve", &c3_incoherent_detection);
    let sessions = encoding_sessions();
    report(4, "Eve information", &|| c4_eve_information(&sessions));
    report(5, "Bob information", &|| c5_bob_information(&sessions));
    report(6, "security thresholds", &c6_thresholds);
    report(7, "QDC eavesdrop success", &c7_qdc);
    report(8, "efficiency crossover", &c8_efficiency);
    report(9, "formula consistency", &c9_formula_consistency);
    report(10, "balanced-attack lemma", &c10_lemma);
    report(11, "honest channel", &c11_honest_channel);
    report(12, "loss anomaly calibration", &c12_loss_anomaly);
    println!(
        "acceptance: {} failed, {:.1}s total",
        failures,
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
