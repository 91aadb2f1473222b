//! Closed-form detection, information, threshold, and efficiency results.
//!
//! Nothing here touches the simulator; these are the values the Monte
//! Carlo statistics are checked against.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::alphabet::PrepState;
use crate::error::{check_range, Error, Result};

/// Maximum detection probability of the balanced attack (`x = x′ = π/2`).
pub const D_MAX: f64 = 0.375;

/// Reference BB84 threshold for individual attacks on a lossless channel.
pub const BB84_REFERENCE_THRESHOLD: f64 = 0.15;

fn check_angle(name: &'static str, x: f64) -> Result<()> {
    check_range(name, x, 0.0, FRAC_PI_2)
}

/// Shannon binary entropy in bits, with `0·log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_range("p", p, 0.0, 1.0)?;
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// `h` on arguments already known to be in range (up to rounding).
fn h(p: f64) -> f64 {
    binary_entropy(p.clamp(0.0, 1.0)).expect("clamped")
}

/// Probability that a forward attack with `(F, x, y)` goes unnoticed for `state`.
pub fn p_nd_forward(state: PrepState, f: f64, x: f64, y: f64) -> Result<f64> {
    check_range("F", f, 0.0, 1.0)?;
    check_angle("x", x)?;
    check_angle("y", y)?;
    Ok(match state {
        PrepState::Zero | PrepState::One => f,
        PrepState::Plus | PrepState::Minus => 0.5 * (1.0 + f * x.cos() + (1.0 - f) * y.cos()),
    })
}

/// Detection probability of the double test averaged over the four preparations.
pub fn p_d_average(f: f64, x: f64, y: f64, fp: f64, xp: f64, yp: f64) -> Result<f64> {
    for (n, v) in [("F", f), ("F'", fp)] {
        check_range(n, v, 0.0, 1.0)?;
    }
    for (n, v) in [("x", x), ("y", y), ("x'", xp), ("y'", yp)] {
        check_angle(n, v)?;
    }
    let (d, dp) = (1.0 - f, 1.0 - fp);
    let (cx, cy, cxp, cyp) = (x.cos(), y.cos(), xp.cos(), yp.cos());
    Ok((7.0
        - 4.0 * f * fp
        - f * cx
        - d * cy
        - fp * cxp
        - dp * cyp
        - f * fp * cx * cxp
        - f * dp * cx * cyp
        - d * fp * cy * cxp
        - d * dp * cy * cyp)
        / 8.0)
}

/// Minimum of [`p_d_average`] over the flip weights, attained at `F = F′ = 1`.
pub fn d_min(x: f64, xp: f64) -> Result<f64> {
    check_angle("x", x)?;
    check_angle("x'", xp)?;
    Ok((1.0 - (1.0 + x.cos()) * (1.0 + xp.cos()) / 4.0) / 2.0)
}

/// Alice–Eve information of the incoherent attack with `F = F′ = 1`.
pub fn i_ae(x: f64, xp: f64) -> Result<f64> {
    check_angle("x", x)?;
    check_angle("x'", xp)?;
    Ok(1.0 - h((1.0 + x.sin() * xp.sin()) / 2.0))
}

/// Detection probability of the balanced attack `x = x′`.
pub fn d_balanced(x: f64) -> Result<f64> {
    check_angle("x", x)?;
    Ok(0.5 - (1.0 + x.cos()).powi(2) / 8.0)
}

/// Inverse of [`d_balanced`].
pub fn x_of_d(d: f64) -> Result<f64> {
    check_range("d", d, 0.0, D_MAX)?;
    Ok((2.0 * (1.0 - 2.0 * d).sqrt() - 1.0).clamp(-1.0, 1.0).acos())
}

/// Alice–Eve information of the balanced attack as a function of `d`.
pub fn i_ae_of_d(d: f64) -> Result<f64> {
    check_range("d", d, 0.0, D_MAX)?;
    let c = 2.0 * (1.0 - 2.0 * d).sqrt() - 1.0;
    Ok(1.0 - h((2.0 - c * c) / 2.0))
}

/// Alice–Bob information under the balanced attack: the average of the
/// undisturbed Z-basis channel (1 bit) and the X-basis channel with
/// success `(1 + cos²x)/2`.
pub fn i_ab(x: f64) -> Result<f64> {
    check_angle("x", x)?;
    let c = x.cos();
    Ok(1.0 - 0.5 * h((1.0 + c * c) / 2.0))
}

/// Upper bound on Eve's information for any attack whose forward part has angle `x`.
pub fn i_ae_bound(x: f64) -> Result<f64> {
    check_angle("x", x)?;
    Ok(1.0 - h((1.0 + x.sin()) / 2.0))
}

/// Probability that Eve reads `n` message bits of a QDC session before a
/// control run catches her.
pub fn qdc_eavesdrop_success(c: f64, d: f64, n: u32) -> Result<f64> {
    check_range("c", c, 0.0, 1.0)?;
    check_range("d", d, 0.0, 1.0)?;
    let denom = 1.0 - c * (1.0 - d);
    if denom <= 0.0 {
        // c = 1, d = 0: no encoding run ever happens
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    Ok(((1.0 - c) / denom).powi(n as i32))
}

/// Number of one-way channel passes a qubit makes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    OneWay,
    TwoWay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyInput {
    /// Expected secret bits received.
    pub b_s: f64,
    /// Transmitted qubits.
    pub q_t: f64,
    /// Transmitted classical bits.
    pub b_t: f64,
    /// One-way transmission probability.
    pub p: f64,
    pub channel: Channel,
}

impl EfficiencyInput {
    pub fn pp84(p: f64) -> Self {
        Self {
            b_s: 1.0,
            q_t: 1.0,
            b_t: 0.0,
            p,
            channel: Channel::TwoWay,
        }
    }

    /// Per sifted bit: two qubits sent, two basis announcements.
    pub fn bb84(p: f64) -> Self {
        Self {
            b_s: 1.0,
            q_t: 2.0,
            b_t: 2.0,
            p,
            channel: Channel::OneWay,
        }
    }
}

/// Theoretical efficiency `b_s / (q_t + b_t)` and the practical one, which
/// scales it by the probability the qubit survives every pass.
pub fn efficiency(inp: &EfficiencyInput) -> Result<(f64, f64)> {
    if inp.b_s < 0.0 || inp.q_t < 0.0 || inp.b_t < 0.0 || inp.q_t + inp.b_t <= 0.0 {
        return Err(Error::Invalid(format!("bad efficiency counts {inp:?}")));
    }
    if !(inp.p > 0.0 && inp.p <= 1.0) {
        return Err(Error::OutOfRange {
            name: "P",
            value: inp.p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let e = inp.b_s / (inp.q_t + inp.b_t);
    let survive = match inp.channel {
        Channel::OneWay => inp.p,
        Channel::TwoWay => inp.p * inp.p,
    };
    Ok((e, e * survive))
}

/// Transmission probability at which a two-way protocol with theoretical
/// efficiency `two_way` matches a one-way protocol with `one_way`:
/// `two_way·P² = one_way·P`.
pub fn efficiency_crossover(two_way: f64, one_way: f64) -> Result<f64> {
    if two_way <= 0.0 || one_way <= 0.0 {
        return Err(Error::Invalid("efficiencies must be positive".into()));
    }
    Ok(one_way / two_way)
}

/// Bisection on a bracketing interval; stops when the bracket is narrower than `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Invalid(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveCurve {
    /// Balanced incoherent attack.
    Incoherent,
    /// Bound valid for any attack.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub curve: EveCurve,
    /// Crossing angle.
    pub x: f64,
    /// Detection probability at the crossing.
    pub d: f64,
}

/// Root tolerance in `x` for [`security_threshold`].
pub const THRESHOLD_TOL: f64 = 1e-10;

/// The detection probability below which Bob knows more than Eve.
pub fn security_threshold(curve: EveCurve) -> Result<Threshold> {
    let eve = |x: f64| match curve {
        EveCurve::Incoherent => i_ae(x, x),
        EveCurve::Bound => i_ae_bound(x),
    };
    let gap = |x: f64| i_ab(x).and_then(|b| eve(x).map(|e| b - e)).unwrap_or(f64::NAN);
    let x = bisect(gap, 0.0, FRAC_PI_2, THRESHOLD_TOL)?;
    Ok(Threshold {
        curve,
        x,
        d: d_balanced(x)?,
    })
}

/// One point of the information-vs-detection curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancedAttackPoint {
    pub x: f64,
    pub d: f64,
    pub i_ab: f64,
    pub i_ae: f64,
    pub i_ae_bound: f64,
}

impl BalancedAttackPoint {
    pub fn at(x: f64) -> Result<Self> {
        Ok(Self {
            x,
            d: d_balanced(x)?,
            i_ab: i_ab(x)?,
            i_ae: i_ae(x, x)?,
            i_ae_bound: i_ae_bound(x)?,
        })
    }
}

/// `points` evenly spaced angles on `[0, π/2]`, endpoints included.
pub fn curve(points: usize) -> Result<Vec<BalancedAttackPoint>> {
    if points < 2 {
        return Err(Error::Invalid("curve needs at least 2 points".into()));
    }
    (0..points)
        .map(|k| {
            let x = if k + 1 == points {
                FRAC_PI_2
            } else {
                FRAC_PI_2 * k as f64 / (points - 1) as f64
            };
            BalancedAttackPoint::at(x)
        })
        .collect()
}

/// Best split of a detection budget between the forward and backward angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub d: f64,
    pub best_x: f64,
    pub best_x_prime: f64,
    pub best_i_ae: f64,
    pub balanced_i_ae: f64,
    pub feasible_points: usize,
    pub resolution: f64,
    pub balanced: bool,
}

/// For each target `d`, walks `x` over a grid of `grid_size` steps on
/// `[0, π/2]`, solves `d_min(x, x′) = d` for `x′`, and records where
/// `i_ae(x, x′)` peaks.
pub fn verify_lemma(grid_size: usize, targets: &[f64]) -> Result<Vec<LemmaRow>> {
    if grid_size < 50 {
        return Err(Error::Invalid(format!("grid size {grid_size} < 50")));
    }
    let resolution = FRAC_PI_2 / grid_size as f64;
    targets
        .iter()
        .map(|&d| {
            check_range("d", d, 0.0, D_MAX)?;
            // (1 + cos x)(1 + cos x′) = 4(1 − 2d)
            let k = 4.0 * (1.0 - 2.0 * d);
            let mut best: Option<(f64, f64, f64)> = None;
            let mut feasible = 0;
            for step in 0..=grid_size {
                let x = if step == grid_size {
                    FRAC_PI_2
                } else {
                    resolution * step as f64
                };
                let c = k / (1.0 + x.cos()) - 1.0;
                if !(-1e-12..=1.0 + 1e-12).contains(&c) {
                    continue;
                }
                let xp = c.clamp(0.0, 1.0).acos();
                feasible += 1;
                let info = i_ae(x, xp)?;
                if best.is_none_or(|(b, _, _)| info > b) {
                    best = Some((info, x, xp));
                }
            }
            let (best_i_ae, best_x, best_x_prime) = best.ok_or(Error::InsufficientData("no feasible split"))?;
            let balanced_i_ae = i_ae_of_d(d)?;
            Ok(LemmaRow {
                d,
                best_x,
                best_x_prime,
                best_i_ae,
                balanced_i_ae,
                feasible_points: feasible,
                resolution,
                balanced: (best_x - best_x_prime).abs() <= resolution,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    // Independent definition in natural logs.
    fn entropy_oracle(p: f64) -> f64 {
        let t = |q: f64| {
            if q == 0.0 {
                0.0
            } else {
                -q * q.ln() / std::f64::consts::LN_2
            }
        };
        t(p) + t(1.0 - p)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.75).unwrap() - entropy_oracle(0.75)).abs() < 1e-14);
        assert!((binary_entropy(0.75).unwrap() - 0.811278).abs() < 1e-6);
        assert!(binary_entropy(1.2).is_err());
    }

    #[test]
    fn non_detection() {
        assert_eq!(p_nd_forward(PrepState::Zero, 0.9, 0.3, 1.2).unwrap(), 0.9);
        assert_eq!(p_nd_forward(PrepState::One, 0.9, 0.3, 1.2).unwrap(), 0.9);
        assert!((p_nd_forward(PrepState::Plus, 1.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((p_nd_forward(PrepState::Minus, 1.0, FRAC_PI_2, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(p_nd_forward(PrepState::Plus, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn averaged_detection() {
        assert!((p_d_average(1.0, FRAC_PI_2, 0.3, 1.0, FRAC_PI_2, 0.9).unwrap() - 0.375).abs() < 1e-15);
        assert!(p_d_average(1.0, 0.0, 0.0, 1.0, 0.0, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn averaged_detection_matches_survival_product() {
        let (f, x, y, fp, xp, yp) = (0.9, 1.0, 0.5, 0.8, 1.2, 0.3);
        let survive: f64 = PrepState::ALL
            .iter()
            .map(|&s| p_nd_forward(s, f, x, y).unwrap() * p_nd_forward(s, fp, xp, yp).unwrap())
            .sum::<f64>()
            / 4.0;
        assert!((p_d_average(f, x, y, fp, xp, yp).unwrap() - (1.0 - survive)).abs() < 1e-14);
    }

    #[test]
    fn minimum_detection() {
        assert!((d_min(FRAC_PI_2, FRAC_PI_2).unwrap() - 0.375).abs() < 1e-15);
        assert!(d_min(0.0, 0.0).unwrap().abs() < 1e-15);
        assert!((d_min(FRAC_PI_2, 0.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eve_information() {
        assert!((i_ae(FRAC_PI_2, FRAC_PI_2).unwrap() - 1.0).abs() < 1e-12);
        for xp in [0.0, 0.3, FRAC_PI_2] {
            assert!(i_ae(0.0, xp).unwrap().abs() < 1e-15);
        }
        // 1 − h(0.75)
        assert!((i_ae(FRAC_PI_4, FRAC_PI_4).unwrap() - (1.0 - entropy_oracle(0.75))).abs() < 1e-12);
        assert!((i_ae(FRAC_PI_4, FRAC_PI_4).unwrap() - 0.188722).abs() < 1e-6);
    }

    #[test]
    fn balanced_detection_round_trip() {
        assert!((d_balanced(FRAC_PI_2).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(d_balanced(0.0).unwrap(), 0.0);
        assert!((x_of_d(d_balanced(0.7).unwrap()).unwrap() - 0.7).abs() < 1e-12);
        assert!(x_of_d(0.4).is_err());
        // 0.5 − (1 + √2/2)²/8
        let oracle = 0.5 - (1.0 + 2f64.sqrt() / 2.0).powi(2) / 8.0;
        assert!((d_balanced(FRAC_PI_4).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.135723).abs() < 1e-6);
    }

    #[test]
    fn eve_information_of_d() {
        assert!((i_ae_of_d(0.375).unwrap() - 1.0).abs() < 1e-12);
        assert!(i_ae_of_d(0.0).unwrap().abs() < 1e-12);
        for k in 0..50 {
            let x = FRAC_PI_2 * k as f64 / 49.0;
            let lhs = i_ae_of_d(d_balanced(x).unwrap().min(D_MAX)).unwrap();
            assert!((lhs - i_ae(x, x).unwrap()).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn bob_information() {
        assert!((i_ab(FRAC_PI_2).unwrap() - 0.5).abs() < 1e-12);
        assert!((i_ab(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((i_ab(FRAC_PI_4).unwrap() - (1.0 - 0.5 * entropy_oracle(0.75))).abs() < 1e-12);
        assert!((i_ab(FRAC_PI_4).unwrap() - 0.594361).abs() < 1e-6);
    }

    #[test]
    fn bound_dominates() {
        assert!((i_ae_bound(FRAC_PI_2).unwrap() - 1.0).abs() < 1e-12);
        assert!(i_ae_bound(0.0).unwrap().abs() < 1e-12);
        for k in 0..=100 {
            let x = FRAC_PI_2 * k as f64 / 100.0;
            assert!(i_ae_bound(x).unwrap() >= i_ae(x, x).unwrap() - 1e-15);
        }
    }

    #[test]
    fn thresholds() {
        let inc = security_threshold(EveCurve::Incoherent).unwrap();
        let bnd = security_threshold(EveCurve::Bound).unwrap();
        assert!((inc.d - 0.230).abs() <= 0.005, "{inc:?}");
        assert!((bnd.d - 0.185).abs() <= 0.005, "{bnd:?}");
        assert!(bnd.d < inc.d);
        assert!((i_ab(inc.x).unwrap() - i_ae(inc.x, inc.x).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn bisection_requires_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_err());
        let r = bisect(|x| x - 0.3, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn qdc_success() {
        assert!((qdc_eavesdrop_success(0.5, 0.375, 8).unwrap() - 0.0779).abs() < 5e-4);
        assert!((qdc_eavesdrop_success(0.5, 0.375, 16).unwrap() - 0.0061).abs() < 5e-4);
        assert_eq!(qdc_eavesdrop_success(0.3, 0.2, 0).unwrap(), 1.0);
    }

    #[test]
    fn efficiencies() {
        let (e, _) = efficiency(&EfficiencyInput::pp84(1.0)).unwrap();
        assert_eq!(e, 1.0);
        let (e, ep) = efficiency(&EfficiencyInput::bb84(0.6)).unwrap();
        assert_eq!(e, 0.25);
        assert!((ep - 0.6 / 4.0).abs() < 1e-15);
        assert_eq!(efficiency_crossover(1.0, 0.25).unwrap(), 0.25);
        let (_, pp) = efficiency(&EfficiencyInput::pp84(0.1)).unwrap();
        let (_, bb) = efficiency(&EfficiencyInput::bb84(0.1)).unwrap();
        assert!(pp < bb);
    }

    #[test]
    fn curve_endpoints() {
        let c = curve(9).unwrap();
        let first = c[0];
        assert_eq!(
            (first.d, first.i_ab, first.i_ae, first.i_ae_bound),
            (0.0, 1.0, 0.0, 0.0)
        );
        let last = c[8];
        assert!((last.d - 0.375).abs() < 1e-15 && (last.i_ab - 0.5).abs() < 1e-12 && (last.i_ae - 1.0).abs() < 1e-12);
        assert!((c[4].x - FRAC_PI_4).abs() < 1e-15 && (c[2].x - FRAC_PI_8).abs() < 1e-15);
        assert!(curve(1).is_err());
    }

    #[test]
    fn lemma_edge_cases() {
        let rows = verify_lemma(100, &[0.375, 1e-6]).unwrap();
        assert_eq!(rows[0].feasible_points, 1);
        assert!((rows[0].best_x - FRAC_PI_2).abs() < 1e-12 && rows[0].balanced);
        assert!(rows[1].best_i_ae < 1e-5);
        assert!(verify_lemma(10, &[0.1]).is_err());
    }
}
