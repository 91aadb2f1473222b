//! Eavesdropping strategies on the forward (E1) and backward (E2) passes.
//!
//! The incoherent attack attaches a fresh 4-dimensional ancilla on each
//! pass. With `e1..e4` the ancilla's computational basis, the relative
//! states are
//!
//! ```text
//! ε̃00 = e1            ε̃11 = cos x·e1 + sin x·e2
//! ε̃01 = e3            ε̃10 = cos y·e3 + sin y·e4
//! ```
//!
//! and `|a⟩|ε⟩ ↦ Σ_b |b⟩|ε_ab⟩` with weights `√F` (no flip) and `√(1−F)` (flip).
//! The no-flip and flip pairs live in orthogonal planes, so Eve can first
//! tell the planes apart and then run a two-state Helstrom measurement
//! inside the plane she found.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Basis, EncodingOp};
use crate::error::{check_range, Error, Result};
use crate::qmath::{extend_orthonormal, Isometry, MeasurementBasis, StateVector, C64, TOL};

pub const ANCILLA_DIM: usize = 4;

/// Subsystem layout after the backward attack: `[qubit, η, ε]`.
pub const QUBIT: usize = 0;
pub const ETA: usize = 1;
pub const EPS: usize = 2;

/// Parameters of the incoherent two-ancilla attack. The flip weights
/// `D = 1 − F` and `D′ = 1 − F′` are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    pub f_fwd: f64,
    pub x: f64,
    pub y: f64,
    pub f_bwd: f64,
    pub x_prime: f64,
    pub y_prime: f64,
}

impl AttackParams {
    pub fn new(f_fwd: f64, x: f64, y: f64, f_bwd: f64, x_prime: f64, y_prime: f64) -> Result<Self> {
        let p = Self {
            f_fwd,
            x,
            y,
            f_bwd,
            x_prime,
            y_prime,
        };
        p.validate()?;
        Ok(p)
    }

    /// `F = F′ = 1`, `x = x′`: the least detectable symmetric attack.
    pub fn balanced(x: f64) -> Result<Self> {
        Self::new(1.0, x, 0.0, 1.0, x, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("F", self.f_fwd, 0.0, 1.0)?;
        check_range("F'", self.f_bwd, 0.0, 1.0)?;
        check_range("x", self.x, 0.0, FRAC_PI_2)?;
        check_range("y", self.y, 0.0, FRAC_PI_2)?;
        check_range("x'", self.x_prime, 0.0, FRAC_PI_2)?;
        check_range("y'", self.y_prime, 0.0, FRAC_PI_2)
    }

    pub fn d_fwd(&self) -> f64 {
        1.0 - self.f_fwd
    }

    pub fn d_bwd(&self) -> f64 {
        1.0 - self.f_bwd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackStrategy {
    NoAttack,
    /// Measure in a random basis on both passes (the same basis on both).
    ProjectiveInterceptResend,
    IncoherentTwoAncilla(AttackParams),
}

/// What Eve concludes at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRecord {
    /// Inferred qubit value leaving the forward attack.
    pub eps_guess: u8,
    /// Inferred qubit value entering the backward attack.
    pub eta_guess: u8,
    /// `I` iff the two guesses agree.
    pub op_guess: EncodingOp,
    /// Raw outcome indices of the forward and backward measurements.
    pub raw: [usize; 2],
}

impl EveRecord {
    fn from_guesses(eps_guess: u8, eta_guess: u8, raw: [usize; 2]) -> Self {
        let op_guess = if eps_guess == eta_guess {
            EncodingOp::I
        } else {
            EncodingOp::IY
        };
        Self {
            eps_guess,
            eta_guess,
            op_guess,
            raw,
        }
    }
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Relative ancilla states `[ε̃00, ε̃01, ε̃10, ε̃11]` for overlap angles `x`, `y`.
pub fn ancilla_states(x: f64, y: f64) -> [StateVector; 4] {
    let vec = |a: [f64; 4]| StateVector::from_real(&a).expect("unit by construction");
    [
        vec([1.0, 0.0, 0.0, 0.0]),
        vec([0.0, 0.0, 1.0, 0.0]),
        vec([0.0, 0.0, y.cos(), y.sin()]),
        vec([x.cos(), x.sin(), 0.0, 0.0]),
    ]
}

/// The forward-pass map `qubit → qubit ⊗ ancilla`.
pub fn build_e1_isometry(f: f64, x: f64, y: f64) -> Result<Isometry> {
    check_range("F", f, 0.0, 1.0)?;
    check_range("x", x, 0.0, FRAC_PI_2)?;
    check_range("y", y, 0.0, FRAC_PI_2)?;
    let [e00, e01, e10, e11] = ancilla_states(x, y);
    let (sf, sd) = (f.sqrt(), (1.0 - f).sqrt());
    let zero = StateVector::basis(2, 0);
    let one = StateVector::basis(2, 1);
    let combine = |a: &StateVector, wa: f64, b: &StateVector, wb: f64| -> Vec<C64> {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(p, q)| p * wa + q * wb)
            .collect()
    };
    // |0⟩ ↦ √F|0⟩ε̃00 + √D|1⟩ε̃01,  |1⟩ ↦ √D|0⟩ε̃10 + √F|1⟩ε̃11
    let col0 = combine(&zero.tensor(&e00), sf, &one.tensor(&e01), sd);
    let col1 = combine(&zero.tensor(&e10), sd, &one.tensor(&e11), sf);
    Isometry::from_columns(&[col0, col1], vec![2], vec![2, ANCILLA_DIM])
}

/// The backward-pass map; same family as [`build_e1_isometry`] with a fresh ancilla.
pub fn build_e2_isometry(f_prime: f64, x_prime: f64, y_prime: f64) -> Result<Isometry> {
    build_e1_isometry(f_prime, x_prime, y_prime)
}

/// Success probability of the optimal discrimination of two equiprobable
/// pure states with overlap `cos θ`.
pub fn helstrom_success(theta: f64) -> f64 {
    (1.0 + theta.sin()) / 2.0
}

fn helstrom_pair(v0: &[C64], v1: &[C64]) -> Result<[Vec<C64>; 2]> {
    let overlap: C64 = v0.iter().zip(v1).map(|(a, b)| a.conj() * b).sum();
    if overlap.im.abs() > TOL || overlap.re < -TOL {
        return Err(Error::Invalid(format!(
            "Helstrom pair needs a real nonnegative overlap, got {overlap}"
        )));
    }
    let sum: Vec<C64> = v0.iter().zip(v1).map(|(a, b)| a + b).collect();
    let diff: Vec<C64> = v0.iter().zip(v1).map(|(a, b)| a - b).collect();
    let dim = v0.len();
    let mut frame = Vec::with_capacity(2);
    extend_orthonormal(&mut frame, [sum, diff]);
    // Identical inputs: any direction orthogonal to them will do.
    if frame.len() == 1 {
        extend_orthonormal(
            &mut frame,
            (0..dim).map(|i| StateVector::basis(dim, i).amplitudes().to_vec()),
        );
        frame.truncate(2);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (&frame[0], &frame[1]);
    let m0 = a.iter().zip(b).map(|(p, q)| (p + q) * s).collect();
    let m1 = a.iter().zip(b).map(|(p, q)| (p - q) * s).collect();
    Ok([m0, m1])
}

/// Minimum-error basis for telling `v0` (label "0") from `v1` (label "1").
///
/// The two measurement vectors span the plane of the inputs; the rest of
/// the space is completed arbitrarily.
pub fn helstrom_basis(v0: &StateVector, v1: &StateVector) -> Result<MeasurementBasis> {
    if v0.dims() != v1.dims() || v0.dims().len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: v0.len(),
            actual: v1.len(),
        });
    }
    let dim = v0.len();
    let pair = helstrom_pair(v0.amplitudes(), v1.amplitudes())?;
    let mut vectors: Vec<Vec<C64>> = pair.to_vec();
    extend_orthonormal(
        &mut vectors,
        (0..dim).map(|i| StateVector::basis(dim, i).amplitudes().to_vec()),
    );
    let labels = (0..dim)
        .map(|i| if i < 2 { i.to_string() } else { format!("c{i}") })
        .collect();
    MeasurementBasis::new(vectors, labels)
}

/// Outcome layout of Eve's ancilla measurement: the guessed relative state `ε̃ab`.
const OUTCOME_LABELS: [&str; 4] = ["00", "11", "01", "10"];
const OUTCOME_AB: [(u8, u8); 4] = [(0, 0), (1, 1), (0, 1), (1, 0)];

/// Plane-then-Helstrom basis for an ancilla created with angles `x`, `y`.
pub fn ancilla_basis(x: f64, y: f64) -> MeasurementBasis {
    let plane = |theta: f64| {
        let v0 = [real(1.0), real(0.0)];
        let v1 = [real(theta.cos()), real(theta.sin())];
        helstrom_pair(&v0, &v1).expect("real overlap")
    };
    let [n0, n1] = plane(x);
    let [f0, f1] = plane(y);
    let embed = |v: &[C64], offset: usize| {
        let mut out = vec![real(0.0); ANCILLA_DIM];
        out[offset..offset + 2].copy_from_slice(v);
        out
    };
    let vectors = vec![embed(&n0, 0), embed(&n1, 0), embed(&f0, 2), embed(&f1, 2)];
    MeasurementBasis::new(vectors, OUTCOME_LABELS.iter().map(|s| s.to_string()).collect())
        .expect("orthonormal by construction")
}

/// Measures both ancillae of a post-E2 state (`[qubit, η, ε]` layout) and
/// compares the forward output guess against the backward input guess.
pub fn eve_measure_and_infer<R: Rng + ?Sized>(
    state: &StateVector,
    params: &AttackParams,
    rng: &mut R,
) -> Result<(EveRecord, StateVector)> {
    let eps_basis = ancilla_basis(params.x, params.y);
    let eta_basis = ancilla_basis(params.x_prime, params.y_prime);
    measure_ancillae(state, &eps_basis, &eta_basis, rng)
}

fn measure_ancillae<R: Rng + ?Sized>(
    state: &StateVector,
    eps_basis: &MeasurementBasis,
    eta_basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<(EveRecord, StateVector)> {
    if state.dims() != [2, ANCILLA_DIM, ANCILLA_DIM] {
        return Err(Error::Invalid(format!(
            "expected [qubit, η, ε] layout, got dims {:?}",
            state.dims()
        )));
    }
    let eps = state.measure(eps_basis, EPS, rng)?;
    let eta = eps.state.measure(eta_basis, ETA, rng)?;
    // ε̃ab: the qubit left E1 as b. η̃ab: the qubit entered E2 as a.
    let eps_guess = OUTCOME_AB[eps.index].1;
    let eta_guess = OUTCOME_AB[eta.index].0;
    Ok((
        EveRecord::from_guesses(eps_guess, eta_guess, [eps.index, eta.index]),
        eta.state,
    ))
}

/// Intercept-resend on the bare qubit: measure in `basis`, forward the eigenstate.
pub fn projective_attack_step<R: Rng + ?Sized>(
    state: &StateVector,
    basis: Basis,
    rng: &mut R,
) -> Result<(u8, StateVector)> {
    let m = state.measure(&basis.measurement(), QUBIT, rng)?;
    Ok((m.index as u8, m.state))
}

/// Eve's knowledge carried from the forward to the backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveMemory {
    None,
    Projective {
        basis: Basis,
        forward: u8,
        backward: Option<u8>,
    },
    Ancilla,
}

/// An attack strategy with its isometries and measurement bases built once.
///
/// None of the methods see Alice's mode: Eve acts identically on control
/// and encoding runs.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)] // built once per simulator
pub enum PreparedAttack {
    None,
    Projective,
    Incoherent {
        params: AttackParams,
        e1: Isometry,
        e2: Isometry,
        eps_basis: MeasurementBasis,
        eta_basis: MeasurementBasis,
    },
}

impl PreparedAttack {
    pub fn new(strategy: &AttackStrategy) -> Result<Self> {
        Ok(match strategy {
            AttackStrategy::NoAttack => PreparedAttack::None,
            AttackStrategy::ProjectiveInterceptResend => PreparedAttack::Projective,
            AttackStrategy::IncoherentTwoAncilla(p) => {
                p.validate()?;
                PreparedAttack::Incoherent {
                    params: *p,
                    e1: build_e1_isometry(p.f_fwd, p.x, p.y)?,
                    e2: build_e2_isometry(p.f_bwd, p.x_prime, p.y_prime)?,
                    eps_basis: ancilla_basis(p.x, p.y),
                    eta_basis: ancilla_basis(p.x_prime, p.y_prime),
                }
            }
        })
    }

    /// E1. The traveling qubit stays subsystem 0.
    pub fn forward<R: Rng + ?Sized>(&self, state: StateVector, rng: &mut R) -> Result<(StateVector, EveMemory)> {
        match self {
            PreparedAttack::None => Ok((state, EveMemory::None)),
            PreparedAttack::Projective => {
                let basis = if rng.random_bool(0.5) { Basis::X } else { Basis::Z };
                let (label, s) = projective_attack_step(&state, basis, rng)?;
                Ok((
                    s,
                    EveMemory::Projective {
                        basis,
                        forward: label,
                        backward: None,
                    },
                ))
            }
            PreparedAttack::Incoherent { e1, .. } => Ok((state.apply_isometry(e1, &[QUBIT])?, EveMemory::Ancilla)),
        }
    }

    /// E2. Expects whatever `forward` produced, possibly acted on by Alice.
    pub fn backward<R: Rng + ?Sized>(
        &self,
        state: StateVector,
        memory: &mut EveMemory,
        rng: &mut R,
    ) -> Result<StateVector> {
        match (self, memory) {
            (PreparedAttack::None, _) => Ok(state),
            (PreparedAttack::Projective, EveMemory::Projective { basis, backward, .. }) => {
                let (label, s) = projective_attack_step(&state, *basis, rng)?;
                *backward = Some(label);
                Ok(s)
            }
            (PreparedAttack::Incoherent { e2, .. }, EveMemory::Ancilla) => state.apply_isometry(e2, &[QUBIT]),
            _ => Err(Error::Invalid("attack memory does not match strategy".into())),
        }
    }

    /// Eve's end-of-run inference. `state` is the final joint state.
    pub fn conclude<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        memory: &EveMemory,
        rng: &mut R,
    ) -> Result<Option<EveRecord>> {
        match (self, memory) {
            (
                PreparedAttack::Projective,
                EveMemory::Projective {
                    forward,
                    backward: Some(b),
                    ..
                },
            ) => Ok(Some(EveRecord::from_guesses(
                *forward,
                *b,
                [*forward as usize, *b as usize],
            ))),
            (
                PreparedAttack::Incoherent {
                    eps_basis, eta_basis, ..
                },
                EveMemory::Ancilla,
            ) if state.dims().len() == 3 => measure_ancillae(state, eps_basis, eta_basis, rng).map(|(r, _)| Some(r)),
            _ => Ok(None),
        }
    }

    pub fn params(&self) -> Option<&AttackParams> {
        match self {
            PreparedAttack::Incoherent { params, .. } => Some(params),
            _ => None,
        }
    }
}
