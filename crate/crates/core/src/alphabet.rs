//! The four BB84 states, their bases, and Alice's two encoding operations.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::qmath::{Isometry, MeasurementBasis, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];

    pub fn measurement(self) -> MeasurementBasis {
        match self {
            Basis::Z => MeasurementBasis::z(),
            Basis::X => MeasurementBasis::x(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

/// One of Bob's four preparations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrepState {
    Zero,
    One,
    Plus,
    Minus,
}

impl PrepState {
    pub const ALL: [PrepState; 4] = [PrepState::Zero, PrepState::One, PrepState::Plus, PrepState::Minus];

    pub fn new(basis: Basis, bit: u8) -> Self {
        match (basis, bit & 1) {
            (Basis::Z, 0) => PrepState::Zero,
            (Basis::Z, _) => PrepState::One,
            (Basis::X, 0) => PrepState::Plus,
            (Basis::X, _) => PrepState::Minus,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            PrepState::Zero | PrepState::One => Basis::Z,
            PrepState::Plus | PrepState::Minus => Basis::X,
        }
    }

    /// Outcome index of this state when measured in its own basis.
    pub fn bit(self) -> u8 {
        match self {
            PrepState::Zero | PrepState::Plus => 0,
            PrepState::One | PrepState::Minus => 1,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn state(self) -> StateVector {
        let s = FRAC_1_SQRT_2;
        let amps = match self {
            PrepState::Zero => [1.0, 0.0],
            PrepState::One => [0.0, 1.0],
            PrepState::Plus => [s, s],
            PrepState::Minus => [s, -s],
        };
        StateVector::from_real(&amps).expect("normalized by construction")
    }
}

impl fmt::Display for PrepState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrepState::Zero => "0",
            PrepState::One => "1",
            PrepState::Plus => "+",
            PrepState::Minus => "-",
        })
    }
}

/// Alice's encoding: `I` carries bit 0, `iY = ZX` carries bit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingOp {
    I,
    #[serde(rename = "iY")]
    IY,
}

impl EncodingOp {
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            EncodingOp::I
        } else {
            EncodingOp::IY
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            EncodingOp::I => 0,
            EncodingOp::IY => 1,
        }
    }

    /// `I` or `iY = [[0, 1], [-1, 0]]` on a single qubit.
    pub fn unitary(self) -> Isometry {
        match self {
            EncodingOp::I => Isometry::identity(vec![2]),
            EncodingOp::IY => {
                let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
                Isometry::new(vec![z, o, -o, z], vec![2], vec![2]).expect("iY is unitary")
            }
        }
    }
}

impl fmt::Display for EncodingOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingOp::I => "I",
            EncodingOp::IY => "iY",
        })
    }
}
