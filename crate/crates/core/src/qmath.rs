//! Dense pure-state linear algebra for small composite systems.
//!
//! Amplitudes are stored row-major over the subsystem list: the first
//! subsystem is the most significant digit of the flat index.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Absolute tolerance used for every normalization and orthogonality check.
pub const TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Orthonormalizes `candidates` against `fixed` (assumed orthonormal),
/// keeping only vectors with a residual above tolerance.
pub(crate) fn extend_orthonormal(fixed: &mut Vec<Vec<C64>>, candidates: impl IntoIterator<Item = Vec<C64>>) {
    for mut v in candidates {
        for u in fixed.iter() {
            let c = dot(u, &v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
        let n = norm_sqr(&v).sqrt();
        if n > 1e-7 {
            v.iter_mut().for_each(|z| *z /= n);
            fixed.push(v);
        }
    }
}

/// A normalized pure state over a list of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    dims: Vec<usize>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let expected = product(&dims);
        if amps.len() != expected || dims.contains(&0) {
            return Err(Error::DimensionMismatch {
                expected,
                actual: amps.len(),
            });
        }
        let n = norm_sqr(&amps);
        if (n - 1.0).abs() > TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { amps, dims })
    }

    /// Builds a single-subsystem state from real amplitudes.
    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect(), vec![amps.len()])
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(mut amps: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let n = norm_sqr(&amps).sqrt();
        if n < TOL {
            return Err(Error::NotNormalized(0.0));
        }
        amps.iter_mut().for_each(|z| *z /= n);
        Self::new(amps, dims)
    }

    /// The computational basis state `|index⟩` of a `dim`-level system.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps, dims: vec![dim] }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// The same state multiplied by `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let p = C64::from_polar(1.0, phi);
        Self {
            amps: self.amps.iter().map(|a| a * p).collect(),
            dims: self.dims.clone(),
        }
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.len() * other.len());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        StateVector { amps, dims }
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(dot(&self.amps, &other.amps))
    }

    fn check_subsystem(&self, index: usize) -> Result<()> {
        if index >= self.dims.len() {
            return Err(Error::NoSuchSubsystem {
                index,
                count: self.dims.len(),
            });
        }
        Ok(())
    }

    /// Applies `iso` to the listed subsystems.
    ///
    /// The targets are consumed in the given order (row-major) as the
    /// isometry's input space. The output subsystems take the place of the
    /// lowest-indexed target; all other subsystems keep their relative order.
    pub fn apply_isometry(&self, iso: &Isometry, targets: &[usize]) -> Result<StateVector> {
        for &t in targets {
            self.check_subsystem(t)?;
        }
        let mut seen = vec![false; self.dims.len()];
        for &t in targets {
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::Invalid(format!("subsystem {t} listed twice")));
            }
        }
        let target_dims: Vec<usize> = targets.iter().map(|&t| self.dims[t]).collect();
        if target_dims != iso.in_dims {
            return Err(Error::DimensionMismatch {
                expected: iso.d_in(),
                actual: product(&target_dims),
            });
        }

        let pivot = *targets
            .iter()
            .min()
            .ok_or(Error::Invalid("no target subsystems".into()))?;
        let prefix: Vec<usize> = (0..pivot).collect();
        let suffix: Vec<usize> = (pivot..self.dims.len()).filter(|i| !seen[*i]).collect();
        let out_total = iso.d_out();
        let suffix_total: usize = suffix.iter().map(|&i| self.dims[i]).product();

        let mut new_dims: Vec<usize> = prefix.iter().map(|&i| self.dims[i]).collect();
        new_dims.extend_from_slice(&iso.out_dims);
        new_dims.extend(suffix.iter().map(|&i| self.dims[i]));

        let mut out = vec![ZERO; product(&new_dims)];
        let mut digits = vec![0usize; self.dims.len()];
        for (flat, amp) in self.amps.iter().enumerate() {
            if *amp == ZERO {
                continue;
            }
            let mut rem = flat;
            for (k, &d) in self.dims.iter().enumerate().rev() {
                digits[k] = rem % d;
                rem /= d;
            }
            let col = targets.iter().fold(0, |acc, &t| acc * self.dims[t] + digits[t]);
            let pre = prefix.iter().fold(0, |acc, &i| acc * self.dims[i] + digits[i]);
            let suf = suffix.iter().fold(0, |acc, &i| acc * self.dims[i] + digits[i]);
            for row in 0..out_total {
                let m = iso.entry(row, col);
                if m != ZERO {
                    out[(pre * out_total + row) * suffix_total + suf] += m * amp;
                }
            }
        }
        StateVector::new(out, new_dims)
    }

    /// Splits the flat index space around `subsystem`: returns (dim, stride).
    fn layout(&self, subsystem: usize) -> (usize, usize) {
        let d = self.dims[subsystem];
        let stride = product(&self.dims[subsystem + 1..]);
        (d, stride)
    }

    /// Projects onto `vector` (in the subsystem's space), returning the
    /// unnormalized amplitudes of the remaining subsystems.
    fn project(&self, vector: &[C64], subsystem: usize) -> Vec<C64> {
        let (d, stride) = self.layout(subsystem);
        let outer = self.len() / (d * stride);
        let mut rest = vec![ZERO; outer * stride];
        for o in 0..outer {
            for (j, v) in vector.iter().enumerate().take(d) {
                let w = v.conj();
                if w == ZERO {
                    continue;
                }
                let base = (o * d + j) * stride;
                for i in 0..stride {
                    rest[o * stride + i] += w * self.amps[base + i];
                }
            }
        }
        rest
    }

    /// Born probabilities of each basis element on `subsystem`.
    pub fn probabilities(&self, basis: &MeasurementBasis, subsystem: usize) -> Result<Vec<f64>> {
        self.check_subsystem(subsystem)?;
        if basis.dim() != self.dims[subsystem] {
            return Err(Error::DimensionMismatch {
                expected: self.dims[subsystem],
                actual: basis.dim(),
            });
        }
        Ok(basis
            .vectors
            .iter()
            .map(|v| norm_sqr(&self.project(v, subsystem)))
            .collect())
    }

    /// Projective measurement of `subsystem` in `basis`.
    ///
    /// The measured subsystem is left in the sampled basis vector.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        basis: &MeasurementBasis,
        subsystem: usize,
        rng: &mut R,
    ) -> Result<Measurement> {
        let probs = self.probabilities(basis, subsystem)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            chosen = Some(k);
            acc += p;
            if u < acc {
                break;
            }
        }
        let index = chosen.ok_or(Error::NotNormalized(0.0))?;
        let probability = probs[index];

        let rest = self.project(&basis.vectors[index], subsystem);
        let scale = probability.sqrt();
        let (d, stride) = self.layout(subsystem);
        let outer = self.len() / (d * stride);
        let mut amps = vec![ZERO; self.len()];
        for o in 0..outer {
            for j in 0..d {
                let b = basis.vectors[index][j];
                let base = (o * d + j) * stride;
                for i in 0..stride {
                    amps[base + i] = b * rest[o * stride + i] / scale;
                }
            }
        }
        Ok(Measurement {
            index,
            probability,
            state: StateVector {
                amps,
                dims: self.dims.clone(),
            },
        })
    }
}

/// Result of a projective measurement.
#[derive(Debug, Clone)]
pub struct Measurement {
    /// Index of the sampled basis vector.
    pub index: usize,
    /// Born weight of the sampled outcome.
    pub probability: f64,
    /// Post-measurement state, renormalized.
    pub state: StateVector,
}

/// A linear map with orthonormal columns, stored densely row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    matrix: Vec<C64>,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
}

impl Isometry {
    /// `matrix` is row-major with `product(out_dims)` rows and `product(in_dims)` columns.
    pub fn new(matrix: Vec<C64>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        let (d_in, d_out) = (product(&in_dims), product(&out_dims));
        if matrix.len() != d_in * d_out || d_out < d_in {
            return Err(Error::DimensionMismatch {
                expected: d_in * d_out,
                actual: matrix.len(),
            });
        }
        let iso = Self {
            matrix,
            in_dims,
            out_dims,
        };
        let gram = iso.gram();
        for i in 0..d_in {
            for j in 0..d_in {
                let target = if i == j { ONE } else { ZERO };
                if (gram[i * d_in + j] - target).norm() > TOL {
                    return Err(Error::NotIsometric);
                }
            }
        }
        Ok(iso)
    }

    /// Builds an isometry from its columns, i.e. the images of the input basis states.
    pub fn from_columns(columns: &[Vec<C64>], in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        let d_out = product(&out_dims);
        if columns.iter().any(|c| c.len() != d_out) {
            return Err(Error::DimensionMismatch {
                expected: d_out,
                actual: columns.iter().map(Vec::len).find(|&l| l != d_out).unwrap_or(0),
            });
        }
        let d_in = columns.len();
        let mut matrix = vec![ZERO; d_out * d_in];
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                matrix[r * d_in + c] = *v;
            }
        }
        Self::new(matrix, in_dims, out_dims)
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d = product(&dims);
        let mut matrix = vec![ZERO; d * d];
        for i in 0..d {
            matrix[i * d + i] = ONE;
        }
        Self {
            matrix,
            in_dims: dims.clone(),
            out_dims: dims,
        }
    }

    pub fn d_in(&self) -> usize {
        product(&self.in_dims)
    }

    pub fn d_out(&self) -> usize {
        product(&self.out_dims)
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[row * self.d_in() + col]
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.d_out()).map(|r| self.entry(r, col)).collect()
    }

    /// `V†V`, row-major `d_in × d_in`.
    pub fn gram(&self) -> Vec<C64> {
        let d_in = self.d_in();
        let cols: Vec<Vec<C64>> = (0..d_in).map(|c| self.column(c)).collect();
        let mut g = Vec::with_capacity(d_in * d_in);
        for a in &cols {
            for b in &cols {
                g.push(dot(a, b));
            }
        }
        g
    }
}

/// A complete orthonormal basis of one subsystem's space.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: Vec<Vec<C64>>,
    labels: Vec<String>,
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<Vec<C64>>, labels: Vec<String>) -> Result<Self> {
        let dim = vectors.len();
        if labels.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: labels.len(),
            });
        }
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                if (dot(a, b) - target).norm() > TOL {
                    return Err(Error::NotOrthonormal);
                }
            }
        }
        Ok(Self { vectors, labels })
    }

    /// Computational basis of a `dim`-level system, labelled by index.
    pub fn computational(dim: usize) -> Self {
        let vectors = (0..dim).map(|i| StateVector::basis(dim, i).amps).collect();
        let labels = (0..dim).map(|i| i.to_string()).collect();
        Self { vectors, labels }
    }

    /// Qubit Z basis `{|0⟩, |1⟩}`.
    pub fn z() -> Self {
        Self::computational(2)
    }

    /// Qubit X basis `{|+⟩, |−⟩}`.
    pub fn x() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            vectors: vec![
                vec![C64::new(s, 0.0), C64::new(s, 0.0)],
                vec![C64::new(s, 0.0), C64::new(-s, 0.0)],
            ],
            labels: vec!["+".into(), "-".into()],
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn vector(&self, index: usize) -> StateVector {
        StateVector {
            amps: self.vectors[index].clone(),
            dims: vec![self.dim()],
        }
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }
}
