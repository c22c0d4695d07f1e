use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt, ComplexMatrix, StateVector};

pub const MODEL_MAGIC: &[u8; 4] = b"UQNM";

/// Single-layer network with a `2^n x 2^n` complex weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryModel {
    num_qubits: usize,
    weights: ComplexMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    /// Block-diagonal 2x2 rotations with angles drawn from `[0, pi/2]`.
    BlockRotation,
    /// Orthonormalised complex Gaussian matrix.
    ProjectedRandom,
}

impl UnitaryModel {
    pub fn new(num_qubits: usize, weights: ComplexMatrix) -> Result<UnitaryModel> {
        let dim = 1usize << num_qubits;
        if weights.rows() != dim || weights.cols() != dim {
            return Err(Error::shape(
                "UnitaryModel::new",
                format!(
                    "{}x{} weights for {num_qubits} qubits",
                    weights.rows(),
                    weights.cols()
                ),
            ));
        }
        Ok(UnitaryModel {
            num_qubits,
            weights,
        })
    }

    pub fn identity(num_qubits: usize) -> UnitaryModel {
        UnitaryModel {
            num_qubits,
            weights: ComplexMatrix::identity(1 << num_qubits),
        }
    }

    pub fn init<R: Rng + ?Sized>(num_qubits: usize, mode: InitMode, rng: &mut R) -> UnitaryModel {
        match mode {
            InitMode::BlockRotation => init_block_rotation(num_qubits, rng),
            InitMode::ProjectedRandom => init_projected_random(num_qubits, rng),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn weights(&self) -> &ComplexMatrix {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.weights
    }

    pub(crate) fn set_weights(&mut self, w: ComplexMatrix) {
        self.weights = w;
    }

    pub fn into_weights(self) -> ComplexMatrix {
        self.weights
    }

    /// `magic "UQNM"`, `n: u16`, then `4^n` row-major `(re, im)` f64 pairs,
    /// little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + 16 * self.weights.as_slice().len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(self.num_qubits as u16).to_le_bytes());
        for z in self.weights.as_slice() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<UnitaryModel> {
        if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
            return Err(Error::Format("missing UQNM magic bytes".into()));
        }
        if bytes.len() < 6 {
            return Err(Error::Truncated {
                expected: 6,
                found: bytes.len(),
            });
        }
        let n = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
        if n == 0 || n > 12 {
            return Err(Error::Format(format!("qubit count {n} out of range")));
        }
        let dim = 1usize << n;
        let expected = 6 + dim * dim * 16;
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::Format(format!(
                "{} trailing bytes after weights",
                bytes.len() - expected
            )));
        }
        let data = bytes[6..]
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        let weights = ComplexMatrix::from_vec(dim, dim, data)
            .map_err(|e| Error::Format(format!("bad weights: {e}")))?;
        UnitaryModel::new(n, weights)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<UnitaryModel> {
        UnitaryModel::from_bytes(&fs::read(path)?)
    }
}

/// Off-diagonal entry `v = sqrt((1 - cos t) / (1 + cos t))` of the skew
/// generator block `[[0, v], [-v, 0]]`.
pub fn block_parameter(t: f64) -> f64 {
    ((1.0 - t.cos()) / (1.0 + t.cos())).sqrt()
}

/// Cayley transform `(I + A)^-1 (I - A)` of `A = [[0, v], [-v, 0]]`, which is
/// the rotation by `t` when `v = tan(t / 2)`.
pub fn cayley_block(v: f64) -> [[f64; 2]; 2] {
    let d = 1.0 + v * v;
    let cos = (1.0 - v * v) / d;
    let sin = 2.0 * v / d;
    [[cos, -sin], [sin, cos]]
}

pub fn init_block_rotation<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> UnitaryModel {
    let dim = 1usize << num_qubits;
    let angles: Vec<f64> = (0..dim / 2)
        .map(|_| rng.random_range(0.0..=std::f64::consts::FRAC_PI_2))
        .collect();
    init_block_rotation_with_angles(num_qubits, &angles).expect("one angle per block")
}

/// Block-diagonal initialisation from explicit angles, one per 2x2 block.
/// For an odd dimension the trailing diagonal entry is 1.
pub fn init_block_rotation_with_angles(num_qubits: usize, angles: &[f64]) -> Result<UnitaryModel> {
    let dim = 1usize << num_qubits;
    block_rotation_matrix(dim, angles).and_then(|w| UnitaryModel::new(num_qubits, w))
}

pub(crate) fn block_rotation_matrix(dim: usize, angles: &[f64]) -> Result<ComplexMatrix> {
    if angles.len() != dim / 2 {
        return Err(Error::Validation(format!(
            "{} angles for {} blocks",
            angles.len(),
            dim / 2
        )));
    }
    let mut w = ComplexMatrix::zeros(dim, dim);
    for (b, &t) in angles.iter().enumerate() {
        let block = cayley_block(block_parameter(t));
        for (r, row) in block.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                w[(2 * b + r, 2 * b + c)] = Complex64::new(x, 0.0);
            }
        }
    }
    if dim % 2 == 1 {
        w[(dim - 1, dim - 1)] = Complex64::new(1.0, 0.0);
    }
    Ok(w)
}

pub fn init_projected_random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> UnitaryModel {
    let dim = 1usize << num_qubits;
    let g = ComplexMatrix::random_gaussian(dim, dim, rng);
    UnitaryModel {
        num_qubits,
        weights: gram_schmidt(&g).expect("square"),
    }
}

/// `O = U x`; the activation is the identity.
pub fn forward(model: &UnitaryModel, x: &StateVector) -> Result<StateVector> {
    model.weights.mul_vec(x)
}

/// `|tr(target^† U)| / 2^n`.
pub fn target_fidelity(model: &UnitaryModel, target: &ComplexMatrix) -> Result<f64> {
    phase_invariant_fidelity(model.weights(), target)
}

pub(crate) fn phase_invariant_fidelity(u: &ComplexMatrix, target: &ComplexMatrix) -> Result<f64> {
    if u.rows() != target.rows() || u.cols() != target.cols() || !u.is_square() {
        return Err(Error::shape(
            "target_fidelity",
            format!(
                "model {}x{} vs target {}x{}",
                u.rows(),
                u.cols(),
                target.rows(),
                target.cols()
            ),
        ));
    }
    let overlap: Complex64 = target
        .as_slice()
        .iter()
        .zip(u.as_slice())
        .map(|(t, w)| t.conj() * w)
        .sum();
    Ok(overlap.norm() / u.rows() as f64)
}
