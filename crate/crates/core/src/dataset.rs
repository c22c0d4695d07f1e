//! Input/output statevector pairs for a target circuit, and the `.uqnn`
//! binary file format.
//!
//! File layout (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes  "UQNN"
//! version      u16      1
//! n            u16      qubit count
//! count        u64      number of samples
//! seed         u64      generation seed
//! train_count  u64
//! train index  u64 x train_count
//! samples      count x (input, output), each 2^n x (re f64, im f64)
//! ```
//!
//! The test indices are the complement of the train indices, ascending.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::StateVector;
use crate::qsim::Circuit;

pub const MAGIC: &[u8; 4] = b"UQNN";
pub const FORMAT_VERSION: u16 = 1;
pub const DEFAULT_COUNT: usize = 1000;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
const HEADER_LEN: usize = 4 + 2 + 2 + 8 + 8 + 8;
const MAX_FILE_QUBITS: u16 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: StateVector,
    pub output: StateVector,
}

impl Sample {
    /// Pair `input` with the result of running it through `circuit`.
    pub fn through(circuit: &Circuit, input: StateVector) -> Result<Sample> {
        let output = circuit.apply(&input)?;
        Ok(Sample { input, output })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub num_qubits: usize,
    pub samples: Vec<Sample>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Haar-random pure state: `2^n` complex standard normals, normalised.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    let dim = 1usize << n;
    let amps = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::new(amps).normalized()
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Simulate `count` Haar-random inputs through `circuit` and split them.
///
/// Sample `i` draws from its own stream derived from `(seed, i)`, so the
/// result does not depend on generation order.
pub fn generate(circuit: &Circuit, count: usize, seed: u64, test_fraction: f64) -> Result<Dataset> {
    if count < 10 {
        return Err(Error::Validation(format!("need at least 10 samples, got {count}")));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = circuit.num_qubits();
    let samples = (0..count)
        .map(|i| Sample::through(circuit, random_state(n, &mut sample_rng(seed, i))))
        .collect::<Result<Vec<_>>>()?;
    let test_count = ((count as f64 * test_fraction).round() as usize).clamp(1, count - 1);
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test_indices = order[..test_count].to_vec();
    let mut train_indices = order[test_count..].to_vec();
    test_indices.sort_unstable();
    train_indices.sort_unstable();
    Ok(Dataset {
        num_qubits: n,
        samples,
        train_indices,
        test_indices,
        seed,
    })
}

impl Dataset {
    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn train_set(&self) -> Vec<Sample> {
        self.train_indices.iter().map(|&i| self.samples[i].clone()).collect()
    }

    pub fn test_set(&self) -> Vec<Sample> {
        self.test_indices.iter().map(|&i| self.samples[i].clone()).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(
            HEADER_LEN + 8 * self.train_indices.len() + self.samples.len() * dim * 32,
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.num_qubits as u16).to_le_bytes());
        out.extend_from_slice(&(self.samples.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.train_indices.len() as u64).to_le_bytes());
        for &i in &self.train_indices {
            out.extend_from_slice(&(i as u64).to_le_bytes());
        }
        for s in &self.samples {
            for z in s.input.as_slice().iter().chain(s.output.as_slice()) {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Dataset> {
        if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing UQNN magic bytes".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let mut r = Reader { bytes, pos: 4 };
        let version = r.u16();
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = r.u16();
        if n == 0 || n > MAX_FILE_QUBITS {
            return Err(Error::Format(format!("qubit count {n} out of range")));
        }
        let count = usize::try_from(r.u64()).map_err(|_| Error::Format("sample count overflow".into()))?;
        let seed = r.u64();
        let train_count = r.u64() as usize;
        if train_count > count {
            return Err(Error::Format(format!(
                "{train_count} train indices for {count} samples"
            )));
        }
        let index_end = HEADER_LEN + 8 * train_count;
        if bytes.len() < index_end {
            return Err(Error::Truncated {
                expected: index_end,
                found: bytes.len(),
            });
        }
        let mut seen = vec![false; count];
        let mut train_indices = Vec::with_capacity(train_count);
        for _ in 0..train_count {
            let i = r.u64() as usize;
            if i >= count || seen[i] {
                return Err(Error::Format(format!("invalid or repeated train index {i}")));
            }
            seen[i] = true;
            train_indices.push(i);
        }
        let test_indices = (0..count).filter(|&i| !seen[i]).collect();

        let dim = 1usize << n;
        let payload = bytes.len() - index_end;
        let per_sample = 2 * dim * 16;
        let expected = count * per_sample;
        if payload != expected {
            let unit = count * 32;
            if unit > 0 && payload.is_multiple_of(unit) && (payload / unit).is_power_of_two() {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: payload / unit,
                });
            }
            if payload < expected {
                return Err(Error::Truncated {
                    expected: index_end + expected,
                    found: bytes.len(),
                });
            }
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                payload - expected
            )));
        }
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let input = r.state(dim);
            let output = r.state(dim);
            if !input.as_slice().iter().chain(output.as_slice()).all(|z| z.is_finite()) {
                return Err(Error::Format("non-finite amplitude in payload".into()));
            }
            samples.push(Sample { input, output });
        }
        Ok(Dataset {
            num_qubits: n as usize,
            samples,
            train_indices,
            test_indices,
            seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        Dataset::from_bytes(&fs::read(path)?)
    }
}

// Bounds are checked by the caller before any read.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().expect("length N");
        self.pos += N;
        out
    }

    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn state(&mut self, dim: usize) -> StateVector {
        StateVector::new(
            (0..dim)
                .map(|_| {
                    let re = self.f64();
                    Complex64::new(re, self.f64())
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{benchmark_circuit, BenchmarkId};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn random_state_is_normalised_and_seeded() {
        let a = random_state(1, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a.dim(), 2);
        assert!(a.is_normalized(1e-12));
        let b = random_state(1, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn haar_first_component_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mean = (0..10_000)
            .map(|_| random_state(2, &mut rng)[0].norm_sqr())
            .sum::<f64>()
            / 10_000.0;
        assert!((mean - 0.25).abs() < 0.02, "{mean}");
    }

    #[test]
    fn bell_split_sizes() {
        let ds = generate(&benchmark_circuit(BenchmarkId::Bell2Q, 0), 1000, 7, 0.2).unwrap();
        assert_eq!((ds.train_indices.len(), ds.test_indices.len()), (800, 200));
        let mut all: Vec<usize> = ds.train_indices.iter().chain(&ds.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn generate_validates_arguments() {
        let c = benchmark_circuit(BenchmarkId::Bell2Q, 0);
        assert!(generate(&c, 9, 1, 0.2).is_err());
        assert!(generate(&c, 100, 1, 0.0).is_err());
        assert!(generate(&c, 100, 1, 1.0).is_err());
    }

    #[test]
    fn injected_basis_input_pairs_with_bell_state() {
        let c = benchmark_circuit(BenchmarkId::Bell2Q, 0);
        let s = Sample::through(&c, StateVector::basis(4, 0)).unwrap();
        let h = FRAC_1_SQRT_2;
        let expected = StateVector::new(vec![
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
        ]);
        assert!(s.output.distance(&expected) < 1e-15);
    }

    fn small() -> Dataset {
        generate(&benchmark_circuit(BenchmarkId::Bell2Q, 0), 10, 3, 0.2).unwrap()
    }

    #[test]
    fn bytes_round_trip() {
        let ds = small();
        assert_eq!(Dataset::from_bytes(&ds.to_bytes()).unwrap(), ds);
    }

    #[test]
    fn missing_magic_is_a_format_error() {
        let mut bytes = small().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(Dataset::from_bytes(&bytes), Err(Error::Format(_))));
        assert!(matches!(Dataset::from_bytes(b"UQ"), Err(Error::Format(_))));
    }

    #[test]
    fn header_n_inconsistent_with_payload() {
        let mut bytes = small().to_bytes();
        // claim 3 qubits for a 2-qubit payload
        bytes[6..8].copy_from_slice(&3u16.to_le_bytes());
        assert!(matches!(
            Dataset::from_bytes(&bytes),
            Err(Error::DimensionMismatch { expected: 8, found: 4 })
        ));
    }

    #[test]
    fn truncated_payload() {
        let bytes = small().to_bytes();
        let cut = &bytes[..bytes.len() - 5];
        assert!(matches!(Dataset::from_bytes(cut), Err(Error::Truncated { .. })));
        assert!(matches!(Dataset::from_bytes(&bytes[..20]), Err(Error::Truncated { .. })));
    }

    #[test]
    fn bad_indices_and_version() {
        let ds = small();
        let mut bytes = ds.to_bytes();
        bytes[4..6].copy_from_slice(&9u16.to_le_bytes());
        assert!(matches!(Dataset::from_bytes(&bytes), Err(Error::Format(_))));

        let mut bytes = ds.to_bytes();
        let first = HEADER_LEN;
        bytes[first..first + 8].copy_from_slice(&99u64.to_le_bytes());
        assert!(matches!(Dataset::from_bytes(&bytes), Err(Error::Format(_))));
    }
}
