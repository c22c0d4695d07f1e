//! Gate-level circuits and statevector simulation.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, StateVector, ONE, ZERO};

/// Largest register for which a dense unitary is assembled.
pub const MAX_UNITARY_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Sdg,
    Tdg,
    RX,
    RY,
    RZ,
    CX,
    CCX,
    SWAP,
}

impl GateKind {
    pub const ALL: [GateKind; 14] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::T,
        GateKind::Sdg,
        GateKind::Tdg,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::CX,
        GateKind::CCX,
        GateKind::SWAP,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::CX | GateKind::SWAP => 2,
            GateKind::CCX => 3,
            _ => 1,
        }
    }

    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Sdg => "sdg",
            GateKind::Tdg => "tdg",
            GateKind::RX => "rx",
            GateKind::RY => "ry",
            GateKind::RZ => "rz",
            GateKind::CX => "cx",
            GateKind::CCX => "ccx",
            GateKind::SWAP => "swap",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.mnemonic() == s)
    }
}

/// One gate application. For `CX` the targets are `[control, target]`, for
/// `CCX` `[control, control, target]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
    param: Option<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, param: Option<f64>) -> Result<Gate> {
        if targets.len() != kind.arity() {
            return Err(Error::Validation(format!(
                "{} takes {} qubit(s), got {}",
                kind.mnemonic(),
                kind.arity(),
                targets.len()
            )));
        }
        for (i, a) in targets.iter().enumerate() {
            if targets[..i].contains(a) {
                return Err(Error::Validation(format!(
                    "{} repeats qubit {a}",
                    kind.mnemonic()
                )));
            }
        }
        match (kind.is_parameterized(), param) {
            (true, None) => {
                return Err(Error::Validation(format!("{} needs an angle", kind.mnemonic())))
            }
            (false, Some(_)) => {
                return Err(Error::Validation(format!(
                    "{} takes no angle",
                    kind.mnemonic()
                )))
            }
            (true, Some(theta)) if !theta.is_finite() => {
                return Err(Error::Validation(format!("non-finite angle {theta}")))
            }
            _ => {}
        }
        Ok(Gate {
            kind,
            targets,
            param,
        })
    }

    fn fixed(kind: GateKind, targets: Vec<usize>, param: Option<f64>) -> Gate {
        Gate::new(kind, targets, param).expect("well-formed gate")
    }

    pub fn h(q: usize) -> Gate {
        Gate::fixed(GateKind::H, vec![q], None)
    }

    pub fn x(q: usize) -> Gate {
        Gate::fixed(GateKind::X, vec![q], None)
    }

    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::fixed(GateKind::RX, vec![q], Some(theta))
    }

    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::fixed(GateKind::RY, vec![q], Some(theta))
    }

    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::fixed(GateKind::RZ, vec![q], Some(theta))
    }

    /// Panics if `control == target`.
    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::fixed(GateKind::CX, vec![control, target], None)
    }

    /// Panics if the qubits are not distinct.
    pub fn ccx(c0: usize, c1: usize, target: usize) -> Gate {
        Gate::fixed(GateKind::CCX, vec![c0, c1, target], None)
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::fixed(GateKind::SWAP, vec![a, b], None)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn param(&self) -> Option<f64> {
        self.param
    }

    /// 2x2 matrix of the single-qubit action. For `CX`/`CCX` this is the
    /// controlled `X`; `SWAP` has none.
    pub fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let c = Complex64::new;
        let s = FRAC_1_SQRT_2;
        let m = match self.kind {
            GateKind::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            GateKind::X | GateKind::CX | GateKind::CCX => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::Y => [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]],
            GateKind::Z => [[ONE, ZERO], [ZERO, c(-1.0, 0.0)]],
            GateKind::S => [[ONE, ZERO], [ZERO, c(0.0, 1.0)]],
            GateKind::Sdg => [[ONE, ZERO], [ZERO, c(0.0, -1.0)]],
            GateKind::T => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, FRAC_PI_4)]],
            GateKind::Tdg => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, -FRAC_PI_4)]],
            GateKind::RX => {
                let h = self.param? / 2.0;
                [[c(h.cos(), 0.0), c(0.0, -h.sin())], [c(0.0, -h.sin()), c(h.cos(), 0.0)]]
            }
            GateKind::RY => ry_matrix(self.param?),
            GateKind::RZ => rz_matrix(self.param?),
            GateKind::SWAP => return None,
        };
        Some(m)
    }
}

pub(crate) fn ry_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let h = theta / 2.0;
    [
        [Complex64::new(h.cos(), 0.0), Complex64::new(-h.sin(), 0.0)],
        [Complex64::new(h.sin(), 0.0), Complex64::new(h.cos(), 0.0)],
    ]
}

pub(crate) fn rz_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    [
        [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

fn check_targets(gate: &Gate, n: usize) -> Result<()> {
    if let Some(&q) = gate.targets.iter().find(|&&q| q >= n) {
        return Err(Error::Validation(format!(
            "{} targets qubit {q} in a {n}-qubit register",
            gate.kind.mnemonic()
        )));
    }
    Ok(())
}

/// Apply `gate` to the amplitudes of an `n`-qubit register in place.
pub fn apply_gate_in_place(amps: &mut [Complex64], gate: &Gate, n: usize) -> Result<()> {
    if amps.len() != 1usize << n {
        return Err(Error::shape(
            "apply_gate",
            format!("state of length {} for {n} qubits", amps.len()),
        ));
    }
    check_targets(gate, n)?;
    let t = &gate.targets;
    if gate.kind == GateKind::SWAP {
        let (ma, mb) = (bit(n, t[0]), bit(n, t[1]));
        for i in 0..amps.len() {
            if i & ma != 0 && i & mb == 0 {
                amps.swap(i, i ^ ma ^ mb);
            }
        }
        return Ok(());
    }
    let (controls, target) = t.split_at(t.len() - 1);
    let control_mask = controls.iter().fold(0, |acc, &q| acc | bit(n, q));
    let m = gate.single_qubit_matrix().expect("non-swap gate");
    apply_controlled_2x2(amps, &m, control_mask, bit(n, target[0]));
    Ok(())
}

pub(crate) fn apply_controlled_2x2(
    amps: &mut [Complex64],
    m: &[[Complex64; 2]; 2],
    control_mask: usize,
    target_mask: usize,
) {
    for i in 0..amps.len() {
        if i & target_mask != 0 || i & control_mask != control_mask {
            continue;
        }
        let j = i | target_mask;
        let (a, b) = (amps[i], amps[j]);
        amps[i] = m[0][0] * a + m[0][1] * b;
        amps[j] = m[1][0] * a + m[1][1] * b;
    }
}

pub fn apply_gate(state: &StateVector, gate: &Gate, n: usize) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gate_in_place(out.as_mut_slice(), gate, n)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    name: String,
}

impl Circuit {
    pub fn new(num_qubits: usize, name: impl Into<String>) -> Circuit {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            name: name.into(),
        }
    }

    pub fn from_gates(
        num_qubits: usize,
        name: impl Into<String>,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<Circuit> {
        let mut c = Circuit::new(num_qubits, name);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        check_targets(&gate, self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Number of parallel layers when every gate is scheduled as early as its
    /// qubits allow.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        for g in &self.gates {
            let l = g.targets.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for &q in &g.targets {
                level[q] = l;
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    /// Evolve `state` through every gate in order.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = state.clone();
        for g in &self.gates {
            apply_gate_in_place(out.as_mut_slice(), g, self.num_qubits)?;
        }
        Ok(out)
    }

    /// Dense `2^n x 2^n` unitary; column `j` is the circuit applied to `|j>`.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        if self.num_qubits > MAX_UNITARY_QUBITS {
            return Err(Error::SizeCap {
                num_qubits: self.num_qubits,
                max: MAX_UNITARY_QUBITS,
            });
        }
        let dim = self.dim();
        let columns = (0..dim)
            .map(|j| self.apply(&StateVector::basis(dim, j)).map(StateVector::into_vec))
            .collect::<Result<Vec<_>>>()?;
        ComplexMatrix::from_columns(&columns)
    }

    /// Line-oriented text form: a `qubits N` header, then one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            out.push_str(&format!("# circuit: {}\n", self.name));
        }
        out.push_str(&format!("qubits {}\n", self.num_qubits));
        for g in &self.gates {
            out.push_str(g.kind.mnemonic());
            for q in &g.targets {
                out.push_str(&format!(" {q}"));
            }
            if let Some(theta) = g.param {
                // shortest representation that parses back to the same f64
                out.push_str(&format!(" {theta}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        let mut name = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (body, comment) = match raw.split_once('#') {
                Some((b, c)) => (b, Some(c)),
                None => (raw, None),
            };
            if let Some(label) = comment.and_then(|c| c.trim().strip_prefix("circuit:")) {
                if circuit.is_none() {
                    name = label.trim().to_string();
                }
            }
            let mut tokens = body.split_whitespace();
            let Some(head) = tokens.next() else {
                continue;
            };
            let Some(c) = circuit.as_mut() else {
                if head != "qubits" {
                    return Err(parse_err(format!("expected `qubits N` header, found `{head}`")));
                }
                let n: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err("`qubits` needs a qubit count".into()))?;
                if n == 0 || tokens.next().is_some() {
                    return Err(parse_err("malformed `qubits` header".into()));
                }
                circuit = Some(Circuit::new(n, name.clone()));
                continue;
            };
            let kind = GateKind::from_mnemonic(head)
                .ok_or_else(|| parse_err(format!("unknown gate `{head}`")))?;
            let rest: Vec<&str> = tokens.collect();
            let want = kind.arity() + usize::from(kind.is_parameterized());
            if rest.len() != want {
                return Err(parse_err(format!(
                    "`{head}` expects {want} operand(s), got {}",
                    rest.len()
                )));
            }
            let targets = rest[..kind.arity()]
                .iter()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| parse_err(format!("bad qubit index `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let param = match kind.is_parameterized() {
                true => Some(
                    rest[kind.arity()]
                        .parse::<f64>()
                        .map_err(|_| parse_err(format!("bad angle `{}`", rest[kind.arity()])))?,
                ),
                false => None,
            };
            let gate = Gate::new(kind, targets, param).map_err(|e| parse_err(e.to_string()))?;
            c.push(gate).map_err(|e| parse_err(e.to_string()))?;
        }
        circuit.ok_or(Error::Parse {
            line: 0,
            message: "missing `qubits N` header".into(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    Random4Q17,
    Bell2Q,
    Adder4Q,
    Adder5Q,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 4] = [
        BenchmarkId::Random4Q17,
        BenchmarkId::Bell2Q,
        BenchmarkId::Adder4Q,
        BenchmarkId::Adder5Q,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BenchmarkId::Random4Q17 => "random4q17",
            BenchmarkId::Bell2Q => "bell2q",
            BenchmarkId::Adder4Q => "adder4q",
            BenchmarkId::Adder5Q => "adder5q",
        }
    }

    pub fn num_qubits(self) -> usize {
        match self {
            BenchmarkId::Bell2Q => 2,
            BenchmarkId::Random4Q17 | BenchmarkId::Adder4Q => 4,
            BenchmarkId::Adder5Q => 5,
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown benchmark `{s}`")))
    }
}

const RANDOM_DEPTH: usize = 17;

/// Seed used for `Random4Q17` when none is given.
pub const DEFAULT_CIRCUIT_SEED: u64 = 2017;

/// The fixed benchmark circuits. `seed` only affects `Random4Q17`.
pub fn benchmark_circuit(id: BenchmarkId, seed: u64) -> Circuit {
    let gates = match id {
        BenchmarkId::Bell2Q => vec![Gate::h(0), Gate::cx(0, 1)],
        // a, b, c_in on q0..q2; sum lands on q2, carry on q3
        BenchmarkId::Adder4Q => vec![
            Gate::ccx(0, 1, 3),
            Gate::cx(0, 1),
            Gate::ccx(1, 2, 3),
            Gate::cx(1, 2),
            Gate::cx(0, 1),
        ],
        // a, b, c_in on q0..q2 are preserved; sum on q3, carry on q4
        BenchmarkId::Adder5Q => vec![
            Gate::ccx(0, 1, 4),
            Gate::cx(0, 1),
            Gate::ccx(1, 2, 4),
            Gate::cx(2, 3),
            Gate::cx(1, 3),
            Gate::cx(0, 1),
        ],
        BenchmarkId::Random4Q17 => random_layered_gates(4, RANDOM_DEPTH, seed),
    };
    Circuit::from_gates(id.num_qubits(), id.label(), gates).expect("benchmark gates in range")
}

// Every layer covers every qubit, so as-soon-as-possible scheduling puts the
// gates of layer k at level k and the depth equals `layers`.
fn random_layered_gates(n: usize, layers: usize, seed: u64) -> Vec<Gate> {
    const POOL: [GateKind; 6] = [
        GateKind::H,
        GateKind::X,
        GateKind::T,
        GateKind::S,
        GateKind::RZ,
        GateKind::CX,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::new();
    for _ in 0..layers {
        let mut free: Vec<usize> = (0..n).collect();
        free.shuffle(&mut rng);
        while let Some(q) = free.pop() {
            let mut kind = POOL[rng.random_range(0..POOL.len())];
            if kind == GateKind::CX && free.is_empty() {
                kind = POOL[rng.random_range(0..POOL.len() - 1)];
            }
            let gate = match kind {
                GateKind::CX => Gate::cx(q, free.pop().expect("checked non-empty")),
                GateKind::RZ => Gate::rz(q, rng.random_range(0.0..2.0 * PI)),
                k => Gate::fixed(k, vec![q], None),
            };
            gates.push(gate);
        }
    }
    gates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_error;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn hadamard_on_zero() {
        let out = apply_gate(&StateVector::basis(2, 0), &Gate::h(0), 1).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!(close(&out, &StateVector::new(vec![c(s, 0.0), c(s, 0.0)]), 1e-15));
    }

    #[test]
    fn cx_on_10() {
        // |10>: qubit 0 set, index 2
        let out = apply_gate(&StateVector::basis(4, 2), &Gate::cx(0, 1), 2).unwrap();
        assert_eq!(out, StateVector::basis(4, 3));
    }

    #[test]
    fn ccx_on_superposition() {
        let s = FRAC_1_SQRT_2;
        let mut input = StateVector::zeros(8);
        input.as_mut_slice()[0b110] = c(s, 0.0);
        input.as_mut_slice()[0b000] = c(s, 0.0);
        let out = apply_gate(&input, &Gate::ccx(0, 1, 2), 3).unwrap();
        let mut expected = StateVector::zeros(8);
        expected.as_mut_slice()[0b111] = c(s, 0.0);
        expected.as_mut_slice()[0b000] = c(s, 0.0);
        assert_eq!(out, expected);
    }

    #[test]
    fn swap_exchanges_qubits() {
        // |01> -> |10>
        let out = apply_gate(&StateVector::basis(4, 1), &Gate::swap(0, 1), 2).unwrap();
        assert_eq!(out, StateVector::basis(4, 2));
    }

    #[test]
    fn out_of_range_target_is_rejected() {
        let r = apply_gate(&StateVector::basis(4, 0), &Gate::h(2), 2);
        assert!(matches!(r, Err(Error::Validation(_))));
        let mut c = Circuit::new(2, "t");
        assert!(c.push(Gate::cx(0, 2)).is_err());
    }

    #[test]
    fn gate_construction_validates() {
        assert!(Gate::new(GateKind::RZ, vec![0], None).is_err());
        assert!(Gate::new(GateKind::H, vec![0], Some(1.0)).is_err());
        assert!(Gate::new(GateKind::CX, vec![1, 1], None).is_err());
        assert!(Gate::new(GateKind::CCX, vec![0, 1], None).is_err());
    }

    #[test]
    fn empty_circuit_is_identity() {
        let u = Circuit::new(3, "empty").unitary().unwrap();
        assert_eq!(u, ComplexMatrix::identity(8));
    }

    #[test]
    fn unitary_size_cap() {
        let r = Circuit::new(13, "big").unitary();
        assert!(matches!(r, Err(Error::SizeCap { num_qubits: 13, .. })));
    }

    #[test]
    fn bell_maps_00_to_bell_state() {
        let u = benchmark_circuit(BenchmarkId::Bell2Q, 0).unitary().unwrap();
        let out = u.mul_vec(&StateVector::basis(4, 0)).unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = StateVector::new(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        assert!(close(&out, &expected, 1e-15));
    }

    #[test]
    fn benchmark_depths_and_sizes() {
        let bell = benchmark_circuit(BenchmarkId::Bell2Q, 0);
        assert_eq!((bell.len(), bell.depth()), (2, 2));
        assert_eq!(benchmark_circuit(BenchmarkId::Adder4Q, 0).depth(), 5);
        assert_eq!(benchmark_circuit(BenchmarkId::Adder5Q, 0).depth(), 6);
        for seed in 0..20 {
            let r = benchmark_circuit(BenchmarkId::Random4Q17, seed);
            assert_eq!(r.num_qubits(), 4);
            assert_eq!(r.depth(), 17, "seed {seed}");
            assert!(r.gates().iter().all(|g| matches!(
                g.kind(),
                GateKind::H | GateKind::X | GateKind::T | GateKind::S | GateKind::RZ | GateKind::CX
            )));
        }
    }

    #[test]
    fn random_benchmark_is_reproducible() {
        let a = benchmark_circuit(BenchmarkId::Random4Q17, 42);
        let b = benchmark_circuit(BenchmarkId::Random4Q17, 42);
        assert_eq!(a, b);
        assert_ne!(a, benchmark_circuit(BenchmarkId::Random4Q17, 43));
    }

    fn assert_permutation(u: &ComplexMatrix) {
        for i in 0..u.rows() {
            let mut ones = 0;
            for j in 0..u.cols() {
                let z = u[(i, j)];
                assert!(z == ZERO || z == ONE, "entry ({i},{j}) = {z}");
                ones += usize::from(z == ONE);
            }
            assert_eq!(ones, 1);
        }
        for j in 0..u.cols() {
            assert_eq!(u.column(j).iter().filter(|&&z| z == ONE).count(), 1);
        }
    }

    #[test]
    fn adders_are_permutations() {
        assert_permutation(&benchmark_circuit(BenchmarkId::Adder4Q, 0).unitary().unwrap());
        assert_permutation(&benchmark_circuit(BenchmarkId::Adder5Q, 0).unitary().unwrap());
    }

    fn simulate_basis(c: &Circuit, index: usize) -> usize {
        let out = c.apply(&StateVector::basis(c.dim(), index)).unwrap();
        let hit = out.as_slice().iter().position(|&z| z == ONE).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-15);
        hit
    }

    #[test]
    fn adder4_truth_table() {
        let c = benchmark_circuit(BenchmarkId::Adder4Q, 0);
        for a in 0..2 {
            for b in 0..2 {
                for cin in 0..2 {
                    let input = (a << 3) | (b << 2) | (cin << 1);
                    let out = simulate_basis(&c, input);
                    let sum = a ^ b ^ cin;
                    let carry = (a & b) | (a & cin) | (b & cin);
                    assert_eq!(out, (a << 3) | (b << 2) | (sum << 1) | carry, "{a}{b}{cin}");
                }
            }
        }
    }

    #[test]
    fn adder5_truth_table() {
        let c = benchmark_circuit(BenchmarkId::Adder5Q, 0);
        for a in 0..2 {
            for b in 0..2 {
                for cin in 0..2 {
                    let input = (a << 4) | (b << 3) | (cin << 2);
                    let sum = a ^ b ^ cin;
                    let carry = (a & b) | (a & cin) | (b & cin);
                    let expected = input | (sum << 1) | carry;
                    assert_eq!(simulate_basis(&c, input), expected);
                }
            }
        }
    }

    #[test]
    fn benchmark_unitaries_are_unitary() {
        for id in BenchmarkId::ALL {
            let u = benchmark_circuit(id, 5).unitary().unwrap();
            assert!(unitarity_error(&u).unwrap() <= 1e-10, "{id}");
        }
    }

    #[test]
    fn text_format_round_trip() {
        let c = benchmark_circuit(BenchmarkId::Random4Q17, 9);
        let text = c.to_text();
        assert!(text.contains("qubits 4"));
        assert_eq!(Circuit::from_text(&text).unwrap(), c);
    }

    #[test]
    fn text_format_parses_comments_and_angles() {
        let src = "# a comment\nqubits 4\nh 0   # trailing\ncx 0 1\n\nccx 1 2 3\nrz 0 0.625\n";
        let c = Circuit::from_text(src).unwrap();
        assert_eq!(c.num_qubits(), 4);
        assert_eq!(c.len(), 4);
        assert_eq!(c.gates()[3].param(), Some(0.625));
        assert_eq!(c.gates()[2].targets(), &[1, 2, 3]);
    }

    #[test]
    fn text_format_errors() {
        let cases = [
            ("h 0\n", 1),
            ("qubits 2\nfoo 0\n", 2),
            ("qubits 2\ncx 0\n", 2),
            ("qubits 2\nrz 0 abc\n", 2),
            ("qubits 2\nh 5\n", 2),
            ("qubits 2\ncx 1 1\n", 2),
        ];
        for (src, line) in cases {
            match Circuit::from_text(src) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{src:?}"),
                other => panic!("{src:?}: {other:?}"),
            }
        }
        assert!(Circuit::from_text("# only comments\n").is_err());
    }
}
