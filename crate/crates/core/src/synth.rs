//! Exact synthesis of a unitary into elementary gates.
//!
//! The matrix is reduced to the identity by two-level (Givens-style) row
//! operations. Each two-level operation is routed along a Gray-code path so
//! that it acts on two basis states differing in a single qubit, becoming a
//! multi-controlled single-qubit gate. Those are lowered without ancillas to
//! `RZ`, `RY`, `X`, `CX` and `CCX`. The global phase is tracked separately
//! and never emitted as a gate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{unitarity_error, ComplexMatrix, ONE, ZERO};
use crate::qsim::{ry_matrix, rz_matrix, Circuit, Gate};
use crate::trainer::phase_invariant_fidelity;

/// Magnitudes below this are treated as exact zeros during elimination.
pub const ZERO_TOLERANCE: f64 = 1e-12;
/// Unitarity required by [`two_level_decompose`].
pub const DECOMPOSE_UNITARITY_TOLERANCE: f64 = 1e-8;
/// Unitarity required by [`synthesize`].
pub const SYNTH_UNITARITY_TOLERANCE: f64 = 1e-6;
// Rotation angles smaller than this are dropped from the emitted circuit.
const ANGLE_EPSILON: f64 = 1e-14;

pub type Block = [[Complex64; 2]; 2];

/// Unitary acting as `block` on basis coordinates `indices = (i, j)`, `i < j`,
/// and as the identity elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLevelOp {
    pub dim: usize,
    pub indices: (usize, usize),
    pub block: Block,
}

impl TwoLevelOp {
    pub fn dagger(&self) -> TwoLevelOp {
        TwoLevelOp {
            dim: self.dim,
            indices: self.indices,
            block: block_dagger(&self.block),
        }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(self.dim);
        let (i, j) = self.indices;
        m[(i, i)] = self.block[0][0];
        m[(i, j)] = self.block[0][1];
        m[(j, i)] = self.block[1][0];
        m[(j, j)] = self.block[1][1];
        m
    }

    /// `m <- op * m`, touching only rows `i` and `j`.
    pub fn apply_left(&self, m: &mut ComplexMatrix) {
        let (i, j) = self.indices;
        let b = &self.block;
        for col in 0..m.cols() {
            let (x, y) = (m[(i, col)], m[(j, col)]);
            m[(i, col)] = b[0][0] * x + b[0][1] * y;
            m[(j, col)] = b[1][0] * x + b[1][1] * y;
        }
    }
}

fn block_dagger(b: &Block) -> Block {
    [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]]
}

fn block_mul(a: &Block, b: &Block) -> Block {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            *z = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn validate_unitary(u: &ComplexMatrix, tolerance: f64) -> Result<usize> {
    if !u.is_square() || !u.rows().is_power_of_two() {
        return Err(Error::shape(
            "synthesis",
            format!("{}x{} is not a 2^n x 2^n matrix", u.rows(), u.cols()),
        ));
    }
    let error = unitarity_error(u)?;
    if error.is_nan() || error > tolerance {
        return Err(Error::NotUnitary { error, tolerance });
    }
    Ok(u.rows().trailing_zeros() as usize)
}

/// Two-level factors `V_1 .. V_k` with `V_k ... V_1 U = I`, so that
/// `U = V_1^† ... V_k^†`. At most `2^(n-1) (2^n - 1)` factors.
pub fn two_level_decompose(u: &ComplexMatrix) -> Result<Vec<TwoLevelOp>> {
    validate_unitary(u, DECOMPOSE_UNITARITY_TOLERANCE)?;
    Ok(eliminate(u))
}

fn eliminate(u: &ComplexMatrix) -> Vec<TwoLevelOp> {
    let d = u.rows();
    let mut a = u.clone();
    let mut ops = Vec::new();
    let mut push = |op: TwoLevelOp, a: &mut ComplexMatrix| {
        op.apply_left(a);
        ops.push(op);
    };
    if d == 1 {
        return Vec::new();
    }
    for c in 0..d - 1 {
        if c == d - 2 {
            // Whatever is left is a 2x2 unitary; undo it in one step.
            let rest = [[a[(c, c)], a[(c, c + 1)]], [a[(c + 1, c)], a[(c + 1, c + 1)]]];
            let identity = [[ONE, ZERO], [ZERO, ONE]];
            let off = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (rest[i][j] - identity[i][j]).norm())
                .fold(0.0, f64::max);
            if off > ZERO_TOLERANCE {
                push(
                    TwoLevelOp {
                        dim: d,
                        indices: (c, c + 1),
                        block: block_dagger(&rest),
                    },
                    &mut a,
                );
            }
            break;
        }
        let mut eliminated = false;
        for r in c + 1..d {
            let b = a[(r, c)];
            if b.norm() <= ZERO_TOLERANCE {
                continue;
            }
            let top = a[(c, c)];
            let len = (top.norm_sqr() + b.norm_sqr()).sqrt();
            let block = [[top.conj() / len, b.conj() / len], [-b / len, top / len]];
            push(
                TwoLevelOp {
                    dim: d,
                    indices: (c, r),
                    block,
                },
                &mut a,
            );
            a[(r, c)] = ZERO;
            eliminated = true;
        }
        let p = a[(c, c)];
        if !eliminated && (p - ONE).norm() > ZERO_TOLERANCE {
            // column already isolated but carries a phase
            let p = p / p.norm();
            push(
                TwoLevelOp {
                    dim: d,
                    indices: (c, c + 1),
                    block: [[p.conj(), ZERO], [ZERO, p]],
                },
                &mut a,
            );
        }
    }
    ops
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZyzAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phase: f64,
}

impl ZyzAngles {
    /// `e^{i phase} RZ(alpha) RY(beta) RZ(gamma)`.
    pub fn matrix(&self) -> Block {
        let m = block_mul(
            &block_mul(&rz_matrix(self.alpha), &ry_matrix(self.beta)),
            &rz_matrix(self.gamma),
        );
        let p = Complex64::from_polar(1.0, self.phase);
        m.map(|row| row.map(|z| z * p))
    }
}

/// `u = e^{i phase} RZ(alpha) RY(beta) RZ(gamma)` with `beta` in `[0, pi]`.
/// When `beta` is `0` or `pi`, `gamma` is fixed to `0`.
pub fn zyz_angles(u: &Block) -> ZyzAngles {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let phase = det.arg() / 2.0;
    let unphase = Complex64::from_polar(1.0, -phase);
    let a = u[0][0] * unphase;
    let b = u[1][0] * unphase;
    let beta = 2.0 * b.norm().atan2(a.norm());
    let (alpha, gamma) = if b.norm() <= ZERO_TOLERANCE {
        (-2.0 * a.arg(), 0.0)
    } else if a.norm() <= ZERO_TOLERANCE {
        (2.0 * b.arg(), 0.0)
    } else {
        (b.arg() - a.arg(), -a.arg() - b.arg())
    };
    ZyzAngles {
        alpha,
        beta,
        gamma,
        phase,
    }
}

/// 2x2 matrix square root, `(M + s I) / sqrt(tr M + 2 s)` with `s` the root
/// of `det M` that keeps the denominator away from zero.
fn block_sqrt(m: &Block) -> Block {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let tr = m[0][0] + m[1][1];
    let s0 = det.sqrt();
    let s = if (tr + s0 * 2.0).norm() >= (tr - s0 * 2.0).norm() {
        s0
    } else {
        -s0
    };
    let t = (tr + s * 2.0).sqrt();
    [[(m[0][0] + s) / t, m[0][1] / t], [m[1][0] / t, (m[1][1] + s) / t]]
}

const PAULI_X: Block = [[ZERO, ONE], [ONE, ZERO]];

#[derive(Clone, Copy)]
enum TargetOp {
    X,
    Unitary(Block),
}

impl TargetOp {
    fn matrix(&self) -> Block {
        match self {
            TargetOp::X => PAULI_X,
            TargetOp::Unitary(m) => *m,
        }
    }
}

struct Lowering {
    gates: Vec<Gate>,
    phase: f64,
}

impl Lowering {
    fn rz(&mut self, q: usize, theta: f64) {
        if theta.abs() > ANGLE_EPSILON {
            self.gates.push(Gate::rz(q, theta));
        }
    }

    fn ry(&mut self, q: usize, theta: f64) {
        if theta.abs() > ANGLE_EPSILON {
            self.gates.push(Gate::ry(q, theta));
        }
    }

    fn single(&mut self, q: usize, u: &Block) {
        let z = zyz_angles(u);
        self.rz(q, z.gamma);
        self.ry(q, z.beta);
        self.rz(q, z.alpha);
        self.phase += z.phase;
    }

    // C(V) = P(phase) on the control times A X B X C on the target, where
    // V = e^{i phase} RZ(a) RY(b) RZ(g) and ABC = I.
    fn singly_controlled(&mut self, control: usize, target: usize, u: &Block) {
        let z = zyz_angles(u);
        self.rz(target, (z.gamma - z.alpha) / 2.0);
        self.gates.push(Gate::cx(control, target));
        self.rz(target, -(z.gamma + z.alpha) / 2.0);
        self.ry(target, -z.beta / 2.0);
        self.gates.push(Gate::cx(control, target));
        self.ry(target, z.beta / 2.0);
        self.rz(target, z.alpha);
        // P(phi) = e^{i phi / 2} RZ(phi)
        self.rz(control, z.phase);
        self.phase += z.phase / 2.0;
    }

    fn controlled(&mut self, controls: &[usize], target: usize, op: TargetOp) {
        match (controls, op) {
            ([], TargetOp::X) => self.gates.push(Gate::x(target)),
            ([], TargetOp::Unitary(u)) => self.single(target, &u),
            ([c], TargetOp::X) => self.gates.push(Gate::cx(*c, target)),
            ([c], TargetOp::Unitary(u)) => self.singly_controlled(*c, target, &u),
            ([c0, c1], TargetOp::X) => self.gates.push(Gate::ccx(*c0, *c1, target)),
            _ => {
                // C^k(U) from C(V), C^{k-1}(X), C(V^†), C^{k-1}(X), C^{k-1}(V)
                // with V^2 = U; no ancilla needed.
                let (rest, last) = controls.split_at(controls.len() - 1);
                let last = last[0];
                let v = block_sqrt(&op.matrix());
                self.controlled(&[last], target, TargetOp::Unitary(v));
                self.controlled(rest, last, TargetOp::X);
                self.controlled(&[last], target, TargetOp::Unitary(block_dagger(&v)));
                self.controlled(rest, last, TargetOp::X);
                self.controlled(rest, target, TargetOp::Unitary(v));
            }
        }
    }

    /// Multi-controlled op on `target` firing when every other qubit matches
    /// the bits of `pattern`.
    fn conditioned_on(&mut self, n: usize, pattern: usize, target: usize, op: TargetOp) {
        let controls: Vec<usize> = (0..n).filter(|&q| q != target).collect();
        let zeros: Vec<usize> = controls
            .iter()
            .copied()
            .filter(|&q| pattern & qubit_mask(n, q) == 0)
            .collect();
        for &q in &zeros {
            self.gates.push(Gate::x(q));
        }
        self.controlled(&controls, target, op);
        for &q in &zeros {
            self.gates.push(Gate::x(q));
        }
    }

    fn two_level(&mut self, n: usize, op: &TwoLevelOp) {
        let (i, j) = op.indices;
        let diff = i ^ j;
        // Gray path i = g_0, g_1, ..., g_m = j, flipping one bit per step
        let mut path = vec![i];
        for q in 0..n {
            if diff & qubit_mask(n, q) != 0 {
                let next = path.last().expect("non-empty") ^ qubit_mask(n, q);
                path.push(next);
            }
        }
        let m = path.len() - 1;
        let flip_qubit = |a: usize, b: usize| qubit_of(n, a ^ b);
        // move |j> next to |i> via the transpositions (g_k, g_k+1)
        for k in (1..m).rev() {
            self.conditioned_on(n, path[k], flip_qubit(path[k], path[k + 1]), TargetOp::X);
        }
        let q = flip_qubit(path[0], path[1]);
        let b = op.block;
        let u = if i & qubit_mask(n, q) == 0 {
            b
        } else {
            [[b[1][1], b[1][0]], [b[0][1], b[0][0]]]
        };
        self.conditioned_on(n, i, q, TargetOp::Unitary(u));
        for k in 1..m {
            self.conditioned_on(n, path[k], flip_qubit(path[k], path[k + 1]), TargetOp::X);
        }
    }
}

fn qubit_mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

fn qubit_of(n: usize, mask: usize) -> usize {
    debug_assert!(mask.is_power_of_two());
    n - 1 - mask.trailing_zeros() as usize
}

#[derive(Clone, Debug)]
pub struct SynthesizedCircuit {
    /// Gates drawn from `RZ`, `RY`, `X`, `CX`, `CCX`.
    pub circuit: Circuit,
    /// The circuit implements `e^{-i global_phase} U`.
    pub global_phase: f64,
    /// `|e^{i global_phase} * unitary(circuit) - U|_F`.
    pub reconstruction_error: f64,
    pub gate_count: usize,
    pub two_level_count: usize,
}

impl SynthesizedCircuit {
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        Ok(self
            .circuit
            .unitary()?
            .scale(Complex64::from_polar(1.0, self.global_phase)))
    }
}

/// Decompose `u` into elementary gates and verify the result by simulation.
pub fn synthesize(u: &ComplexMatrix) -> Result<SynthesizedCircuit> {
    let n = validate_unitary(u, SYNTH_UNITARITY_TOLERANCE)?;
    let d = u.rows();
    // factor out det^(1/d) so the two-level blocks are (close to) SU(2)
    let det_phase = u.determinant()?.arg() / d as f64;
    let special = u.scale(Complex64::from_polar(1.0, -det_phase));
    let ops = eliminate(&special);

    let mut lowering = Lowering {
        gates: Vec::new(),
        phase: det_phase,
    };
    // special = V_1^† ... V_k^†, so V_k^† acts first
    for op in ops.iter().rev() {
        lowering.two_level(n, &op.dagger());
    }
    let global_phase = wrap_phase(lowering.phase);
    let gate_count = lowering.gates.len();
    let circuit = Circuit::from_gates(n, "synthesized", lowering.gates)?;
    let mut out = SynthesizedCircuit {
        circuit,
        global_phase,
        reconstruction_error: 0.0,
        gate_count,
        two_level_count: ops.len(),
    };
    out.reconstruction_error = out.unitary()?.sub(u)?.frobenius_norm();
    Ok(out)
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `|e^{-i phi} V - U|_F` with `phi = arg tr(U^† V)`, the best phase alignment.
pub fn phase_aligned_error(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    if u.rows() != v.rows() || u.cols() != v.cols() {
        return Err(Error::shape("phase_aligned_error", "operand shapes differ"));
    }
    let overlap: Complex64 = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let align = if overlap.norm() > 0.0 {
        (overlap / overlap.norm()).conj()
    } else {
        ONE
    };
    Ok(v.scale(align).sub(u)?.frobenius_norm())
}

/// `|tr(V^† U)| / 2^n` between two square unitaries of equal size.
pub fn unitary_fidelity(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    phase_invariant_fidelity(u, v)
}

/// OpenQASM 2 rendering. The global phase, if any, is noted in a comment.
pub fn to_qasm(circuit: &Circuit, global_phase: f64) -> String {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if global_phase != 0.0 {
        out.push_str(&format!("// global phase: {global_phase}\n"));
    }
    out.push_str(&format!("qreg q[{}];\n", circuit.num_qubits()));
    for g in circuit.gates() {
        out.push_str(g.kind().mnemonic());
        if let Some(theta) = g.param() {
            out.push_str(&format!("({theta})"));
        }
        let operands: Vec<String> = g.targets().iter().map(|q| format!("q[{q}]")).collect();
        out.push_str(&format!(" {};\n", operands.join(",")));
    }
    out
}
