use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uqnn::dataset::{generate, random_state};
use uqnn::linalg::{gram_schmidt, unitarity_error, ComplexMatrix, StateVector};
use uqnn::qsim::{apply_gate, benchmark_circuit, BenchmarkId, Circuit, Gate, DEFAULT_CIRCUIT_SEED};
use uqnn::synth::{phase_aligned_error, synthesize, two_level_decompose, zyz_angles};
use uqnn::trainer::{fit, forward, r2_score, InitMode, TrainConfig, UnitaryModel};

fn gaussian(dim: usize, seed: u64) -> ComplexMatrix {
    ComplexMatrix::random_gaussian(dim, dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn unitary(dim: usize, seed: u64) -> ComplexMatrix {
    gram_schmidt(&gaussian(dim, seed)).unwrap()
}

fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    prop_oneof![
        q.clone().prop_map(Gate::h),
        q.clone().prop_map(Gate::x),
        (q.clone(), -6.0..6.0f64).prop_map(|(q, t)| Gate::rx(q, t)),
        (q.clone(), -6.0..6.0f64).prop_map(|(q, t)| Gate::ry(q, t)),
        (q.clone(), -6.0..6.0f64).prop_map(|(q, t)| Gate::rz(q, t)),
        (q.clone(), 1..n).prop_map(move |(a, off)| Gate::cx(a, (a + off) % n)),
        (q, 1..n).prop_map(move |(a, off)| Gate::swap(a, (a + off) % n)),
    ]
}

fn arb_circuit() -> impl Strategy<Value = Circuit> {
    (2usize..=4).prop_flat_map(|n| {
        prop::collection::vec(arb_gate(n), 0..25)
            .prop_map(move |gates| Circuit::from_gates(n, "arb", gates).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_schmidt_output_is_unitary_and_fixed(n in 1usize..=5, seed in any::<u64>()) {
        let q = gram_schmidt(&gaussian(1 << n, seed)).unwrap();
        prop_assert!(unitarity_error(&q).unwrap() <= 1e-10);
        prop_assert!(gram_schmidt(&q).unwrap().sub(&q).unwrap().frobenius_norm() <= 1e-10);
    }

    #[test]
    fn gram_schmidt_rescues_repeated_columns(n in 1usize..=4, seed in any::<u64>(), src in 0usize..16, dst in 0usize..16) {
        let dim = 1 << n;
        let m = gaussian(dim, seed);
        let mut cols: Vec<Vec<Complex64>> = (0..dim).map(|j| m.column(j)).collect();
        let (src, dst) = (src % dim, dst % dim);
        if src != dst {
            cols[dst] = cols[src].clone();
        }
        let q = gram_schmidt(&ComplexMatrix::from_columns(&cols).unwrap()).unwrap();
        prop_assert!(unitarity_error(&q).unwrap() <= 1e-10);
    }

    #[test]
    fn adjoint_reverses_products(a in any::<u64>(), b in any::<u64>(), dim in 1usize..8) {
        let (a, b) = (gaussian(dim, a), gaussian(dim, b));
        let lhs = a.matmul(&b).unwrap().conj_transpose();
        let rhs = b.conj_transpose().matmul(&a.conj_transpose()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn circuits_preserve_norm(c in arb_circuit(), seed in any::<u64>()) {
        let psi = random_state(c.num_qubits(), &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!((c.apply(&psi).unwrap().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn unitary_agrees_with_gate_by_gate(c in arb_circuit(), seed in any::<u64>()) {
        let n = c.num_qubits();
        let psi = random_state(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let stepwise = c.gates().iter().fold(psi.clone(), |s, g| apply_gate(&s, g, n).unwrap());
        let via_matrix = c.unitary().unwrap().mul_vec(&psi).unwrap();
        prop_assert!(stepwise.distance(&via_matrix) <= 1e-12);
    }

    #[test]
    fn circuit_text_round_trips(c in arb_circuit()) {
        prop_assert_eq!(Circuit::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn zyz_reconstructs(seed in any::<u64>()) {
        let u = unitary(2, seed);
        let block = [[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]];
        let z = zyz_angles(&block);
        let m = z.matrix();
        prop_assert!((0.0..=std::f64::consts::PI).contains(&z.beta));
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((m[i][j] - block[i][j]).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn two_level_factors_rebuild(n in 1usize..=4, seed in any::<u64>()) {
        let dim = 1 << n;
        let u = unitary(dim, seed);
        let ops = two_level_decompose(&u).unwrap();
        prop_assert!(ops.len() <= dim * (dim - 1) / 2);
        let mut a = u.clone();
        for op in &ops {
            op.apply_left(&mut a);
        }
        prop_assert!(a.sub(&ComplexMatrix::identity(dim)).unwrap().frobenius_norm() <= 1e-9);
    }

    #[test]
    fn synthesis_round_trips(c in arb_circuit()) {
        let u = c.unitary().unwrap();
        let s = synthesize(&u).unwrap();
        prop_assert!(s.reconstruction_error <= 1e-6);
        prop_assert!(phase_aligned_error(&u, &s.circuit.unitary().unwrap()).unwrap() <= 1e-6);
    }
}

#[test]
fn norm_preserved_over_many_states() {
    let circuit = benchmark_circuit(BenchmarkId::Random4Q17, DEFAULT_CIRCUIT_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let psi = random_state(4, &mut rng);
        assert!((circuit.apply(&psi).unwrap().norm() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn dataset_outputs_follow_the_circuit() {
    for id in BenchmarkId::ALL {
        let circuit = benchmark_circuit(id, DEFAULT_CIRCUIT_SEED);
        let u = circuit.unitary().unwrap();
        let ds = generate(&circuit, 50, 11, 0.2).unwrap();
        for s in &ds.samples {
            assert!(u.mul_vec(&s.input).unwrap().distance(&s.output) <= 1e-10);
        }
        assert_eq!(ds.to_bytes(), generate(&circuit, 50, 11, 0.2).unwrap().to_bytes());
    }
}

#[test]
fn trained_model_is_an_isometry() {
    let ds = generate(&benchmark_circuit(BenchmarkId::Adder4Q, 0), 200, 5, 0.2).unwrap();
    let cfg = TrainConfig { epochs: 20, seed: 5, ..TrainConfig::default() };
    let report = fit(&ds, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let x = random_state(4, &mut rng);
        let y = forward(&report.final_model, &x).unwrap();
        assert!((y.norm() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn small_learning_rate_lowers_loss() {
    let ds = generate(&benchmark_circuit(BenchmarkId::Bell2Q, 0), 1000, 7, 0.2).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.01,
        epochs: 50,
        early_stop_mse: 0.0,
        seed: 7,
        ..TrainConfig::default()
    };
    let trace = fit(&ds, &cfg).unwrap().trace;
    // overall downward trend, compared on ten-epoch windows
    let window = |k: usize| trace[k * 10..(k + 1) * 10].iter().map(|m| m.train_mse).sum::<f64>();
    for k in 1..5 {
        assert!(window(k) < window(k - 1), "window {k}");
    }
    assert!(trace.last().unwrap().test_mse < trace[0].test_mse);
}

#[test]
fn untrained_model_explains_little() {
    let circuit = benchmark_circuit(BenchmarkId::Random4Q17, DEFAULT_CIRCUIT_SEED);
    let ds = generate(&circuit, 200, 13, 0.5).unwrap();
    let model = UnitaryModel::init(4, InitMode::ProjectedRandom, &mut ChaCha8Rng::seed_from_u64(1));
    let test = ds.test_set();
    let preds: Vec<StateVector> = test.iter().map(|s| forward(&model, &s.input).unwrap()).collect();
    let targets: Vec<StateVector> = test.iter().map(|s| s.output.clone()).collect();
    assert!(r2_score(&preds, &targets).unwrap() < 0.5);
}
