use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

const H: f64 = 1e-5;

fn random(rng: &mut ChaCha8Rng, shape: (usize, usize), away_from_zero: bool) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || {
        let mut x: f64 = rng.random_range(-1.0..1.0);
        if away_from_zero && x.abs() < 0.05 {
            x += 0.1f64.copysign(x);
        }
        x
    })
}

/// Largest relative error between tape gradients and central differences of
/// `mean(build(inputs) * r)` for a fixed random `r`.
fn gradcheck<F>(build: F, inputs: &[Array2<f64>], rng: &mut ChaCha8Rng) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let eval = |xs: &[Array2<f64>], r: &Array2<f64>| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.leaf(x.clone())).collect();
        let out = build(&mut tape, &vars);
        let rv = tape.leaf(r.clone());
        let prod = tape.mul(out, rv);
        let loss = tape.mean(prod);
        (tape, vars, loss)
    };
    let shape = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
        let out = build(&mut tape, &vars);
        tape.value(out).dim()
    };
    let r = random(rng, shape, false);
    let (tape, vars, loss) = eval(inputs, &r);
    let grads = tape.backward(loss).unwrap();

    let mut worst: f64 = 0.0;
    for (k, x) in inputs.iter().enumerate() {
        let analytic = grads.wrt(vars[k]);
        for idx in 0..x.len() {
            let mut plus = inputs.to_vec();
            let mut minus = inputs.to_vec();
            plus[k].as_slice_mut().unwrap()[idx] += H;
            minus[k].as_slice_mut().unwrap()[idx] -= H;
            let (tp, _, lp) = eval(&plus, &r);
            let (tm, _, lm) = eval(&minus, &r);
            let numeric = (tp.scalar(lp) - tm.scalar(lm)) / (2.0 * H);
            let a = analytic.iter().nth(idx).copied().unwrap();
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}

#[test]
fn every_op_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let (n, k, m) = (1 + trial % 4, 1 + trial % 3, 2 + trial % 2);
        let a = random(&mut rng, (n, k), true);
        let b = random(&mut rng, (k, m), true);
        let c = random(&mut rng, (n, k), true);
        let row = random(&mut rng, (1, k), true);
        let s = rng.random_range(-2.0..2.0);

        let cases: Vec<(&str, f64)> = vec![
            ("matmul", gradcheck(|t, v| t.matmul(v[0], v[1]), &[a.clone(), b.clone()], &mut rng)),
            ("add_row", gradcheck(|t, v| t.add_row(v[0], v[1]), &[a.clone(), row.clone()], &mut rng)),
            ("add", gradcheck(|t, v| t.add(v[0], v[1]), &[a.clone(), c.clone()], &mut rng)),
            ("sub", gradcheck(|t, v| t.sub(v[0], v[1]), &[a.clone(), c.clone()], &mut rng)),
            ("mul", gradcheck(|t, v| t.mul(v[0], v[1]), &[a.clone(), c.clone()], &mut rng)),
            ("scale", gradcheck(|t, v| t.scale(v[0], s), &[a.clone()], &mut rng)),
            ("neg", gradcheck(|t, v| t.neg(v[0]), &[a.clone()], &mut rng)),
            ("relu", gradcheck(|t, v| t.relu(v[0]), &[a.clone()], &mut rng)),
            ("leaky_relu", gradcheck(|t, v| t.leaky_relu(v[0], 0.2), &[a.clone()], &mut rng)),
            ("abs", gradcheck(|t, v| t.abs(v[0]), &[a.clone()], &mut rng)),
            ("square", gradcheck(|t, v| t.square(v[0]), &[a.clone()], &mut rng)),
            ("mean", gradcheck(|t, v| t.mean(v[0]), &[a.clone()], &mut rng)),
        ];
        for (name, err) in cases {
            assert!(err <= 1e-4, "{name}: relative error {err}");
        }
    }
}

#[test]
fn random_mlp_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let head = if trial % 2 == 0 { Head::Identity } else { Head::NegAbs };
        let out = if head == Head::NegAbs { 1 } else { 2 };
        let act = if trial % 3 == 0 { Activation::Relu } else { Activation::default() };
        let net = Mlp::new(&[2, 8, 8, out], act, head, trial).unwrap();
        let x = random(&mut rng, (5, 2), false);
        let mut inputs = net.params().to_vec();
        inputs.push(x);
        let np = net.params().len();
        let err = gradcheck(|t, v| net.record(t, &v[..np], v[np]).unwrap(), &inputs, &mut rng);
        assert!(err <= 1e-4, "trial {trial}: relative error {err}");
    }
}

#[test]
fn sum_of_squares_gradient_is_twice_params() {
    let p = array![[1.0, -2.0], [0.5, 3.0]];
    let mut tape = Tape::new();
    let v = tape.leaf(p.clone());
    let sq = tape.square(v);
    let m = tape.mean(sq);
    let loss = tape.scale(m, 4.0);
    let g = tape.backward(loss).unwrap().wrt(v);
    assert_eq!(g, &p * 2.0);
}

#[test]
fn unused_leaf_gets_exact_zero() {
    let mut tape = Tape::new();
    let a = tape.leaf(array![[1.0, 2.0]]);
    let b = tape.leaf(array![[3.0], [4.0]]);
    let loss = tape.mean(a);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.wrt(b), Array2::<f64>::zeros((2, 1)));
}

#[test]
fn non_scalar_loss_rejected() {
    let mut tape = Tape::new();
    let a = tape.leaf(array![[1.0, 2.0]]);
    assert!(matches!(tape.backward(a), Err(Error::NonScalarLoss { rows: 1, cols: 2 })));
}

#[test]
fn abs_subgradient_at_zero_is_zero() {
    let mut tape = Tape::new();
    let a = tape.leaf(array![[0.0, 2.0, -3.0]]);
    let b = tape.abs(a);
    let c = tape.neg(b);
    assert_eq!(tape.value(c), &array![[0.0, -2.0, -3.0]]);
    let loss = tape.mean(c);
    let g = tape.backward(loss).unwrap().wrt(a);
    assert_eq!(g, array![[0.0, -1.0 / 3.0, 1.0 / 3.0]]);
}

#[test]
fn zero_network_outputs_zero() {
    let mut net = Mlp::new(&[3, 4, 2], Activation::default(), Head::Identity, 1).unwrap();
    for p in net.params_mut() {
        p.fill(0.0);
    }
    let out = net.forward(&array![[1.0, -2.0, 3.0], [0.1, 0.2, 0.3]]).unwrap();
    assert_eq!(out, Array2::<f64>::zeros((2, 2)));
}

#[test]
fn identity_linear_layer() {
    let mut net = Mlp::new(&[2, 2], Activation::default(), Head::Identity, 1).unwrap();
    net.params_mut()[0] = Array2::eye(2);
    let x = array![[0.3, -1.5], [2.0, 4.0]];
    assert_eq!(net.forward(&x).unwrap(), x);
}

#[test]
fn forward_is_deterministic_per_seed() {
    let x = array![[0.3, -1.5], [2.0, 4.0]];
    let a = Mlp::map(2, &[16, 16], Activation::default(), 42).unwrap();
    let b = Mlp::map(2, &[16, 16], Activation::default(), 42).unwrap();
    let c = Mlp::map(2, &[16, 16], Activation::default(), 43).unwrap();
    assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
    assert_ne!(a.forward(&x).unwrap(), c.forward(&x).unwrap());
}

#[test]
fn forward_matches_recorded_pass() {
    let net = Mlp::potential(2, &[8, 8], Activation::default(), 5).unwrap();
    let x = array![[0.3, -1.5], [2.0, 4.0], [0.0, 0.0]];
    let mut tape = Tape::new();
    let params = net.register(&mut tape);
    let xv = tape.leaf(x.clone());
    let out = net.record(&mut tape, &params, xv).unwrap();
    assert_eq!(tape.value(out), &net.forward(&x).unwrap());
}

#[test]
fn forward_rejects_wrong_dimension() {
    let net = Mlp::map(2, &[4], Activation::default(), 0).unwrap();
    let err = net.forward(&Array2::zeros((3, 3))).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 3 }));
}

#[test]
fn forward_reports_non_finite_activation() {
    let mut net = Mlp::map(2, &[4], Activation::default(), 0).unwrap();
    net.params_mut()[0].fill(f64::MAX);
    let err = net.forward(&array![[1e300, 1e300]]).unwrap_err();
    assert!(matches!(err, Error::NonFiniteActivation(0)));
}

#[test]
fn head_examples() {
    // A single linear unit with weight 1 exposes the head directly.
    let mut net = Mlp::new(&[1, 1], Activation::default(), Head::NegAbs, 0).unwrap();
    net.params_mut()[0].fill(1.0);
    let out = net.forward(&array![[3.7], [-2.0], [0.0]]).unwrap();
    assert_eq!(out, array![[-3.7], [-2.0], [0.0]]);
}

#[test]
fn head_never_positive() {
    let net = Mlp::potential(2, &[32, 32], Activation::default(), 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = Array2::from_shape_simple_fn((100_000, 2), || rng.random_range(-10.0..10.0));
    let out = net.forward(&x).unwrap();
    assert!(out.iter().all(|&v| v <= 0.0));
}

#[test]
fn adam_zero_gradient_keeps_params() {
    let mut params = vec![array![[1.0, 2.0]], array![[3.0]]];
    let before = params.clone();
    let grads = vec![Array2::zeros((1, 2)), Array2::zeros((1, 1))];
    let mut opt = Adam::new(&params, 1e-3);
    for _ in 0..5 {
        opt.step(&mut params, &grads).unwrap();
    }
    assert_eq!(params, before);
    assert_eq!(opt.steps(), 5);
}

#[test]
fn adam_first_step_by_hand() {
    let mut params = vec![array![[0.0]]];
    let mut opt = Adam::new(&params, 1e-3);
    opt.step(&mut params, &[array![[1.0]]]).unwrap();
    // m_hat = 1, v_hat = 1 after bias correction.
    let expected = -1e-3 / (1.0 + 1e-8);
    assert!((params[0][[0, 0]] - expected).abs() < 1e-15);
}

#[test]
fn adam_moves_against_constant_gradient() {
    let mut params = vec![array![[0.0, 0.0]]];
    let mut opt = Adam::new(&params, 1e-2);
    for _ in 0..100 {
        opt.step(&mut params, &[array![[0.5, -2.0]]]).unwrap();
    }
    assert!(params[0][[0, 0]] < 0.0 && params[0][[0, 1]] > 0.0);
}

#[test]
fn adam_shape_mismatch() {
    let mut params = vec![array![[0.0, 0.0]]];
    let mut opt = Adam::new(&params, 1e-2);
    assert!(matches!(opt.step(&mut params, &[array![[1.0]]]), Err(Error::ShapeMismatch(_))));
    assert!(matches!(opt.step(&mut params, &[]), Err(Error::ShapeMismatch(_))));
    assert_eq!(opt.steps(), 0);
}

#[test]
fn multistep_schedule() {
    let s = MultiStepLr { base: 1e-3, milestones: vec![10, 20], gamma: 0.5 };
    assert_eq!(s.at(0), 1e-3);
    assert_eq!(s.at(10), 5e-4);
    assert_eq!(s.at(25), 2.5e-4);
}

#[test]
fn checkpoint_round_trip() {
    let net = Mlp::potential(2, &[8, 4], Activation::Relu, 17).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    net.save(&path).unwrap();
    let back = Mlp::load(&path).unwrap();
    assert_eq!(back, net);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["version"], CHECKPOINT_VERSION);
    assert_eq!(json["layer_dims"], serde_json::json!([2, 8, 4, 1]));
    // Row-major flattening of the first weight matrix.
    let w0 = &net.params()[0];
    assert_eq!(json["params"][0][1].as_f64().unwrap(), w0[[0, 1]]);
    assert_eq!(json["params"][0][8].as_f64().unwrap(), w0[[1, 0]]);
}

#[test]
fn checkpoint_rejects_bad_files() {
    let net = Mlp::map(2, &[3], Activation::default(), 0).unwrap();
    let mut ck = net.to_checkpoint();
    ck.version = "other".into();
    assert!(matches!(Mlp::from_checkpoint(&ck), Err(Error::Format(_))));
    let mut ck = net.to_checkpoint();
    ck.params[1].pop();
    assert!(matches!(Mlp::from_checkpoint(&ck), Err(Error::Format(_))));
}

proptest! {
    #[test]
    fn head_output_non_positive(seed in 0u64..1000, x in prop::collection::vec(-50.0f64..50.0, 2)) {
        let net = Mlp::potential(2, &[6], Activation::default(), seed).unwrap();
        let out = net.forward(&Array2::from_shape_vec((1, 2), x).unwrap()).unwrap();
        prop_assert!(out[[0, 0]] <= 0.0);
    }
}
