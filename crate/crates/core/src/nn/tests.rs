use super::*;
use crate::autodiff::{Tape, Tensor};
use crate::error::Error;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn small_net(seed: u64) -> Mlp<f64> {
    Mlp::init(&[3, 5, 2], &[Activation::leaky(), Activation::Identity], seed).unwrap()
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let cfg = AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 };
    let mut p = Tensor::<f64>::from_f64(vec![2], &[1.0, -1.0]).unwrap();
    let mut opt = Adam::new(cfg, &[&p]);
    let g = Tensor::<f64>::from_f64(vec![2], &[0.5, -3.0]).unwrap();
    opt.step(&mut [&mut p], &[g]).unwrap();
    let expect0 = 1.0 - 1e-3 * 0.5 / (0.5 + 1e-8);
    let expect1 = -1.0 + 1e-3 * 3.0 / (3.0 + 1e-8);
    assert_abs_diff_eq!(p.data()[0], expect0, epsilon = 1e-15);
    assert_abs_diff_eq!(p.data()[1], expect1, epsilon = 1e-15);
    assert_eq!(opt.steps(), 1);
}

#[test]
fn adam_zero_gradient_from_fresh_state_is_fixed_point() {
    let mut p = Tensor::<f64>::from_f64(vec![3], &[0.25, -4.0, 7.5]).unwrap();
    let before = p.clone();
    let mut opt = Adam::new(AdamConfig::default(), &[&p]);
    for _ in 0..5 {
        opt.step(&mut [&mut p], &[Tensor::zeros(&[3])]).unwrap();
    }
    assert_eq!(p, before);
}

#[test]
fn adam_aborts_on_nan_without_mutation() {
    let mut a = Tensor::<f64>::from_f64(vec![2], &[1.0, 2.0]).unwrap();
    let mut b = Tensor::<f64>::from_f64(vec![1], &[3.0]).unwrap();
    let (a0, b0) = (a.clone(), b.clone());
    let mut opt = Adam::new(AdamConfig::default(), &[&a, &b]);
    let grads = [Tensor::ones(&[2]), Tensor::<f64>::from_f64(vec![1], &[f64::NAN]).unwrap()];
    assert!(matches!(opt.step(&mut [&mut a, &mut b], &grads), Err(Error::Numeric(_))));
    assert_eq!((a, b), (a0, b0));
    assert_eq!(opt.steps(), 0);
}

#[test]
fn adam_rejects_shape_mismatch() {
    let mut a = Tensor::<f64>::zeros(&[2]);
    let mut opt = Adam::new(AdamConfig::default(), &[&a]);
    assert!(opt.step(&mut [&mut a], &[Tensor::zeros(&[3])]).is_err());
}

#[test]
fn adam_defaults() {
    let c = AdamConfig::default();
    assert_eq!((c.learning_rate, c.beta1, c.beta2, c.epsilon), (2e-4, 0.5, 0.999, 1e-8));
}

#[test]
fn xavier_bounds_and_zero_bias() {
    let net = Mlp::<f64>::init(&[10, 30], &[Activation::Tanh], 3).unwrap();
    let bound = (6.0f64 / 40.0).sqrt();
    let l = &net.layers()[0];
    assert!(l.weight.data().iter().all(|w| w.abs() <= bound));
    assert!(l.bias.data().iter().all(|b| *b == 0.0));
    assert_eq!(net.param_count(), 10 * 30 + 30);
}

#[test]
fn init_is_seed_deterministic() {
    assert_eq!(param_hash(&small_net(7)), param_hash(&small_net(7)));
    assert_ne!(param_hash(&small_net(7)), param_hash(&small_net(8)));
}

#[test]
fn init_rejects_bad_layouts() {
    assert!(Mlp::<f64>::init(&[3], &[], 0).is_err());
    assert!(Mlp::<f64>::init(&[3, 2], &[], 0).is_err());
    assert!(Mlp::<f64>::init(&[3, 0, 2], &[Activation::Tanh, Activation::Tanh], 0).is_err());
}

#[test]
fn forward_checks_input_width() {
    let net = small_net(1);
    assert!(matches!(net.predict(&Tensor::zeros(&[4, 2])), Err(Error::Dimension { .. })));
    assert_eq!(net.predict(&Tensor::zeros(&[4, 3])).unwrap().shape(), &[4, 2]);
}

#[test]
fn predict_matches_hand_computation() {
    let layer = DenseLayer {
        weight: Tensor::<f64>::from_f64(vec![2, 1], &[1.0, -2.0]).unwrap(),
        bias: Tensor::<f64>::from_f64(vec![1], &[0.5]).unwrap(),
        activation: Activation::LeakyRelu(0.2),
    };
    let net = Mlp::from_layers(vec![layer]).unwrap();
    let out = net.predict(&Tensor::<f64>::from_f64(vec![2, 2], &[1.0, 1.0, 3.0, 0.0]).unwrap()).unwrap();
    assert_abs_diff_eq!(out.data()[0], -0.1, epsilon = 1e-15);
    assert_abs_diff_eq!(out.data()[1], 3.5, epsilon = 1e-15);
}

#[test]
fn frozen_binding_yields_no_gradients() {
    let net = small_net(2);
    let mut tape = Tape::<f64>::new();
    let bound = net.bind(&mut tape, false);
    assert!(bound.vars().all(|v| !tape.requires_grad(v)));
}

#[test]
fn params_round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bcgp");
    let net = small_net(4);
    save_params(&net, &path).unwrap();
    let mut other = small_net(5);
    load_params(&mut other, &path).unwrap();
    assert_eq!(param_hash(&net), param_hash(&other));
}

#[test]
fn load_rejects_layout_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bcgp");
    save_params(&small_net(4), &path).unwrap();
    let mut wrong = Mlp::<f64>::init(&[3, 4, 2], &[Activation::Tanh, Activation::Identity], 0).unwrap();
    assert!(load_params(&mut wrong, &path).is_err());
}

#[test]
fn decode_reports_offsets() {
    let t = Tensor::<f64>::from_f64(vec![2], &[1.0, 2.0]).unwrap();
    let bytes = encode_tensors(&[&t]);
    assert_eq!(&bytes[..4], MAGIC);
    assert_eq!(bytes.len(), 4 + 4 + 4 + 4 + 4 + 16);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_tensors::<f64>(&bad), Err(Error::Format { offset: 0, .. })));

    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(decode_tensors::<f64>(&bad), Err(Error::Format { offset: 4, .. })));

    assert!(matches!(decode_tensors::<f64>(&bytes[..6]), Err(Error::Format { offset: 4, .. })));
    assert!(matches!(
        decode_tensors::<f64>(&bytes[..bytes.len() - 1]),
        Err(Error::Format { offset: 20, .. })
    ));

    let mut long = bytes.clone();
    long.push(0);
    assert!(matches!(decode_tensors::<f64>(&long), Err(Error::Format { offset: 36, .. })));
}

proptest! {
    #[test]
    fn encode_decode_is_bit_exact(v in proptest::collection::vec(any::<f64>(), 0..20)) {
        let t = Tensor::new(vec![v.len()], v.clone()).unwrap();
        let back = decode_tensors::<f64>(&encode_tensors(&[&t])).unwrap();
        let bits: Vec<u64> = back[0].data().iter().map(|x| x.to_bits()).collect();
        let want: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        prop_assert_eq!(bits, want);
    }

    #[test]
    fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode_tensors::<f64>(&bytes);
    }
}
