use super::*;
use crate::error::Error;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn t2(rows: &[&[f64]]) -> Tensor<f64> {
    Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn matmul_value_and_grads() {
    let mut tape = Tape::<f64>::new();
    let a = tape.leaf(t2(&[&[1.0, 2.0], &[3.0, 4.0]]));
    let b = tape.leaf(t2(&[&[5.0, 6.0], &[7.0, 8.0]]));
    let c = tape.matmul(a, b).unwrap();
    assert_eq!(tape.value(c).data(), &[19.0, 22.0, 43.0, 50.0]);
    let s = tape.sum(c);
    let g = tape.backward(s).unwrap();
    assert_eq!(g.wrt(a).data(), &[11.0, 15.0, 11.0, 15.0]);
    assert_eq!(g.wrt(b).data(), &[4.0, 4.0, 6.0, 6.0]);
}

#[test]
fn matmul_rejects_mismatch() {
    let mut tape = Tape::<f64>::new();
    let a = tape.leaf(Tensor::zeros(&[2, 3]));
    let b = tape.leaf(Tensor::zeros(&[2, 3]));
    assert!(matches!(tape.matmul(a, b), Err(Error::Dimension { .. })));
}

#[test]
fn sigmoid_at_zero() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::scalar(0.0));
    let y = tape.sigmoid(x);
    assert_eq!(tape.value(y).item(), 0.5);
    let g = tape.backward(y).unwrap();
    assert_eq!(g.wrt(x).item(), 0.25);
}

#[test]
fn leaky_relu_negative_branch() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::scalar(-2.0));
    let y = tape.leaky_relu(x, 0.2);
    assert_abs_diff_eq!(tape.value(y).item(), -0.4, epsilon = 1e-15);
    let g = tape.backward(y).unwrap();
    assert_abs_diff_eq!(g.wrt(x).item(), 0.2, epsilon = 1e-15);
}

#[test]
fn log_of_nonpositive_is_domain_error() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::from_f64(vec![2], &[1.0, 0.0]).unwrap());
    assert!(matches!(tape.log(x), Err(Error::Domain { .. })));
}

#[test]
fn bce_at_zero_logit_is_ln2() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::from_f64(vec![3, 1], &[0.0; 3]).unwrap());
    let y = tape.constant(Tensor::ones(&[3, 1]));
    let l = tape.bce_with_logits(x, y).unwrap();
    assert_abs_diff_eq!(tape.value(l).item(), std::f64::consts::LN_2, epsilon = 1e-15);
    let g = tape.backward(l).unwrap();
    for v in g.wrt(x).data() {
        assert_abs_diff_eq!(*v, -0.5 / 3.0, epsilon = 1e-15);
    }
}

#[test]
fn bce_survives_extreme_logits() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::from_f64(vec![2], &[800.0, -800.0]).unwrap());
    let y = tape.constant(Tensor::from_f64(vec![2], &[0.0, 1.0]).unwrap());
    let l = tape.bce_with_logits(x, y).unwrap();
    assert_abs_diff_eq!(tape.value(l).item(), 800.0, epsilon = 1e-9);
    assert!(tape.backward(l).unwrap().wrt(x).is_finite());
}

#[test]
fn softmax_ce_uniform_two_classes_is_ln2() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::zeros(&[4, 2]));
    let t = tape.constant(t2(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]));
    let l = tape.softmax_cross_entropy(x, t).unwrap();
    assert_abs_diff_eq!(tape.value(l).item(), std::f64::consts::LN_2, epsilon = 1e-15);
    let g = tape.backward(l).unwrap();
    assert_abs_diff_eq!(g.wrt(x).data()[0], -0.125, epsilon = 1e-15);
    assert_abs_diff_eq!(g.wrt(x).data()[1], 0.125, epsilon = 1e-15);
}

#[test]
fn mse_value() {
    let mut tape = Tape::<f64>::new();
    let p = tape.leaf(Tensor::from_f64(vec![2], &[1.0, 3.0]).unwrap());
    let t = tape.constant(Tensor::from_f64(vec![2], &[0.0, 1.0]).unwrap());
    let l = tape.mse(p, t).unwrap();
    assert_eq!(tape.value(l).item(), 2.5);
    assert_eq!(tape.backward(l).unwrap().wrt(p).data(), &[1.0, 2.0]);
}

#[test]
fn concat_and_slice_route_gradients() {
    let mut tape = Tape::<f64>::new();
    let a = tape.leaf(t2(&[&[1.0], &[2.0]]));
    let b = tape.leaf(t2(&[&[3.0, 4.0], &[5.0, 6.0]]));
    let c = tape.concat(&[a, b], 1).unwrap();
    assert_eq!(tape.value(c).data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
    let s = tape.slice(c, 1, 1, 1).unwrap();
    assert_eq!(tape.value(s).data(), &[3.0, 5.0]);
    let l = tape.sum(s);
    let g = tape.backward(l).unwrap();
    assert_eq!(g.wrt(a).data(), &[0.0, 0.0]);
    assert_eq!(g.wrt(b).data(), &[1.0, 0.0, 1.0, 0.0]);
    assert!(matches!(tape.slice(c, 1, 2, 2), Err(Error::Bounds { .. })));
}

#[test]
fn shared_node_accumulates() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::scalar(3.0));
    let y = tape.mul(x, x).unwrap();
    let z = tape.add(y, x).unwrap();
    assert_eq!(tape.backward(z).unwrap().wrt(x).item(), 7.0);
}

#[test]
fn constants_and_detach_block_gradients() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::scalar(2.0));
    let d = tape.detach(x);
    assert!(!tape.requires_grad(d));
    let y = tape.mul(x, d).unwrap();
    assert_eq!(tape.backward(y).unwrap().wrt(x).item(), 2.0);
}

#[test]
fn backward_needs_scalar_root() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::zeros(&[2]));
    assert!(matches!(tape.backward(x), Err(Error::Contract(_))));
}

#[test]
fn unreached_leaf_gets_zeros() {
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::<f64>::zeros(&[2, 2]));
    let y = tape.leaf(Tensor::scalar(1.0));
    let g = tape.backward(y).unwrap();
    assert_eq!(g.wrt(x), Tensor::zeros(&[2, 2]));
}

#[test]
fn backward_is_deterministic() {
    let run = || {
        let mut tape = Tape::<f64>::new();
        let w = tape.leaf(Tensor::from_f64(vec![3, 2], &[0.1, -0.2, 0.3, 0.4, -0.5, 0.6]).unwrap());
        let x = tape.constant(Tensor::from_f64(vec![2, 3], &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0]).unwrap());
        let h = tape.matmul(x, w).unwrap();
        let h = tape.tanh(h);
        let l = tape.mean(h);
        tape.backward(l).unwrap().wrt(w)
    };
    let (a, b) = (run(), run());
    assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn f32_tape_matches_f64() {
    let mut t32 = Tape::<f32>::new();
    let a = t32.leaf(Tensor::<f32>::from_f64(vec![1, 2], &[0.5, -1.5]).unwrap());
    let s = t32.sigmoid(a);
    let l = t32.sum(s);
    let g32 = t32.backward(l).unwrap().wrt(a);
    let mut t64 = Tape::<f64>::new();
    let a = t64.leaf(Tensor::from_f64(vec![1, 2], &[0.5, -1.5]).unwrap());
    let s = t64.sigmoid(a);
    let l = t64.sum(s);
    let g64 = t64.backward(l).unwrap().wrt(a);
    for (p, q) in g32.data().iter().zip(g64.data()) {
        assert_abs_diff_eq!(*p as f64, *q, epsilon = 1e-6);
    }
}

#[test]
fn relative_error_floor() {
    assert_eq!(relative_error(0.0, 0.0), 0.0);
    assert_abs_diff_eq!(relative_error(1e-10, 0.0), 1e-2, epsilon = 1e-12);
    assert_abs_diff_eq!(relative_error(2.0, 1.0), 0.5, epsilon = 1e-15);
}

#[test]
fn tensor_shape_checks() {
    assert!(Tensor::<f64>::new(vec![2, 2], vec![0.0; 3]).is_err());
    let t = t2(&[&[1.0, 5.0, 5.0], &[7.0, 0.0, 7.0]]);
    assert_eq!(t.argmax_rows(), vec![1, 0]);
    assert_eq!(t.select_rows(&[1]).data(), &[7.0, 0.0, 7.0]);
    assert!(t.clone().reshape(vec![4]).is_err());
}

proptest! {
    #[test]
    fn bce_matches_sigmoid_form(x in -12.0f64..12.0, y in 0.0f64..1.0) {
        let mut tape = Tape::<f64>::new();
        let xv = tape.leaf(Tensor::scalar(x));
        let yv = tape.constant(Tensor::scalar(y));
        let l = tape.bce_with_logits(xv, yv).unwrap();
        let s = 1.0 / (1.0 + (-x).exp());
        let naive = -(y * s.ln() + (1.0 - y) * (1.0 - s).ln());
        prop_assert!((tape.value(l).item() - naive).abs() < 1e-9);
    }

    #[test]
    fn softmax_rows_are_distributions(v in proptest::collection::vec(-50.0f64..50.0, 6)) {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::new(vec![2, 3], v).unwrap());
        let s = tape.softmax(x);
        let out = tape.value(s);
        for r in 0..2 {
            let row = out.row(r);
            prop_assert!(row.iter().all(|p| *p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn concat_slice_round_trip(a in proptest::collection::vec(-5.0f64..5.0, 4),
                               b in proptest::collection::vec(-5.0f64..5.0, 6)) {
        let mut tape = Tape::<f64>::new();
        let av = tape.leaf(Tensor::new(vec![2, 2], a.clone()).unwrap());
        let bv = tape.leaf(Tensor::new(vec![2, 3], b.clone()).unwrap());
        let c = tape.concat(&[av, bv], 1).unwrap();
        let back_a = tape.slice(c, 1, 0, 2).unwrap();
        let back_b = tape.slice(c, 1, 2, 3).unwrap();
        prop_assert_eq!(tape.value(back_a).data(), &a[..]);
        prop_assert_eq!(tape.value(back_b).data(), &b[..]);
    }

    #[test]
    fn composed_graph_passes_grad_check(v in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let point = Tensor::new(vec![2, 3], v).unwrap();
        let report = grad_check(
            |t: &mut Tape<f64>, x| {
                let h = t.tanh(x);
                let s = t.softmax(h);
                let m = t.mul(s, x)?;
                Ok(t.sum(m))
            },
            &point,
            1e-5,
            1e-5,
        )
        .unwrap();
        prop_assert!(report.passed, "max rel err {}", report.max_rel_err);
    }
}
