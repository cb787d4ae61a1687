use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn store_with(shapes: &[(usize, usize)], seed: u64) -> ParamStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    for (i, &(r, c)) in shapes.iter().enumerate() {
        store.add_glorot(format!("p{i}"), r, c, &mut rng);
    }
    store
}

/// Builds `f(params)`, reduces it against a fixed random weighting so every
/// output entry matters, and checks gradients by central differences.
fn check_op<F>(shapes: &[(usize, usize)], f: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let store = store_with(shapes, 11);
    let eval = |store: &ParamStore| -> (Tape, Var) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = store.ids().map(|id| tape.param(store, id)).collect();
        let out = f(&mut tape, &vars);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let weights = glorot(tape.value(out).nrows(), tape.value(out).ncols(), &mut rng);
        let w = tape.leaf(weights).unwrap();
        let prod = tape.mul(out, w).unwrap();
        let loss = tape.sum(prod).unwrap();
        (tape, loss)
    };
    let (tape, loss) = eval(&store);
    let grads = tape.backward(loss, store.len()).unwrap();
    let coords: Vec<(ParamId, usize)> = store
        .ids()
        .flat_map(|id| (0..store.get(id).len()).map(move |k| (id, k)))
        .collect();
    grad_check(&store, &grads, &coords, 1e-5, |s| {
        let (t, l) = eval(s);
        t.scalar(l)
    })
}

#[test]
fn elementwise_and_linear_ops_pass_gradient_check() {
    let tol = 1e-7;
    assert!(check_op(&[(3, 4), (4, 2)], |t, v| t.matmul(v[0], v[1]).unwrap()) < tol);
    assert!(check_op(&[(3, 4), (3, 4)], |t, v| t.add(v[0], v[1]).unwrap()) < tol);
    assert!(check_op(&[(3, 4), (1, 4)], |t, v| t.add_row(v[0], v[1]).unwrap()) < tol);
    assert!(check_op(&[(3, 4), (3, 4)], |t, v| t.sub(v[0], v[1]).unwrap()) < tol);
    assert!(check_op(&[(3, 4), (3, 4)], |t, v| t.mul(v[0], v[1]).unwrap()) < tol);
    assert!(check_op(&[(3, 4)], |t, v| t.scale(v[0], -2.5).unwrap()) < tol);
    assert!(check_op(&[(3, 4), (1, 1)], |t, v| t.scale_by(v[0], v[1]).unwrap()) < tol);
    assert!(check_op(&[(3, 6), (3, 2)], |t, v| t.scale_rows(v[0], v[1]).unwrap()) < tol);
    assert!(check_op(&[(2, 3), (4, 3)], |t, v| t.concat_rows(&[v[0], v[1]]).unwrap()) < tol);
    assert!(check_op(&[(2, 3), (2, 1)], |t, v| t.concat_cols(&[v[0], v[1]]).unwrap()) < tol);
    assert!(check_op(&[(5, 3)], |t, v| t.gather_rows(v[0], &[4, 0, 4, 2]).unwrap()) < tol);
}

#[test]
fn nonlinear_ops_pass_gradient_check() {
    let tol = 1e-7;
    assert!(check_op(&[(3, 4)], |t, v| t.row_softmax(v[0]).unwrap()) < tol);
    assert!(check_op(&[(6, 2)], |t, v| t.segment_softmax(v[0], &[0, 1, 0, 2, 1, 0], 4).unwrap()) < tol);
    assert!(check_op(&[(3, 4)], |t, v| t.leaky_relu(v[0], 0.2).unwrap()) < tol);
    assert!(check_op(&[(3, 4)], |t, v| t.relu(v[0]).unwrap()) < tol);
    assert!(check_op(&[(3, 4)], |t, v| t.tanh(v[0]).unwrap()) < tol);
    assert!(check_op(&[(5, 3)], |t, v| t.segment_sum(v[0], &[2, 0, 2, 2, 1], 4).unwrap()) < tol);
    assert!(check_op(&[(5, 3)], |t, v| t.segment_mean(v[0], &[2, 0, 2, 2, 1], 4).unwrap()) < tol);
    assert!(check_op(&[(3, 4)], |t, v| t.l2_norm(v[0]).unwrap()) < tol);
    assert!(check_op(&[(3, 4)], |t, v| t.mean(v[0]).unwrap()) < tol);
    assert!(check_op(&[(4, 3)], |t, v| t.softmax_cross_entropy(v[0], &[0, 2, 1, 2]).unwrap()) < tol);
    assert!(check_op(&[(4, 3)], |t, v| t.mse(v[0], Array2::from_elem((4, 3), 0.3)).unwrap()) < tol);
}

#[test]
fn softmax_examples() {
    let mut t = Tape::new();
    let x = t.leaf(array![[2.0, 2.0, 2.0]]).unwrap();
    let y = t.row_softmax(x).unwrap();
    for &p in t.value(y) {
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }
    let z = t.leaf(array![[1.0, 5.0], [3.0, -1.0], [0.5, 0.5]]).unwrap();
    let s = t.segment_softmax(z, &[0, 0, 1], 2).unwrap();
    let v = t.value(s);
    assert!((v[[0, 0]] + v[[1, 0]] - 1.0).abs() < 1e-15);
    assert_eq!(v[[2, 0]], 1.0);
}

#[test]
fn segment_mean_of_singleton_is_identity_and_empty_is_zero() {
    let mut t = Tape::new();
    let x = t.leaf(array![[1.5, -2.0], [3.0, 4.0]]).unwrap();
    let m = t.segment_mean(x, &[1, 2], 3).unwrap();
    assert_eq!(t.value(m), &array![[0.0, 0.0], [1.5, -2.0], [3.0, 4.0]]);
}

#[test]
fn tanh_is_odd() {
    let mut t = Tape::new();
    let x = t.leaf(array![[0.3, -1.2, 4.0]]).unwrap();
    let nx = t.scale(x, -1.0).unwrap();
    let a = t.tanh(x).unwrap();
    let b = t.tanh(nx).unwrap();
    assert_eq!(t.value(a), &-t.value(b));
}

#[test]
fn gradient_of_sum_of_linear_map() {
    let mut store = ParamStore::new();
    let w = store.add("w", array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
    let mut t = Tape::new();
    let x = t.leaf(array![[0.5, -1.0, 2.0]]).unwrap();
    let wv = t.param(&store, w);
    let y = t.matmul(x, wv).unwrap();
    let loss = t.sum(y).unwrap();
    let g = t.backward(loss, store.len()).unwrap();
    assert_eq!(g.param(w).unwrap(), &array![[0.5, 0.5], [-1.0, -1.0], [2.0, 2.0]]);
    assert_eq!(g.var(x).unwrap(), &array![[3.0, 7.0, 11.0]]);
}

#[test]
fn constant_loss_has_zero_gradient() {
    let mut store = ParamStore::new();
    let w = store.add("w", array![[1.0, 2.0]]);
    let mut t = Tape::new();
    let wv = t.param(&store, w);
    let z = t.scale(wv, 0.0).unwrap();
    let loss = t.sum(z).unwrap();
    let g = t.backward(loss, store.len()).unwrap();
    assert!(g.param(w).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn errors_are_reported() {
    let mut t = Tape::new();
    let a = t.leaf(Array2::zeros((2, 3))).unwrap();
    let b = t.leaf(Array2::zeros((2, 2))).unwrap();
    assert!(matches!(t.matmul(a, b), Err(AutodiffError::Shape { op: "matmul", .. })));
    assert!(matches!(t.add(a, b), Err(AutodiffError::Shape { .. })));
    assert!(matches!(t.gather_rows(a, &[2]), Err(AutodiffError::Index { .. })));
    assert_eq!(
        t.softmax_cross_entropy(a, &[0, 3]).unwrap_err(),
        AutodiffError::InvalidTarget {
            index: 3,
            classes: 3
        }
    );
    let big = t.leaf(Array2::from_elem((1, 1), 1e300)).unwrap();
    assert_eq!(
        t.scale(big, 1e300).unwrap_err(),
        AutodiffError::NonFinite { op: "scale" }
    );
    assert!(matches!(t.backward(a, 0), Err(AutodiffError::NotScalar { .. })));
    assert!(t.leaf(Array2::from_elem((1, 1), f64::NAN)).is_err());
}

#[test]
fn cross_entropy_limits() {
    let mut t = Tape::new();
    let uniform = t.leaf(Array2::zeros((2, 4))).unwrap();
    let l = t.softmax_cross_entropy(uniform, &[1, 3]).unwrap();
    assert!((t.scalar(l) - 4f64.ln()).abs() < 1e-12);
    let sharp = t.leaf(array![[20.0, 0.0, 0.0]]).unwrap();
    let l = t.softmax_cross_entropy(sharp, &[0]).unwrap();
    assert!(t.scalar(l) < 1e-6);
    let p = t.leaf(array![[0.2, 0.7]]).unwrap();
    let m = t.mse(p, array![[0.2, 0.7]]).unwrap();
    assert_eq!(t.scalar(m), 0.0);
}

fn quadratic_grads(store: &ParamStore, id: ParamId) -> Gradients {
    let mut t = Tape::new();
    let th = t.param(store, id);
    let sq = t.mul(th, th).unwrap();
    let loss = t.sum(sq).unwrap();
    t.backward(loss, store.len()).unwrap()
}

#[test]
fn adam_on_a_parabola_matches_scalar_simulation() {
    let mut store = ParamStore::new();
    let id = store.add("theta", array![[1.0]]);
    let mut adam = Adam::new(&store);
    for _ in 0..100 {
        let g = quadratic_grads(&store, id);
        adam.step(&mut store, &g, 0.1, 0.0).unwrap();
    }
    // Independent scalar re-implementation.
    let (mut th, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
    for t in 1..=100 {
        let g = 2.0 * th;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        let mh = m / (1.0 - 0.9f64.powi(t));
        let vh = v / (1.0 - 0.999f64.powi(t));
        th -= 0.1 * mh / (vh.sqrt() + 1e-8);
    }
    let got = store.get(id)[[0, 0]];
    assert!((got - th).abs() < 1e-12, "{got} vs {th}");
    assert!(got.abs() < 0.1);
    assert_eq!(adam.steps(), 100);
}

#[test]
fn adam_first_step_and_zero_gradient() {
    let mut store = ParamStore::new();
    let id = store.add("theta", array![[0.5, -2.0]]);
    let before = store.clone();
    let mut adam = Adam::new(&store);
    let mut t = Tape::new();
    let th = t.param(&store, id);
    let z = t.scale(th, 0.0).unwrap();
    let loss = t.sum(z).unwrap();
    let zero = t.backward(loss, store.len()).unwrap();
    adam.step(&mut store, &zero, 0.01, 0.0).unwrap();
    assert_eq!(store, before);

    let mut adam = Adam::new(&store);
    let g = quadratic_grads(&store, id);
    adam.step(&mut store, &g, 0.01, 0.0).unwrap();
    let delta = store.get(id) - before.get(id);
    assert!((delta[[0, 0]] + 0.01).abs() < 1e-9);
    assert!((delta[[0, 1]] - 0.01).abs() < 1e-9);
}

#[test]
fn l2_pulls_toward_zero_without_gradient() {
    let mut store = ParamStore::new();
    let id = store.add("theta", array![[1.0]]);
    let mut adam = Adam::new(&store);
    let empty = Tape::new();
    let mut t = empty;
    let c = t.leaf(array![[1.0]]).unwrap();
    let loss = t.sum(c).unwrap();
    let g = t.backward(loss, store.len()).unwrap();
    adam.step(&mut store, &g, 0.01, 0.5).unwrap();
    assert!(store.get(id)[[0, 0]] < 1.0);
}

#[test]
fn schedule_decays_geometrically() {
    let s = ExponentialSchedule::new(0.1, 0.99).unwrap();
    assert_eq!(s.lr(0), 0.1);
    for t in 0..200 {
        let ratio = s.lr(t + 1) / s.lr(t);
        assert!((ratio - 0.99).abs() < 1e-13);
        assert!(s.lr(t + 1) <= s.lr(t));
    }
    assert!(ExponentialSchedule::new(0.1, 1.5).is_err());
    assert!(ExponentialSchedule::new(0.0, 0.9).is_err());
}

#[test]
fn grad_check_is_exact_for_linear_losses() {
    let store = store_with(&[(3, 3)], 5);
    let id = store.ids().next().unwrap();
    let eval = |s: &ParamStore| {
        let mut t = Tape::new();
        let w = t.param(s, id);
        let y = t.scale(w, 3.0).unwrap();
        let l = t.sum(y).unwrap();
        (t, l)
    };
    let (t, l) = eval(&store);
    let g = t.backward(l, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let coords = sample_coords(&store, 9, &mut rng);
    let err = grad_check(&store, &g, &coords, 1e-5, |s| {
        let (t, l) = eval(s);
        t.scalar(l)
    });
    assert!(err < 1e-9, "{err}");
}

#[test]
fn identical_inputs_give_identical_losses() {
    let run = || {
        let store = store_with(&[(4, 4), (4, 3)], 3);
        let ids: Vec<_> = store.ids().collect();
        let mut t = Tape::new();
        let a = t.param(&store, ids[0]);
        let b = t.param(&store, ids[1]);
        let h = t.matmul(a, b).unwrap();
        let h = t.tanh(h).unwrap();
        let l = t.softmax_cross_entropy(h, &[0, 1, 2, 0]).unwrap();
        t.scalar(l).to_bits()
    };
    assert_eq!(run(), run());
}
