//! Central finite differences (step 1e-3, f64) against the analytic
//! backward passes. Each case returns `(name, worst relative error)` pairs.

#![allow(dead_code)]

use dapotion_nn::layers::dropout::{apply_mask, sample_mask};
use dapotion_nn::layers::pool::{global_avg_pool, global_avg_pool_backward};
use dapotion_nn::layers::{softmax_cross_entropy, BatchNorm, Conv3d, Dense};
use dapotion_nn::model::{init_model, ClassifierConfig, ForwardPass, Masks};
use dapotion_nn::{Matrix, Model, Tensor5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-3;
pub const TOL: f64 = 1e-4;

pub type Report = Vec<(String, f64)>;

/// Relative error with a floor of 1e-4 on the denominator, so entries that
/// are themselves below 1e-4 are held to an absolute error of 1e-8.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-4)
}

fn random(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn tensor(shape: [usize; 5], rng: &mut ChaCha8Rng) -> Tensor5<f64> {
    Tensor5::from_vec(shape, random(shape.iter().product(), rng)).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compares `analytic[i]` with the central difference of `f` with respect to
/// `values[i]` for every index; returns the worst relative error.
fn check(values: &mut [f64], analytic: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(values.len(), analytic.len());
    let mut worst = 0.0f64;
    for i in 0..values.len() {
        let orig = values[i];
        values[i] = orig + STEP;
        let plus = f(values);
        values[i] = orig - STEP;
        let minus = f(values);
        values[i] = orig;
        let numeric = (plus - minus) / (2.0 * STEP);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

pub fn conv(stride: usize, dims: [usize; 3]) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(stride as u64);
    let mut conv = Conv3d::<f64>::zeros(2, 3, stride);
    conv.weight = random(conv.weight.len(), &mut rng);
    conv.bias = random(3, &mut rng);
    let x = tensor([2, 2, dims[0], dims[1], dims[2]], &mut rng);
    let y = conv.forward(&x).unwrap();
    let r = random(y.data().len(), &mut rng);
    let dy = Tensor5::from_vec(y.shape(), r.clone()).unwrap();
    let g = conv.backward(&x, &dy, true).unwrap();

    let loss = |c: &Conv3d<f64>, x: &Tensor5<f64>| dot(c.forward(x).unwrap().data(), &r);
    let mut xs = x.data().to_vec();
    let input = check(&mut xs, g.input.as_ref().unwrap().data(), |v| {
        loss(&conv, &Tensor5::from_vec(x.shape(), v.to_vec()).unwrap())
    });
    let mut w = conv.weight.clone();
    let weight = check(&mut w, &g.weight, |v| {
        let c = Conv3d { weight: v.to_vec(), ..conv.clone() };
        loss(&c, &x)
    });
    let mut b = conv.bias.clone();
    let bias = check(&mut b, &g.bias, |v| {
        let c = Conv3d { bias: v.to_vec(), ..conv.clone() };
        loss(&c, &x)
    });
    vec![
        (format!("conv stride {stride} input"), input),
        (format!("conv stride {stride} weight"), weight),
        (format!("conv stride {stride} bias"), bias),
    ]
}

pub fn batchnorm() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bn = BatchNorm::<f64>::new(3, 1e-5, 0.1);
    bn.gamma = random(3, &mut rng);
    bn.beta = random(3, &mut rng);
    let x = tensor([2, 3, 3, 2, 2], &mut rng);
    let (y, cache) = bn.forward_train(&x).unwrap();
    let r = random(y.data().len(), &mut rng);
    let dy = Tensor5::from_vec(y.shape(), r.clone()).unwrap();
    let (dx, dgamma, dbeta) = bn.backward(&cache, &dy).unwrap();
    let loss = |b: &BatchNorm<f64>, x: &Tensor5<f64>| dot(b.forward_train(x).unwrap().0.data(), &r);

    let mut xs = x.data().to_vec();
    let input = check(&mut xs, dx.data(), |v| loss(&bn, &Tensor5::from_vec(x.shape(), v.to_vec()).unwrap()));
    let mut g = bn.gamma.clone();
    let gamma = check(&mut g, &dgamma, |v| loss(&BatchNorm { gamma: v.to_vec(), ..bn.clone() }, &x));
    let mut b = bn.beta.clone();
    let beta = check(&mut b, &dbeta, |v| loss(&BatchNorm { beta: v.to_vec(), ..bn.clone() }, &x));
    vec![
        ("batchnorm input".into(), input),
        ("batchnorm gamma".into(), gamma),
        ("batchnorm beta".into(), beta),
    ]
}

pub fn dropout() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mask: Vec<f64> = sample_mask(40, 0.25, &mut rng);
    let mut x = random(40, &mut rng);
    let r = random(40, &mut rng);
    let mut analytic = r.clone();
    apply_mask(&mut analytic, &mask);
    let e = check(&mut x, &analytic, |v| {
        let mut y = v.to_vec();
        apply_mask(&mut y, &mask);
        dot(&y, &r)
    });
    vec![("dropout".into(), e)]
}

pub fn pool() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = tensor([2, 3, 2, 3, 4], &mut rng);
    let r = random(6, &mut rng);
    let dy = Matrix { rows: 2, cols: 3, data: r.clone() };
    let dx = global_avg_pool_backward(&dy, x.shape());
    let mut xs = x.data().to_vec();
    let e = check(&mut xs, dx.data(), |v| {
        dot(&global_avg_pool(&Tensor5::from_vec(x.shape(), v.to_vec()).unwrap()).data, &r)
    });
    vec![("global average pool".into(), e)]
}

pub fn dense() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut dense = Dense::<f64>::zeros(5, 3);
    dense.weight = random(15, &mut rng);
    dense.bias = random(3, &mut rng);
    let x = Matrix { rows: 4, cols: 5, data: random(20, &mut rng) };
    let r = random(12, &mut rng);
    let dy = Matrix { rows: 4, cols: 3, data: r.clone() };
    let (dx, dw, db) = dense.backward(&x, &dy).unwrap();
    let loss = |d: &Dense<f64>, x: &Matrix<f64>| dot(&d.forward(x).unwrap().data, &r);
    let mut xs = x.data.clone();
    let input = check(&mut xs, &dx.data, |v| loss(&dense, &Matrix { data: v.to_vec(), ..x.clone() }));
    let mut w = dense.weight.clone();
    let weight = check(&mut w, &dw, |v| loss(&Dense { weight: v.to_vec(), ..dense.clone() }, &x));
    let mut b = dense.bias.clone();
    let bias = check(&mut b, &db, |v| loss(&Dense { bias: v.to_vec(), ..dense.clone() }, &x));
    vec![
        ("dense input".into(), input),
        ("dense weight".into(), weight),
        ("dense bias".into(), bias),
    ]
}

pub fn cross_entropy() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let labels = [0, 3, 1];
    let mut logits = random(12, &mut rng);
    let m = Matrix { rows: 3, cols: 4, data: logits.clone() };
    let ce = softmax_cross_entropy(&m, &labels).unwrap();
    let e = check(&mut logits, &ce.dlogits.data, |v| {
        softmax_cross_entropy(&Matrix { data: v.to_vec(), ..m.clone() }, &labels).unwrap().loss
    });
    vec![("softmax cross-entropy".into(), e)]
}

/// ReLU on/off pattern of every unit in a training pass.
fn activation_pattern(pass: &ForwardPass<f64>) -> Vec<bool> {
    pass.units
        .iter()
        .flat_map(|u| u.output.data().iter().map(|&v| v > 0.0))
        .collect()
}

/// Moves each batchnorm shift so the ReLU threshold sits in the widest gap
/// of that channel's normalized values between the quartiles. The loss is
/// then differentiable across the whole finite-difference stencil while
/// about half the units stay switched off.
fn center_thresholds_in_gaps(model: &mut Model<f64>, x: &Tensor5<f64>, masks: &Masks<f64>) {
    for i in 0..model.units.len() {
        let pass = model.forward(x, Some(masks)).unwrap();
        let xhat = &pass.units[i].bn.xhat;
        for c in 0..xhat.channels() {
            let mut v: Vec<f64> = (0..xhat.batch()).flat_map(|n| xhat.plane(n, c).to_vec()).collect();
            v.sort_by(f64::total_cmp);
            let (lo, hi) = (v.len() / 4, 3 * v.len() / 4);
            let k = (lo..hi).max_by(|&a, &b| (v[a + 1] - v[a]).total_cmp(&(v[b + 1] - v[b]))).unwrap();
            let threshold = 0.5 * (v[k] + v[k + 1]);
            let gamma = model.units[i].bn.gamma[c];
            model.units[i].bn.beta[c] = -gamma * threshold;
        }
    }
}

/// One block (stride-1 and stride-2 units), pooling, dense and loss. A probe
/// that flips any ReLU is reported as an infinite error.
pub fn full_network() -> Report {
    let mut cfg = ClassifierConfig::new(2, 3);
    cfg.filters = vec![4];
    let mut model = init_model::<f64>(&cfg, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    // Batchnorm makes the loss invariant to the scale of the conv weights;
    // unit-scale weights keep the O(h^2) truncation of a 1e-3 step small.
    for u in &mut model.units {
        u.conv.weight = random(u.conv.weight.len(), &mut rng);
        u.bn.gamma = (0..4).map(|_| rng.random_range(0.5..1.5)).collect();
    }
    let x = tensor([2, 2, 8, 8, 8], &mut rng);
    let labels = [1, 2];
    let masks = model.sample_masks(2, [8, 8, 8], &mut rng);
    center_thresholds_in_gaps(&mut model, &x, &masks);

    let pass = model.forward(&x, Some(&masks)).unwrap();
    let pattern = activation_pattern(&pass);
    let active = pattern.iter().filter(|&&a| a).count() as f64 / pattern.len() as f64;
    let mut report = vec![(
        "network active fraction in [0.2, 0.8)".to_string(),
        if (0.2..0.8).contains(&active) { 0.0 } else { f64::INFINITY },
    )];
    let grads = model.backward(&x, &pass, &labels).unwrap();
    let names = model.param_names();
    for k in 0..model.params().len() {
        let mut values = model.params()[k].clone();
        let mut probe = model.clone();
        let mut kink = false;
        let e = check(&mut values, &grads.params[k], |v| {
            *probe.params_mut()[k] = v.to_vec();
            let p = probe.forward(&x, Some(&masks)).unwrap();
            kink |= activation_pattern(&p) != pattern;
            softmax_cross_entropy(&p.logits, &labels).unwrap().loss
        });
        report.push((format!("network {}", names[k]), if kink { f64::INFINITY } else { e }));
    }
    report
}

/// Every case above.
pub fn all() -> Report {
    let mut r = conv(1, [4, 3, 5]);
    r.extend(conv(2, [5, 4, 6]));
    r.extend(batchnorm());
    r.extend(dropout());
    r.extend(pool());
    r.extend(dense());
    r.extend(cross_entropy());
    r.extend(full_network());
    r
}
