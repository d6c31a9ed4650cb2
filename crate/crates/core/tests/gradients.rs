mod common;

use rand::Rng;

use common::{rel_err, rng};
use scanfs::graph::{Graph, NodeId};
use scanfs::tensor::Tensor;
use scanfs::Error;

type Build = dyn Fn(&mut Graph, &[NodeId]) -> NodeId;

fn loss_of(build: &Build, inputs: &[Tensor], target: &Tensor) -> (Graph, NodeId, Vec<NodeId>) {
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = build(&mut g, &ids);
    let loss = g.mse(out, target.clone()).unwrap();
    (g, loss, ids)
}

/// Worst relative error between reverse-mode and central-difference
/// gradients of `mse(build(inputs), random target)` over every input entry.
fn worst_error(build: &Build, inputs: Vec<Tensor>, seed: u64) -> f64 {
    let mut r = rng(seed);
    let out_len = {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = inputs.iter().map(|t| g.param(t.clone())).collect();
        let out = build(&mut g, &ids);
        g.value(out).len()
    };
    let target = Tensor::new(vec![out_len], (0..out_len).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
    let (g, loss, ids) = loss_of(build, &inputs, &target);
    let grads = g.grad(loss).unwrap();
    let mut worst = 0.0f64;
    for (t, input) in inputs.iter().enumerate() {
        let analytic = grads.get(ids[t]).map(|g| g.data().to_vec()).unwrap_or_else(|| vec![0.0; input.len()]);
        for (i, &a) in analytic.iter().enumerate() {
            let eval = |v: f64| {
                let mut perturbed = inputs.clone();
                perturbed[t].data_mut()[i] = v;
                let (g, loss, _) = loss_of(build, &perturbed, &target);
                g.value(loss).item().unwrap()
            };
            let x = input.data()[i];
            let numeric = (eval(x + 1e-5) - eval(x - 1e-5)) / 2e-5;
            worst = worst.max(rel_err(a, numeric));
        }
    }
    worst
}

fn randn(shape: &[usize], seed: u64) -> Tensor {
    let mut r = rng(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn assert_all_seeds(name: &str, make: impl Fn(u64) -> (Box<Build>, Vec<Tensor>)) {
    for seed in 0..20 {
        let (build, inputs) = make(seed);
        let err = worst_error(&*build, inputs, 10_000 + seed);
        assert!(err < 1e-4, "{name}, seed {seed}: relative error {err:.3e}");
    }
}

#[test]
fn dense_gradients() {
    assert_all_seeds("dense", |s| {
        let mut r = rng(s);
        let (b, i, o) = (r.gen_range(1..4), r.gen_range(1..6), r.gen_range(1..5));
        (
            Box::new(|g: &mut Graph, ids: &[NodeId]| g.dense(ids[0], ids[1], ids[2]).unwrap()),
            vec![randn(&[b, i], s), randn(&[i, o], s + 100), randn(&[o], s + 200)],
        )
    });
}

#[test]
fn conv_gradients() {
    assert_all_seeds("conv2d_same", |s| {
        let mut r = rng(s);
        let (c, o, h, w) = (r.gen_range(1..3), r.gen_range(1..3), r.gen_range(1..6), r.gen_range(1..6));
        (
            Box::new(|g: &mut Graph, ids: &[NodeId]| g.conv2d_same(ids[0], ids[1], ids[2]).unwrap()),
            vec![randn(&[c, h, w], s), randn(&[o, c, 3, 3], s + 100), randn(&[o], s + 200)],
        )
    });
}

#[test]
fn pool_and_upsample_gradients() {
    assert_all_seeds("avg_pool2x2", |s| {
        let mut r = rng(s);
        let (h, w) = (r.gen_range(1..8), r.gen_range(1..8));
        (Box::new(|g: &mut Graph, ids: &[NodeId]| g.avg_pool2x2(ids[0]).unwrap()), vec![randn(&[2, h, w], s)])
    });
    assert_all_seeds("upsample_nearest2x", |s| {
        let mut r = rng(s);
        let (h, w) = (r.gen_range(1..5), r.gen_range(1..5));
        let (th, tw) = (2 * h - r.gen_range(0..2), 2 * w - r.gen_range(0..2));
        (
            Box::new(move |g: &mut Graph, ids: &[NodeId]| g.upsample_nearest2x(ids[0], th, tw).unwrap()),
            vec![randn(&[2, h, w], s)],
        )
    });
}

#[test]
fn pointwise_and_structural_gradients() {
    assert_all_seeds("tanh", |s| (Box::new(|g: &mut Graph, ids: &[NodeId]| g.tanh(ids[0])), vec![randn(&[7], s)]));
    assert_all_seeds("relu", |s| (Box::new(|g: &mut Graph, ids: &[NodeId]| g.relu(ids[0])), vec![randn(&[7], s)]));
    assert_all_seeds("concat", |s| {
        (
            Box::new(|g: &mut Graph, ids: &[NodeId]| g.concat(ids).unwrap()),
            vec![randn(&[3], s), randn(&[2, 2], s + 1)],
        )
    });
    assert_all_seeds("gather", |s| {
        let mut r = rng(s);
        let cols: Vec<usize> = (0..4).map(|_| r.gen_range(0..2)).collect();
        (
            Box::new(move |g: &mut Graph, ids: &[NodeId]| g.gather(ids[0], &cols).unwrap()),
            vec![randn(&[4, 2], s)],
        )
    });
    assert_all_seeds("mse", |s| {
        let target = randn(&[5], s + 50);
        (
            Box::new(move |g: &mut Graph, ids: &[NodeId]| {
                let inner = g.mse(ids[0], target.clone()).unwrap();
                g.tanh(inner)
            }),
            vec![randn(&[5], s)],
        )
    });
}

#[test]
fn pyramid_gradients() {
    assert_all_seeds("spp", |s| {
        let mut r = rng(s);
        let (h, w) = (r.gen_range(1..7), r.gen_range(1..7));
        (
            Box::new(|g: &mut Graph, ids: &[NodeId]| g.spp(ids[0], &[1, 2, 3, 4]).unwrap()),
            vec![randn(&[2, h, w], s)],
        )
    });
    assert_all_seeds("spp_inverse", |s| {
        let mut r = rng(s);
        let (h, w) = (r.gen_range(1..7), r.gen_range(1..7));
        (
            Box::new(move |g: &mut Graph, ids: &[NodeId]| g.spp_inverse(ids[0], &[1, 2, 3], 2, h, w).unwrap()),
            vec![randn(&[2 * 14], s)],
        )
    });
}

#[test]
fn analytic_examples() {
    // d/dx mse(x, 0) = 2x for a single element.
    let mut g = Graph::new();
    let x = g.param(Tensor::scalar(3.0));
    let loss = g.mse(x, Tensor::scalar(0.0)).unwrap();
    assert_eq!(g.grad(loss).unwrap().get(x).unwrap().data(), &[6.0]);

    let mut g = Graph::new();
    let x = g.param(Tensor::scalar(0.0));
    let t = g.tanh(x);
    let loss = g.mse(t, Tensor::scalar(0.0)).unwrap();
    assert_eq!(g.grad(loss).unwrap().get(x).unwrap().data(), &[0.0]);
}

#[test]
fn non_scalar_loss_is_rejected() {
    let mut g = Graph::new();
    let x = g.param(Tensor::zeros(&[2]));
    assert!(matches!(g.grad(x), Err(Error::Contract(_))));
}

#[test]
fn forward_is_bit_deterministic() {
    let run = || {
        let mut g = Graph::new();
        let x = g.input(randn(&[2, 5, 4], 1));
        let k = g.param(randn(&[3, 2, 3, 3], 2));
        let b = g.param(randn(&[3], 3));
        let y = g.conv2d_same(x, k, b).unwrap();
        let y = g.tanh(y);
        let y = g.spp(y, &[1, 2, 3, 4]).unwrap();
        g.value(y).clone()
    };
    assert_eq!(run(), run());
}
