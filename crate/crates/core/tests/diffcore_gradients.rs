use attrfilter::diffcore::gradcheck::check_gradients;
use attrfilter::diffcore::{Graph, Tensor, Var};
use attrfilter::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const POINTS: usize = 100;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()).unwrap()
}

/// Weighted sum so that every output element gets a distinct upstream gradient.
fn weighted_sum(g: &mut Graph<f64>, y: Var, seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rand_tensor(&mut rng, g.shape(y));
    let wv = g.constant(w);
    let p = g.mul(y, wv)?;
    Ok(g.sum(p))
}

fn run<F>(name: &str, shapes: &[&[usize]], f: F)
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(name.len() as u64 * 7919);
    let mut worst = 0.0f64;
    for _ in 0..POINTS {
        let inputs: Vec<Tensor<f64>> = shapes.iter().map(|s| rand_tensor(&mut rng, s)).collect();
        let r = check_gradients(&f, &inputs, H).unwrap();
        worst = worst.max(r.max_rel_err);
        assert!(r.max_rel_err <= TOL, "{name}: {r:?}");
    }
    assert!(worst.is_finite());
}

#[test]
fn linear_layer() {
    run("linear", &[&[3, 4], &[4, 2], &[2]], |g, v| {
        let y = g.linear(v[0], v[1], v[2])?;
        weighted_sum(g, y, 1)
    });
}

#[test]
fn linear_sum_gradient_is_column_sum_of_input() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::from_rows(&[[1.0, 2.0], [3.0, -1.0]]).unwrap());
    let w = g.variable(Tensor::zeros(&[2, 3]));
    let b = g.variable(Tensor::zeros(&[3]));
    let y = g.linear(x, w, b).unwrap();
    let s = g.sum(y);
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(w).unwrap().data(), &[4.0, 4.0, 4.0, 1.0, 1.0, 1.0]);
    assert_eq!(grads.get(b).unwrap().data(), &[2.0, 2.0, 2.0]);
}

#[test]
fn elementwise_arithmetic() {
    run("arith", &[&[2, 3], &[2, 3]], |g, v| {
        let a = g.add(v[0], v[1])?;
        let m = g.mul(a, v[1])?;
        let s = g.sub(m, v[0])?;
        let c = g.scale(s, 0.7);
        weighted_sum(g, c, 2)
    });
}

#[test]
fn leaky_relu() {
    run("leaky", &[&[4, 3]], |g, v| {
        let y = g.leaky_relu(v[0], 0.01);
        weighted_sum(g, y, 3)
    });
}

#[test]
fn batch_norm_training_and_eval() {
    run("bn-train", &[&[5, 3], &[3], &[3]], |g, v| {
        let (y, _) = g.batch_norm(v[0], v[1], v[2], None, 1e-5)?;
        weighted_sum(g, y, 4)
    });
    let mean = [0.1, -0.2, 0.3];
    let var = [1.2, 0.5, 2.0];
    run("bn-eval", &[&[5, 3], &[3], &[3]], |g, v| {
        let (y, _) = g.batch_norm(v[0], v[1], v[2], Some((&mean, &var)), 1e-5)?;
        weighted_sum(g, y, 5)
    });
}

#[test]
fn dropout_mask_is_constant() {
    run("dropout", &[&[4, 6]], |g, v| {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = g.dropout(v[0], 0.3, true, &mut rng)?;
        weighted_sum(g, y, 6)
    });
}

#[test]
fn softmax_family() {
    run("softmax", &[&[3, 5]], |g, v| {
        let y = g.softmax(v[0]);
        weighted_sum(g, y, 7)
    });
    run("log_softmax", &[&[3, 5]], |g, v| {
        let y = g.log_softmax(v[0]);
        weighted_sum(g, y, 8)
    });
    run("cross_entropy", &[&[4, 3]], |g, v| g.cross_entropy(v[0], &[0, 2, 1, 2]));
}

#[test]
fn mse_concat_reshape() {
    run("mse", &[&[3, 4], &[3, 4]], |g, v| g.mse(v[0], v[1]));
    run("concat", &[&[3, 2], &[3, 4]], |g, v| {
        let c = g.concat(v[0], v[1])?;
        let r = g.reshape(c, &[2, 9])?;
        let r = g.transpose(r)?;
        weighted_sum(g, r, 9)
    });
}

#[test]
fn normalisation_and_distances() {
    run("l2_normalize", &[&[3, 4]], |g, v| {
        let y = g.l2_normalize(v[0]);
        weighted_sum(g, y, 10)
    });
    run("cosine", &[&[3, 4], &[3, 4]], |g, v| {
        let y = g.cosine_similarity(v[0], v[1])?;
        weighted_sum(g, y, 11)
    });
    run("pdist", &[&[5, 3]], |g, v| {
        let y = g.pairwise_distance(v[0])?;
        weighted_sum(g, y, 12)
    });
}

#[test]
fn reductions() {
    run("sum_rows", &[&[3, 4]], |g, v| {
        let y = g.sum_rows(v[0]);
        weighted_sum(g, y, 13)
    });
    run("mean_over_batch", &[&[3, 2, 4]], |g, v| {
        let y = g.mean_over_batch(v[0])?;
        weighted_sum(g, y, 14)
    });
    run("mean", &[&[3, 4]], |g, v| Ok(g.mean(v[0])));
}

#[test]
fn logs_and_digamma() {
    run("log-digamma-xlogx", &[&[2, 3]], |g, v| {
        // shift into the positive domain
        let sq = g.mul(v[0], v[0])?;
        let one = g.constant(Tensor::full(&[2, 3], 0.5));
        let pos = g.add(sq, one)?;
        let a = g.ln(pos);
        let b = g.digamma(pos)?;
        let c = g.xlogx(pos);
        let ab = g.add(a, b)?;
        let abc = g.add(ab, c)?;
        weighted_sum(g, abc, 15)
    });
}

#[test]
fn gather_and_column_minus() {
    run("gather", &[&[4, 3]], |g, v| {
        let y = g.gather(v[0], &[2, 0, 1, 1])?;
        weighted_sum(g, y, 16)
    });
    run("column_minus", &[&[3], &[3, 5]], |g, v| {
        let y = g.column_minus(v[0], v[1])?;
        weighted_sum(g, y, 17)
    });
}

#[test]
fn codebook_lookup() {
    run("codebook", &[&[2, 3, 4], &[3, 4, 2]], |g, v| {
        let y = g.codebook_lookup(v[0], v[1])?;
        weighted_sum(g, y, 18)
    });
}

#[test]
fn aam_logits() {
    // the speaker head is frozen, so only the features are differentiated
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let head = rand_tensor(&mut rng, &[5, 3]);
    run("aam", &[&[4, 3]], |g, v| {
        let hv = g.constant(head.clone());
        let hn = g.l2_normalize(hv);
        let ht = g.value(hn).transpose()?;
        let ht = g.constant(ht);
        let f = g.l2_normalize(v[0]);
        let cos = g.matmul(f, ht)?;
        let logits = g.aam_logits(cos, &[0, 1, 4, 1], 0.2, 30.0)?;
        g.cross_entropy(logits, &[0, 1, 4, 1])
    });
}

#[test]
fn gumbel_soft_path() {
    run("gumbel", &[&[3, 4]], |g, v| {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = g.gumbel_softmax_st(v[0], 0.8, false, &mut rng)?;
        weighted_sum(g, s.selections, 19)
    });
}

#[test]
fn grad_reverse_negates() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::vector(vec![1.0, 2.0]));
    let y = g.grad_reverse(x, 1.0);
    assert_eq!(g.value(y).data(), &[1.0, 2.0]);
    let s = g.sum(y);
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[-1.0, -1.0]);

    let mut g = Graph::new();
    let x = g.variable(Tensor::vector(vec![1.0, 2.0]));
    let y = g.grad_reverse(x, 0.0);
    let s = g.sum(y);
    let grads = g.backward(s).unwrap();
    assert!(grads.get(x).unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn heaviside_forward_and_identity_backward() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::vector(vec![-1.0, 0.0, 2.0]));
    let y = g.heaviside_st(x);
    assert_eq!(g.value(y).data(), &[0.0, 1.0, 1.0]);
    let w = g.constant(Tensor::vector(vec![0.3, -2.0, 5.0]));
    let p = g.mul(y, w).unwrap();
    let s = g.sum(p);
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[0.3, -2.0, 5.0]);
}

#[test]
fn topk_selects_kth_smallest() {
    let mut g = Graph::new();
    let x = g.variable(Tensor::from_rows(&[[3.0, 1.0, 2.0]]).unwrap());
    let k1 = g.topk_st(x, 1).unwrap();
    assert_eq!(g.value(k1.values).data(), &[1.0]);
    let k2 = g.topk_st(x, 2).unwrap();
    assert_eq!(g.value(k2.values).data(), &[2.0]);
    assert_eq!(k2.gradient_mask.data(), &[0.0, 0.0, 1.0]);
    let s = g.sum(k2.values);
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[0.0, 0.0, 1.0]);
    assert!(g.topk_st(x, 4).is_err());
    assert!(g.topk_st(x, 0).is_err());
}
