use std::sync::Arc;

use adagnn::numcore::{
    adam_step, grad_check, AdamConfig, AdamState, NumError, OpKind, Segments, Tape, Tensor, Var,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{dims, listed_op_params, random, weighted_sum};

const SEEDS: u64 = 20;
const TOL: f64 = 1e-4;

fn check<F>(name: &str, params: impl Fn(&mut ChaCha8Rng) -> Vec<Tensor>, op: F)
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, NumError>,
{
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = params(&mut rng);
        let report = grad_check(
            |t: &mut Tape, v: &[Var]| {
                let out = op(t, v)?;
                weighted_sum(t, out, seed)
            },
            &p,
            TOL,
        )
        .unwrap();
        assert!(
            report.passed(),
            "{name} seed {seed}: {}",
            report.max_rel_error()
        );
    }
}

#[test]
fn listed_ops_pass_grad_check() {
    for kind in OpKind::ALL {
        check(
            kind.name(),
            |rng| listed_op_params(kind, rng),
            |t, v| t.apply(kind, v),
        );
    }
}

#[test]
fn broadcast_forms_pass_grad_check() {
    check(
        "add_row",
        |rng| {
            let (m, n) = dims(rng);
            vec![random(rng, m, n, -1.0, 1.0), random(rng, 1, n, -1.0, 1.0)]
        },
        |t, v| t.add(v[0], v[1]),
    );
    check(
        "mul_col",
        |rng| {
            let (m, n) = dims(rng);
            vec![random(rng, m, n, -1.0, 1.0), random(rng, m, 1, -1.0, 1.0)]
        },
        |t, v| t.mul(v[0], v[1]),
    );
}

#[test]
fn extended_ops_pass_grad_check() {
    check(
        "sum_cols",
        |rng| vec![random(rng, 4, 3, -1.0, 1.0)],
        |t, v| t.sum_cols(v[0]),
    );
    check(
        "affine",
        |rng| vec![random(rng, 3, 3, -1.0, 1.0)],
        |t, v| t.affine(v[0], -1.5, 0.25),
    );
    check(
        "log_clamped",
        |rng| vec![random(rng, 3, 2, 0.05, 0.95)],
        |t, v| t.log_clamped(v[0]),
    );
    check(
        "gather_rows",
        |rng| vec![random(rng, 5, 3, -1.0, 1.0)],
        |t, v| t.gather_rows(v[0], vec![4, 0, 0, 2, 4, 1].into()),
    );
    let seg = Arc::new(Segments::from_lengths([2, 0, 3, 1]));
    check(
        "segment_sum",
        |rng| vec![random(rng, 6, 3, -1.0, 1.0)],
        |t, v| t.segment_sum(v[0], seg.clone()),
    );
    check(
        "segment_mean",
        |rng| vec![random(rng, 6, 3, -1.0, 1.0)],
        |t, v| t.segment_mean(v[0], seg.clone()),
    );
    check(
        "segment_softmax",
        |rng| vec![random(rng, 6, 1, -2.0, 2.0)],
        |t, v| t.segment_softmax(v[0], seg.clone()),
    );
}

#[test]
fn matmul_chain_matches_finite_differences() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let p: Vec<Tensor> = (0..3).map(|_| random(&mut rng, 3, 3, -1.0, 1.0)).collect();
        let report = grad_check(
            |t, v| {
                let ab = t.matmul(v[0], v[1])?;
                let abc = t.matmul(ab, v[2])?;
                t.reduce_sum(abc)
            },
            &p,
            TOL,
        )
        .unwrap();
        assert!(report.passed(), "seed {seed}: {}", report.max_rel_error());
    }
}

#[test]
fn adjoint_is_linear() {
    let x = Tensor::row_vector(vec![0.3, -0.8, 1.1]);
    let grad = |which: u8| {
        let mut t = Tape::new();
        let v = t.param(&x);
        let f = t.sigmoid(v).unwrap();
        let f = t.reduce_sum(f).unwrap();
        let g = t.exp(v).unwrap();
        let g = t.reduce_sum(g).unwrap();
        let out = match which {
            0 => f,
            1 => g,
            _ => t.add(f, g).unwrap(),
        };
        t.backward(out).unwrap().get(v).unwrap().to_vec()
    };
    let (f, g, fg) = (grad(0), grad(1), grad(2));
    for i in 0..3 {
        assert!((fg[i] - f[i] - g[i]).abs() < 1e-15);
    }
}

#[test]
fn forward_and_backward_are_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(&mut rng, 4, 3, -1.0, 1.0);
        let b = random(&mut rng, 3, 2, -1.0, 1.0);
        let mut t = Tape::new();
        let (va, vb) = (t.param(&a), t.param(&b));
        let m = t.matmul(va, vb).unwrap();
        let s = t.softmax_rows(m).unwrap();
        let l = t.log(s).unwrap();
        let out = t.reduce_sum(l).unwrap();
        let value = t.scalar(out).unwrap();
        let g = t.backward(out).unwrap();
        (
            value.to_bits(),
            g.get(va)
                .unwrap()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn adam_first_step_and_zero_gradient() {
    let mut params = vec![Tensor::scalar(1.0)];
    let mut state = AdamState::new(&params, AdamConfig::with_learning_rate(1e-3));
    params[0].set_grad(vec![0.7]).unwrap();
    adam_step(&mut params, &mut state).unwrap();
    assert!((params[0].values()[0] - (1.0 - 1e-3)).abs() < 1e-9);
    params[0].set_grad(vec![0.0]).unwrap();
    let mut frozen = vec![Tensor::scalar(2.0)];
    let mut s2 = AdamState::new(&frozen, AdamConfig::default());
    frozen[0].set_grad(vec![0.0]).unwrap();
    adam_step(&mut frozen, &mut s2).unwrap();
    assert_eq!(frozen[0].values()[0], 2.0);
    assert_eq!(s2.step_count, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn softmax_rows_are_distributions(seed in any::<u64>(), m in 1usize..6, n in 1usize..8, scale in 0.1f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(&mut rng, m, n, -scale, scale);
        let mut t = Tape::new();
        let v = t.constant(&x);
        let s = t.softmax_rows(v).unwrap();
        let values = t.value(s);
        for r in 0..m {
            let row = &values[r * n..(r + 1) * n];
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
