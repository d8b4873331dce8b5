//! Acceptance run: every criterion at its stated tolerance, one line each.
//! Exits nonzero when any criterion fails.

use std::error::Error;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use adagnn::boosting::{
    adaboost_r2_round, init_weights, r2_update_from_losses, renormalize, samme_r_update,
    train_adagnn, BoostConfig, BoostState, ExperimentData, R2Status,
};
use adagnn::eval::{average_precision, export_embeddings, MetricsReport};
use adagnn::gnn::{
    decode_pairwise, decode_pairwise_batch, encode_batch, link_loss, EncoderConfig, EncoderKind,
    Task, TrainHyper, WeakLearnerParams,
};
use adagnn::graphdata::{
    gen_synthetic_multimodal, Edge, Graph, NeighborhoodSample, SplitMode, SplitSpec, SynthConfig,
};
use adagnn::numcore::{grad_check, NumError, OpKind, Segments, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{
    ap_oracle, attention_params, attention_weights, listed_op_params, max_abs_diff, neighborhood,
    r2_oracle, random, random_features, samme_r_oracle, sigmoid, to_num, weighted_sum,
};

type Res<T> = Result<T, Box<dyn Error>>;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const TRAIN_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const LEARNERS: usize = 5;
const LEARNER_DIM: usize = 16;
const BASELINE_DIM: usize = 80;
const GRAD_SEEDS: u64 = 20;
const GRAD_TOL: f64 = 1e-4;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Res<Verdict> {
    Ok(Verdict { pass, detail })
}

fn reference_data(seed: u64, train_fraction: f64) -> Res<(Graph, ExperimentData)> {
    let mut cfg = SynthConfig::new(1000, 3, 1, seed);
    cfg.intra_mode_edge_prob = 0.01;
    cfg.noise_edge_prob = 0.05;
    let graph = gen_synthetic_multimodal(&cfg)?.graph;
    let split = SplitSpec::new(SplitMode::RandomTransductive, train_fraction, seed);
    let data = ExperimentData::prepare(&graph, &split, Task::Link, seed)?;
    Ok((graph, data))
}

fn train_arm(
    graph: &Graph,
    data: &ExperimentData,
    learners: usize,
    dim: usize,
    seed: u64,
) -> Res<(BoostState, MetricsReport)> {
    let enc = EncoderConfig::new(EncoderKind::Attention, data.features.cols(), dim);
    let boost = BoostConfig {
        max_learners: learners,
        ..BoostConfig::default()
    };
    Ok(train_adagnn(
        graph,
        data,
        &enc,
        &boost,
        &TrainHyper::default(),
        seed,
    )?)
}

fn test_ap(report: &MetricsReport, k: usize) -> Res<f64> {
    Ok(report
        .at_round(k)
        .and_then(|r| r.test_ap)
        .ok_or("report has no test AP")?)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// The paired reference runs of one seed.
struct SeedRuns {
    seed: u64,
    data: ExperimentData,
    ada: BoostState,
    ada_report: MetricsReport,
    baseline: MetricsReport,
    long: MetricsReport,
    paired_time: Duration,
}

fn reference_runs() -> Res<Vec<SeedRuns>> {
    SEEDS
        .iter()
        .map(|&seed| {
            let (graph, data) = reference_data(seed, 0.7)?;
            let start = Instant::now();
            let (ada, ada_report) = train_arm(&graph, &data, LEARNERS, LEARNER_DIM, seed)?;
            let (_, baseline) = train_arm(&graph, &data, 1, BASELINE_DIM, seed)?;
            let paired_time = start.elapsed();
            let (_, long) = train_arm(&graph, &data, 15, LEARNER_DIM, seed)?;
            Ok(SeedRuns {
                seed,
                data,
                ada,
                ada_report,
                baseline,
                long,
                paired_time,
            })
        })
        .collect()
}

fn multi_space_advantage(runs: &[SeedRuns]) -> Res<Verdict> {
    let ada = mean(
        runs.iter()
            .map(|r| test_ap(&r.ada_report, LEARNERS))
            .collect::<Res<Vec<_>>>()?,
    );
    let base = mean(
        runs.iter()
            .map(|r| test_ap(&r.baseline, 1))
            .collect::<Res<Vec<_>>>()?,
    );
    let time: Duration = runs.iter().map(|r| r.paired_time).sum();
    verdict(
        ada >= base + 0.01 && time < Duration::from_secs(600),
        format!(
            "mean test AP K=5x16 {ada:.4} vs K=1x80 {base:.4} (need +0.0100, got {:+.4}); {:.1}s",
            ada - base,
            time.as_secs_f64()
        ),
    )
}

fn margin_shift(runs: &[SeedRuns]) -> Res<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let frac = |k: usize| -> Res<f64> {
            Ok(r.ada_report
                .at_round(k)
                .and_then(|m| m.train_nonpositive_margin)
                .ok_or("report has no margin fraction")?)
        };
        let (first, last) = (frac(1)?, frac(LEARNERS)?);
        pass &= last <= first + 0.01;
        parts.push(format!("seed {} {first:.4}->{last:.4}", r.seed));
    }
    verdict(
        pass,
        format!("train margin<=0 fraction K=1->K=5: {}", parts.join(", ")),
    )
}

fn stable_gap(runs: &[SeedRuns]) -> Res<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let gaps: Vec<f64> = r
            .long
            .rounds
            .iter()
            .take(8)
            .map(|m| m.generalization_gap)
            .collect();
        let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        pass &= hi - lo < 0.05;
        parts.push(format!(
            "seed {} {:.4} over {} rounds",
            r.seed,
            hi - lo,
            gaps.len()
        ));
    }
    verdict(
        pass,
        format!("gap spread K=1..8 (need < 0.05): {}", parts.join(", ")),
    )
}

fn data_ratio_robustness(runs: &[SeedRuns]) -> Res<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for &fraction in &TRAIN_FRACTIONS {
        let mut ada = Vec::new();
        let mut base = Vec::new();
        for &seed in &SEEDS {
            let reused = runs.iter().find(|r| r.seed == seed && fraction == 0.7);
            match reused {
                Some(r) => {
                    ada.push(test_ap(&r.ada_report, LEARNERS)?);
                    base.push(test_ap(&r.baseline, 1)?);
                }
                None => {
                    let (graph, data) = reference_data(seed, fraction)?;
                    let (_, a) = train_arm(&graph, &data, LEARNERS, LEARNER_DIM, seed)?;
                    let (_, b) = train_arm(&graph, &data, 1, BASELINE_DIM, seed)?;
                    ada.push(test_ap(&a, LEARNERS)?);
                    base.push(test_ap(&b, 1)?);
                }
            }
        }
        let (a, b) = (mean(ada), mean(base));
        pass &= a >= b;
        parts.push(format!("{fraction}: {a:.4} vs {b:.4}"));
    }
    verdict(
        pass,
        format!(
            "mean test AP AdaGNN vs baseline by train fraction: {}",
            parts.join(", ")
        ),
    )
}

fn learner_budget(runs: &[SeedRuns]) -> Res<Verdict> {
    let gains = runs
        .iter()
        .map(|r| Ok(test_ap(&r.long, 15)? - test_ap(&r.long, 10)?))
        .collect::<Res<Vec<f64>>>()?;
    let rounds: Vec<usize> = runs.iter().map(|r| r.long.rounds.len()).collect();
    let gain = mean(gains);
    verdict(
        gain < 0.005,
        format!("mean test AP gain K=10->15 {gain:+.4} (need < 0.0050); rounds kept {rounds:?}"),
    )
}

fn weight_updates() -> Res<Verdict> {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut note = |name: &str, ok: bool, err: f64| {
        worst = worst.max(err);
        if !ok {
            failures.push(name.to_string());
        }
    };

    let w = init_weights(4)?;
    note(
        "init n=4",
        w == vec![0.25; 4] && w.iter().sum::<f64>() == 1.0,
        0.0,
    );
    note("init n=1", init_weights(1)? == vec![1.0], 0.0);
    note("init n=0", init_weights(0).is_err(), 0.0);

    let w = samme_r_update(&[0.5, 0.5], &[1, 0], &[0.5, 0.5], 1.0)?;
    let e = max_abs_diff(&w, &[0.5, 0.5]);
    note("s=0.5 multiplier", e <= 1e-9, e);
    let w = samme_r_update(&[0.5, 0.5], &[1, 1], &[sigmoid(1.0), 0.5], 1.0)?;
    let e = (w[0] / w[1] - (-0.5f64).exp()).abs();
    note("multiplier exp(-0.5)", e <= 1e-9, e);
    let w = samme_r_update(&[0.5, 0.5], &[1, 1], &[sigmoid(1.0), sigmoid(-1.0)], 1.0)?;
    let e = max_abs_diff(&w, &[sigmoid(-1.0), sigmoid(1.0)]);
    note("two positives", e <= 1e-9, e);

    let r = adaboost_r2_round(&[0.5, 0.5], &[1, 0], &[1.0, 0.0], 0)?;
    note(
        "R2 perfect",
        r.status == R2Status::PerfectLearner && r.beta == 0.0,
        0.0,
    );
    let (w, _, _, status) = r2_update_from_losses(&[0.2, 0.3, 0.5], &[0.3, 0.3, 0.3])?;
    let e = max_abs_diff(&w, &[0.2, 0.3, 0.5]);
    note(
        "R2 equal losses",
        status == R2Status::Accepted && e <= 1e-9,
        e,
    );
    let (w, avg, beta, status) = r2_update_from_losses(&[0.5, 0.5], &[0.0, 0.4])?;
    let (m0, m1) = (0.25, 0.25f64.powf(0.6));
    let e = max_abs_diff(&w, &[m0 / (m0 + m1), m1 / (m0 + m1)])
        .max((avg - 0.2).abs())
        .max((beta - 0.25).abs());
    note(
        "R2 two examples",
        status == R2Status::Accepted && e <= 1e-9,
        e,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let n = rng.gen_range(1..=24);
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        renormalize(&mut w)?;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let lr = [1.0, 2.0, 3.0, rng.gen_range(0.1..3.0)][case % 4];
        let got = samme_r_update(&w, &labels, &scores, lr)?;
        let e = max_abs_diff(&got, &samme_r_oracle(&w, &labels, &scores, lr));
        note(&format!("SAMME.R case {case}"), e <= 1e-9, e);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut accepted = 0;
    for case in 0..1000u64 {
        let n = rng.gen_range(2..=24);
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        renormalize(&mut w)?;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let skew = rng.gen_range(1..=4);
        let scores: Vec<f64> = labels
            .iter()
            .map(|&y| {
                let miss = rng.gen::<f64>().powi(skew);
                if y == 1 {
                    1.0 - miss
                } else {
                    miss
                }
            })
            .collect();
        let got = adaboost_r2_round(&w, &labels, &scores, case)?;
        match r2_oracle(&w, &labels, &scores) {
            Some((weights, beta, coefficient)) => {
                accepted += 1;
                let e = max_abs_diff(&got.weights, &weights)
                    .max((got.beta - beta).abs() / beta.max(1.0))
                    .max((got.coefficient - coefficient).abs() / coefficient.abs().max(1.0));
                note(
                    &format!("R2 case {case}"),
                    got.status == R2Status::Accepted && e <= 1e-9,
                    e,
                );
            }
            None => note(
                &format!("R2 case {case}"),
                got.status != R2Status::Accepted,
                0.0,
            ),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "hand examples and 2x1000 oracle cases ({accepted} R2 accepted), max error {worst:.2e}, failures {failures:?}"
        ),
    )
}

type OpFn = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var, NumError>>;
type ParamFn = Box<dyn Fn(&mut ChaCha8Rng) -> Vec<Tensor>>;

fn op_cases() -> Vec<(String, ParamFn, OpFn)> {
    let mut cases: Vec<(String, ParamFn, OpFn)> = OpKind::ALL
        .iter()
        .map(|&kind| {
            (
                kind.name().to_string(),
                Box::new(move |rng: &mut ChaCha8Rng| listed_op_params(kind, rng)) as ParamFn,
                Box::new(move |t: &mut Tape, v: &[Var]| t.apply(kind, v)) as OpFn,
            )
        })
        .collect();
    let shaped = |rows: usize, cols: usize, lo: f64, hi: f64| -> ParamFn {
        Box::new(move |rng| vec![random(rng, rows, cols, lo, hi)])
    };
    let seg = Arc::new(Segments::from_lengths([2, 0, 3, 1]));
    let (s1, s2, s3) = (seg.clone(), seg.clone(), seg);
    cases.push((
        "add_row".into(),
        Box::new(|rng| vec![random(rng, 4, 3, -1.0, 1.0), random(rng, 1, 3, -1.0, 1.0)]),
        Box::new(|t, v| t.add(v[0], v[1])),
    ));
    cases.push((
        "mul_col".into(),
        Box::new(|rng| vec![random(rng, 4, 3, -1.0, 1.0), random(rng, 4, 1, -1.0, 1.0)]),
        Box::new(|t, v| t.mul(v[0], v[1])),
    ));
    cases.push((
        "sum_cols".into(),
        shaped(4, 3, -1.0, 1.0),
        Box::new(|t, v| t.sum_cols(v[0])),
    ));
    cases.push((
        "affine".into(),
        shaped(3, 3, -1.0, 1.0),
        Box::new(|t, v| t.affine(v[0], -1.5, 0.25)),
    ));
    cases.push((
        "log_clamped".into(),
        shaped(3, 2, 0.05, 0.95),
        Box::new(|t, v| t.log_clamped(v[0])),
    ));
    cases.push((
        "gather_rows".into(),
        shaped(5, 3, -1.0, 1.0),
        Box::new(|t, v| t.gather_rows(v[0], vec![4, 0, 0, 2, 4, 1].into())),
    ));
    cases.push((
        "segment_sum".into(),
        shaped(6, 3, -1.0, 1.0),
        Box::new(move |t, v| t.segment_sum(v[0], s1.clone())),
    ));
    cases.push((
        "segment_mean".into(),
        shaped(6, 3, -1.0, 1.0),
        Box::new(move |t, v| t.segment_mean(v[0], s2.clone())),
    ));
    cases.push((
        "segment_softmax".into(),
        shaped(6, 1, -2.0, 2.0),
        Box::new(move |t, v| t.segment_softmax(v[0], s3.clone())),
    ));
    cases
}

fn composition_report(kind: EncoderKind, seed: u64) -> Res<f64> {
    let edges = [(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 6)];
    let g = Graph::new(7, edges.iter().map(|&(a, b)| Edge::new(a, b)).collect())?;
    let adj = g.adjacency();
    let x = random_features(7, 4, 100 + seed);
    let params = match kind {
        EncoderKind::Attention => attention_params(4, 6, 2, seed),
        EncoderKind::MeanPool => WeakLearnerParams::init(
            &EncoderConfig::new(kind, 4, 6),
            None,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )?,
    };
    let samples: Vec<NeighborhoodSample> = (0..7)
        .map(|v| neighborhood(v, adj.neighbors(v).to_vec()))
        .collect();
    let src: Arc<[usize]> = vec![0, 1, 2, 5].into();
    let dst: Arc<[usize]> = vec![1, 3, 6, 0].into();
    let report = grad_check(
        |tape: &mut Tape, vars: &[Var]| {
            let enc = encode_batch(tape, &params, vars, &x, &samples, true).map_err(to_num)?;
            let s = decode_pairwise_batch(tape, enc.embeddings, src.clone(), dst.clone())
                .map_err(to_num)?;
            link_loss(tape, s, &[1, 1, 0, 0], &[0.4, 0.1, 0.3, 0.2]).map_err(to_num)
        },
        &params.tensors,
        GRAD_TOL,
    )?;
    Ok(if report.passed() {
        report.max_rel_error()
    } else {
        f64::INFINITY
    })
}

fn gradients() -> Res<Verdict> {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let cases = op_cases();
    for (name, params, op) in &cases {
        for seed in 0..GRAD_SEEDS {
            let p = params(&mut ChaCha8Rng::seed_from_u64(seed));
            let report = grad_check(
                |t: &mut Tape, v: &[Var]| {
                    let out = op(t, v)?;
                    weighted_sum(t, out, seed)
                },
                &p,
                GRAD_TOL,
            )?;
            worst = worst.max(report.max_rel_error());
            if !report.passed() {
                failures.push(format!("{name}/{seed}"));
            }
        }
    }
    for kind in [EncoderKind::Attention, EncoderKind::MeanPool] {
        for seed in 0..GRAD_SEEDS {
            let err = composition_report(kind, seed)?;
            worst = worst.max(err);
            if !err.is_finite() {
                failures.push(format!("composition {kind:?}/{seed}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} ops and the encoder-decoder-loss composition x {GRAD_SEEDS} seeds, max rel error {worst:.2e}, failures {failures:?}",
            cases.len()
        ),
    )
}

fn metric_oracle() -> Res<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cases = 0usize;
    let mut mismatches = 0usize;
    for n in 1..=8usize {
        for pattern in 1u32..(1 << n) {
            let labels: Vec<u8> = (0..n).map(|i| ((pattern >> i) & 1) as u8).collect();
            for v in 0..100 {
                let scores: Vec<f64> = (0..n)
                    .map(|_| {
                        if v % 2 == 0 {
                            rng.gen()
                        } else {
                            f64::from(rng.gen_range(0..4u8)) / 4.0
                        }
                    })
                    .collect();
                let got = average_precision(&scores, &labels)?;
                let (want, num, den) = ap_oracle(&scores, &labels);
                if got.to_bits() != want.to_bits() || (got - num as f64 / den as f64).abs() >= 1e-15
                {
                    mismatches += 1;
                }
                cases += 1;
            }
        }
    }
    verdict(
        mismatches == 0,
        format!("{cases} instances with up to 8 items, {mismatches} mismatches"),
    )
}

fn invariants(runs: &[SeedRuns]) -> Res<Verdict> {
    let mut violations = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..1000 {
        let n = rng.gen_range(2..30);
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        renormalize(&mut w)?;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let out = samme_r_update(&w, &labels, &scores, rng.gen_range(0.1..3.0))?;
        if (out.iter().sum::<f64>() - 1.0).abs() > 1e-9 || out.iter().any(|&v| v <= 0.0) {
            violations.push(format!("update case {case}"));
        }
    }

    let seed = SEEDS[0];
    let (graph, data) = reference_data(seed, 0.7)?;
    let first = runs
        .iter()
        .find(|r| r.seed == seed)
        .ok_or("missing seed run")?;
    let mut states = Vec::new();
    for k in 1..LEARNERS {
        states.push(train_arm(&graph, &data, k, LEARNER_DIM, seed)?.0);
    }
    states.push(first.ada.clone());
    for (k, s) in states.iter().enumerate() {
        let total: f64 = s.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || s.weights.iter().any(|&w| w <= 0.0) {
            violations.push(format!("weights after round {}", k + 1));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..300u64 {
        let degree = rng.gen_range(1..12);
        let heads = rng.gen_range(1..4);
        let x = random_features(degree + 1, 5, case);
        let params = attention_params(5, 6, heads, case);
        let (att, _) = attention_weights(&params, &x, &[neighborhood(0, (1..=degree).collect())]);
        for row in &att {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() >= 1e-12 || row.iter().any(|&a| a < 0.0) {
                violations.push(format!("attention case {case}"));
            }
        }
    }

    for case in 0..300u64 {
        let degree = rng.gen_range(1..10);
        let kind = if case % 2 == 0 {
            EncoderKind::Attention
        } else {
            EncoderKind::MeanPool
        };
        let x = random_features(degree + 1, 4, case);
        let params = WeakLearnerParams::init(
            &EncoderConfig::new(kind, 4, 6),
            None,
            &mut ChaCha8Rng::seed_from_u64(case),
        )?;
        let ids: Vec<usize> = (1..=degree).collect();
        let mut shuffled = ids.clone();
        shuffled.reverse();
        shuffled.rotate_left(case as usize % degree);
        let (_, a) = attention_weights(&params, &x, &[neighborhood(0, ids)]);
        let (_, b) = attention_weights(&params, &x, &[neighborhood(0, shuffled)]);
        if a.iter()
            .zip(&b)
            .any(|(u, v)| (u - v).abs() > 1e-12 * u.abs().max(1.0))
        {
            violations.push(format!("permutation case {case}"));
        }
    }

    for case in 0..1000 {
        let a: Vec<f64> = (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect();
        if decode_pairwise(&a, &b).to_bits() != decode_pairwise(&b, &a).to_bits() {
            violations.push(format!("symmetry case {case}"));
        }
    }

    let (again, report) = train_arm(&graph, &data, LEARNERS, LEARNER_DIM, seed)?;
    if again != first.ada || report.to_json()? != first.ada_report.to_json()? {
        violations.push("rerun differs".into());
    }

    verdict(
        violations.is_empty(),
        format!(
            "simplex (1000 updates, rounds 1..5), 300 attention rows, 300 permutations, 1000 symmetry pairs, rerun; violations {violations:?}"
        ),
    )
}

fn differentiation(runs: &[SeedRuns]) -> Res<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let adj = &r.data.test_adjacency;
        let nodes: Vec<usize> = (0..r.data.features.rows()).collect();
        let center = nodes
            .iter()
            .copied()
            .max_by_key(|&v| (adj.degree(v), std::cmp::Reverse(v)))
            .ok_or("empty graph")?;
        let export = export_embeddings(
            &r.ada,
            &r.data.features,
            adj,
            &nodes,
            Some(center),
            r.data.eval_seed,
        )?;
        let ranks = export.neighbor_ranks.ok_or("no neighbour ranks")?;
        let lowest = ranks
            .pairwise_spearman()?
            .iter()
            .map(|&(_, _, rho)| rho)
            .fold(f64::INFINITY, f64::min);
        pass &= lowest < 0.9;
        parts.push(format!(
            "seed {} center {center} ({} nbrs) min rho {lowest:.3}",
            r.seed,
            ranks.neighbors.len()
        ));
    }
    verdict(
        pass,
        format!(
            "lowest pairwise Spearman per seed (need < 0.9): {}",
            parts.join(", ")
        ),
    )
}

fn report(number: usize, name: &str, outcome: impl FnOnce() -> Res<Verdict>) -> bool {
    let start = Instant::now();
    let (pass, detail) = match catch_unwind(AssertUnwindSafe(outcome)) {
        Ok(Ok(v)) => (v.pass, v.detail),
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(_) => (false, "panicked".to_string()),
    };
    println!(
        "criterion {number:>2} {:<4} {name}: {detail} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    pass
}

fn main() -> ExitCode {
    let runs = reference_runs();
    let shared = |f: fn(&[SeedRuns]) -> Res<Verdict>| {
        let runs = &runs;
        move || match runs {
            Ok(r) => f(r),
            Err(e) => Err(format!("reference runs failed: {e}").into()),
        }
    };
    let results = [
        report(1, "multi-space advantage", shared(multi_space_advantage)),
        report(2, "margin shift", shared(margin_shift)),
        report(3, "stable generalization gap", shared(stable_gap)),
        report(4, "data-ratio robustness", shared(data_ratio_robustness)),
        report(5, "learner-budget sufficiency", shared(learner_budget)),
        report(6, "weight-update correctness", weight_updates),
        report(7, "gradient correctness", gradients),
        report(8, "metric oracle equivalence", metric_oracle),
        report(9, "invariant suite", shared(invariants)),
        report(10, "multi-space differentiation", shared(differentiation)),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
