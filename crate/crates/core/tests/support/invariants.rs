//! Invariant properties of every module, each checked by a proptest runner.
//!
//! Each property is a plain function taking a case count, so the same checks
//! back both the `invariants` test target and the acceptance report.

use std::sync::Arc;

use mmwave_cs::channel::{
    evolve_channel, init_channel, response_distance, steering_matrix, wrapped_distance, ChannelParams,
};
use mmwave_cs::estimators::{track, EstimatorKind, TrackerParams, TrackingContext};
use mmwave_cs::eval::{
    achievable_rate, make_beamformers, run_mse_experiment, simulate_stream, to_db, BeamDirections, BeamformingLink,
    ModelConfig, MseExperimentConfig, NoiseScenario,
};
use mmwave_cs::numerics::{
    dotc, hard_threshold, khatri_rao, kron, kron_vec, least_squares, norm, principal_svd, vectorize, ComplexMatrix,
    ComplexVector, SparseVector, C64,
};
use mmwave_cs::rng::{complex_normal, seeded};
use mmwave_cs::sensing::{
    full_dictionary, make_training, measure_noiseless, measurement_noise, reduced_dictionary, uniform_grid,
    ReducedGrids, SensingSetup, TrainingScheme,
};
use mmwave_cs::solvers::{cosamp, iht, SolverConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::Rng;

pub const CASES: u32 = 1000;

pub struct Property {
    pub module: &'static str,
    pub name: &'static str,
    pub check: fn(u32) -> Result<(), String>,
}

fn run<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, 1.0))
}

fn random_vector(len: usize, rng: &mut impl Rng) -> ComplexVector {
    (0..len).map(|_| complex_normal(rng, 1.0)).collect()
}

fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let diff: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b).max(f64::MIN_POSITIVE)
}

fn setup(n_t: usize, n_r: usize, m: usize, sigma2: f64, seed: u64) -> SensingSetup {
    make_training(n_t, n_r, m, m, TrainingScheme::RandomPhase, 1.0, sigma2, &mut seeded(seed)).unwrap()
}

// numerics

fn kron_vec_identity(cases: u32) -> Result<(), String> {
    let dims = (1usize..5, 1usize..5, 1usize..5, 1usize..5, any::<u64>());
    run(cases, dims, |(p, q, r, s, seed)| {
        let mut rng = seeded(seed);
        let a = random_matrix(p, q, &mut rng);
        let b = random_matrix(r, s, &mut rng);
        let x = random_matrix(s, q, &mut rng);
        let lhs = vectorize(&b.matmul(&x).unwrap().matmul(&a.transpose()).unwrap());
        let rhs = kron(&a, &b).matvec(&vectorize(&x)).unwrap();
        prop_assert!(rel_err(&lhs, &rhs) <= 1e-10);
        Ok(())
    })
}

fn khatri_rao_columns(cases: u32) -> Result<(), String> {
    run(cases, (1usize..6, 1usize..6, 1usize..6, any::<u64>()), |(p, r, n, seed)| {
        let mut rng = seeded(seed);
        let a = random_matrix(p, n, &mut rng);
        let b = random_matrix(r, n, &mut rng);
        let kr = khatri_rao(&a, &b).unwrap();
        for j in 0..n {
            prop_assert_eq!(kr.column(j), &kron_vec(a.column(j), b.column(j))[..]);
        }
        Ok(())
    })
}

fn least_squares_residual_orthogonal(cases: u32) -> Result<(), String> {
    run(cases, (1usize..8, 0usize..8, any::<u64>()), |(n, extra, seed)| {
        let mut rng = seeded(seed);
        let a = random_matrix(n + extra, n, &mut rng);
        let y = random_vector(n + extra, &mut rng);
        let x = least_squares(&a, &y).unwrap();
        let r = y.sub(&a.matvec(&x).unwrap());
        for j in 0..n {
            prop_assert!(dotc(a.column(j), &r).norm() <= 1e-9 * y.norm());
        }
        Ok(())
    })
}

fn hard_threshold_idempotent(cases: u32) -> Result<(), String> {
    let v = prop::collection::vec((-3i8..4, -3i8..4), 0..12);
    run(cases, (v, 0usize..14), |(entries, l)| {
        // Small integers make magnitude ties common.
        let v: Vec<C64> = entries.iter().map(|&(a, b)| C64::new(a as f64, b as f64)).collect();
        let once = hard_threshold(&v, l);
        prop_assert_eq!(&hard_threshold(&once, l), &once);
        prop_assert!(once.iter().filter(|z| z.norm() > 0.0).count() <= l);
        Ok(())
    })
}

fn principal_svd_consistent(cases: u32) -> Result<(), String> {
    run(cases, (1usize..7, 1usize..7, any::<u64>()), |(r, c, seed)| {
        let mut rng = seeded(seed);
        let h = random_matrix(r, c, &mut rng);
        let s = principal_svd(&h);
        let uhv = dotc(&s.u, &h.matvec(&s.v).unwrap());
        prop_assert!((uhv - C64::new(s.sigma, 0.0)).norm() <= 1e-9 * s.sigma);
        // Power iteration on h^H h as an independent check of the top value.
        let mut x = random_vector(c, &mut rng);
        for _ in 0..500 {
            let y = h.adjoint_matvec(&h.matvec(&x).unwrap()).unwrap();
            x = y.scale(C64::new(1.0 / y.norm(), 0.0));
        }
        let est = h.matvec(&x).unwrap().norm();
        prop_assert!(est <= s.sigma * (1.0 + 1e-9));
        prop_assert!(est >= s.sigma * (1.0 - 1e-3), "power {est} vs {}", s.sigma);
        Ok(())
    })
}

// channel

fn channel_strategy() -> impl Strategy<Value = (usize, usize, usize, f64, f64, u64)> {
    (1usize..9, 1usize..9, 1usize..4, 0.0f64..0.2, 0.0f64..=1.0, any::<u64>())
}

fn channel_reconstruction(cases: u32) -> Result<(), String> {
    run(cases, channel_strategy(), |(n_t, n_r, l, delta, rho, seed)| {
        let p = ChannelParams::new(n_t, n_r, l).with_delta(delta).with_rho(rho);
        let mut rng = seeded(seed);
        let mut state = init_channel(&p, &mut rng).unwrap();
        for _ in 0..3 {
            let ar = steering_matrix(n_r, &state.aoas);
            let at = steering_matrix(n_t, &state.aods);
            let diag = ComplexMatrix::from_fn(l, l, |i, j| if i == j { state.gains[i] } else { C64::new(0.0, 0.0) });
            let rebuilt = ar.matmul(&diag).unwrap().matmul(&at.adjoint()).unwrap();
            let err = state.h.sub(&rebuilt).unwrap().frobenius_norm();
            prop_assert!(err <= 1e-12 * state.h.frobenius_norm().max(f64::MIN_POSITIVE));
            state = evolve_channel(&state, &p, &mut rng).unwrap();
        }
        Ok(())
    })
}

fn angle_drift_bounded(cases: u32) -> Result<(), String> {
    run(cases, channel_strategy(), |(n_t, n_r, l, delta, rho, seed)| {
        let p = ChannelParams::new(n_t, n_r, l).with_delta(delta).with_rho(rho);
        let mut rng = seeded(seed);
        let mut prev = init_channel(&p, &mut rng).unwrap();
        for _ in 0..20 {
            let next = evolve_channel(&prev, &p, &mut rng).unwrap();
            for (a, b) in prev.aods.iter().chain(&prev.aoas).zip(next.aods.iter().chain(&next.aoas)) {
                prop_assert!(wrapped_distance(*a, *b) <= delta + 1e-12);
            }
            prev = next;
        }
        Ok(())
    })
}

fn evolution_deterministic(cases: u32) -> Result<(), String> {
    run(cases, channel_strategy(), |(n_t, n_r, l, delta, rho, seed)| {
        let p = ChannelParams::new(n_t, n_r, l).with_delta(delta).with_rho(rho);
        let walk = || {
            let mut rng = seeded(seed);
            let mut s = init_channel(&p, &mut rng).unwrap();
            for _ in 0..4 {
                s = evolve_channel(&s, &p, &mut rng).unwrap();
            }
            s
        };
        prop_assert_eq!(walk(), walk());
        Ok(())
    })
}

// sensing

fn factored_dictionary_matches_kron_form(cases: u32) -> Result<(), String> {
    run(cases, (1usize..6, 1usize..6, 1usize..4, 1usize..4, any::<u64>()), |(n_t, n_r, m, l, seed)| {
        let s = setup(n_t, n_r, m, 0.1, seed);
        let mut rng = seeded(seed ^ 1);
        let aods: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let aoas: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let at = steering_matrix(n_t, &aods);
        let ar = steering_matrix(n_r, &aoas);
        let kr = khatri_rao(&at.conj(), &ar).unwrap();
        let cached = kron(&s.f.transpose(), &s.w.adjoint()).matmul(&kr).unwrap();
        let left = s.f.transpose().matmul(&at.conj()).unwrap();
        let right = s.w.adjoint().matmul(&ar).unwrap();
        for j in 0..l {
            let col = kron_vec(left.column(j), right.column(j));
            prop_assert!(rel_err(&col, cached.column(j)) <= 1e-10);
        }
        Ok(())
    })
}

fn reduced_columns_are_full_columns(cases: u32) -> Result<(), String> {
    let strat = (2usize..7, 2usize..7, 1usize..4, 2usize..10, 2usize..10, any::<u64>());
    run(cases, strat, |(n_t, n_r, m, g_t, g_r, seed)| {
        let s = setup(n_t, n_r, m, 0.1, seed);
        let full = full_dictionary(&s, n_t, n_r, g_t, g_r).unwrap();
        let mut rng = seeded(seed ^ 2);
        let pick = |g: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
            (0..g).filter(|_| rng.random_bool(0.5)).collect()
        };
        let (ti, ri) = (pick(g_t, &mut rng), pick(g_r, &mut rng));
        prop_assume!(!ti.is_empty() && !ri.is_empty());
        let (tx_grid, rx_grid) = (uniform_grid(g_t), uniform_grid(g_r));
        let grids = ReducedGrids {
            tx: vec![ti.iter().map(|&i| tx_grid[i]).collect()],
            rx: vec![ri.iter().map(|&j| rx_grid[j]).collect()],
        };
        let red = reduced_dictionary(&s, n_t, n_r, &grids).unwrap();
        for (a, &i) in ti.iter().enumerate() {
            for (b, &j) in ri.iter().enumerate() {
                let rc = red.phi.column(red.column_index(a, b));
                let fc = full.phi.column(full.column_index(i, j));
                prop_assert!(rel_err(rc, fc) <= 1e-12);
            }
        }
        Ok(())
    })
}

fn measurement_linear_in_channel(cases: u32) -> Result<(), String> {
    run(cases, (1usize..6, 1usize..6, 1usize..5, any::<u64>()), |(n_t, n_r, m, seed)| {
        let s = setup(n_t, n_r, m, 0.3, seed);
        let mut rng = seeded(seed ^ 3);
        let h1 = random_matrix(n_r, n_t, &mut rng);
        let h2 = random_matrix(n_r, n_t, &mut rng);
        let (a, b) = (complex_normal(&mut rng, 1.0), complex_normal(&mut rng, 1.0));
        let noise = measurement_noise(&s, &mut rng);
        let y = |h: &ComplexMatrix| -> ComplexVector {
            let clean = measure_noiseless(h, &s).unwrap();
            clean.iter().zip(noise.iter()).map(|(c, n)| c + n).collect()
        };
        let combo = h1.scale(a).add(&h2.scale(b)).unwrap();
        let (y1, y2, y12) = (y(&h1), y(&h2), y(&combo));
        // y(aH1 + bH2) = a y(H1) + b y(H2) + (1 − a − b) n at a fixed noise draw.
        let rhs: Vec<C64> = (0..y1.len())
            .map(|i| a * y1[i] + b * y2[i] + (C64::new(1.0, 0.0) - a - b) * noise[i])
            .collect();
        prop_assert!(rel_err(&y12, &rhs) <= 1e-10);
        Ok(())
    })
}

fn noiseless_on_grid_in_span(cases: u32) -> Result<(), String> {
    let strat = (2usize..7, 2usize..7, 2usize..5, 1usize..4, 4usize..12, any::<u64>());
    run(cases, strat, |(n_t, n_r, m, l, g, seed)| {
        let s = setup(n_t, n_r, m, 0.0, seed);
        let full = full_dictionary(&s, n_t, n_r, g, g).unwrap();
        let mut rng = seeded(seed ^ 4);
        let grid = uniform_grid(g);
        let idx: Vec<(usize, usize)> = (0..l).map(|_| (rng.random_range(0..g), rng.random_range(0..g))).collect();
        let aods: Vec<f64> = idx.iter().map(|p| grid[p.0]).collect();
        let aoas: Vec<f64> = idx.iter().map(|p| grid[p.1]).collect();
        let gains: Vec<C64> = (0..l).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let p = ChannelParams::new(n_t, n_r, l);
        let h = mmwave_cs::channel::assemble_channel(&p, &aods, &aoas, &gains).unwrap();
        let y = measure_noiseless(&h, &s).unwrap();
        let mut fit = ComplexVector::zeros(y.len());
        for (k, &(i, j)) in idx.iter().enumerate() {
            let col = full.phi.column(full.column_index(i, j));
            for (f, c) in fit.iter_mut().zip(col) {
                *f += gains[k] * c;
            }
        }
        prop_assert!(rel_err(&fit, &y) <= 1e-10 || y.norm() < 1e-12);
        Ok(())
    })
}

// solvers

fn solver_strategy() -> impl Strategy<Value = (usize, usize, usize, f64, u64)> {
    (4usize..16, 8usize..40, 1usize..4, 0.0f64..0.3, any::<u64>())
}

fn sparse_problem(m: usize, n: usize, l: usize, noise: f64, seed: u64) -> (ComplexMatrix, ComplexVector) {
    let mut rng = seeded(seed);
    let phi = random_matrix(m, n, &mut rng);
    let mut z = vec![C64::new(0.0, 0.0); n];
    for _ in 0..l {
        z[rng.random_range(0..n)] = complex_normal(&mut rng, 1.0);
    }
    let mut y = phi.matvec(&z).unwrap();
    for v in y.iter_mut() {
        *v += complex_normal(&mut rng, noise * noise);
    }
    (phi, y)
}

fn cosamp_sparse_and_monotone(cases: u32) -> Result<(), String> {
    run(cases, solver_strategy(), |(m, n, l, noise, seed)| {
        let (phi, y) = sparse_problem(m, n, l, noise, seed);
        let rep = cosamp(&phi, &y, &SolverConfig::cosamp(l)).unwrap();
        prop_assert!(rep.estimate.nnz() <= l);
        for w in rep.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let direct = y.sub(&phi.matvec(&rep.estimate.to_dense()).unwrap()).norm();
        prop_assert!((direct - rep.final_residual).abs() <= 1e-9 * y.norm().max(1.0));
        Ok(())
    })
}

fn iht_sparse(cases: u32) -> Result<(), String> {
    run(cases, (solver_strategy(), any::<bool>()), |((m, n, l, noise, seed), normalize)| {
        let (phi, y) = sparse_problem(m, n, l, noise, seed);
        let mut cfg = SolverConfig::iht(l);
        cfg.normalize_columns = normalize;
        let z0 = SparseVector::from_pairs(n, [(seed as usize % n, C64::new(1.0, 0.0))]).unwrap();
        let rep = iht(&phi, &y, &z0, &cfg).unwrap();
        prop_assert!(rep.estimate.nnz() <= l);
        Ok(())
    })
}

fn iht_small_step_monotone(cases: u32) -> Result<(), String> {
    run(cases, solver_strategy(), |(m, n, l, _, seed)| {
        let (phi, y) = sparse_problem(m, n, l, 0.0, seed);
        let top = principal_svd(&phi).sigma;
        let mut cfg = SolverConfig::iht(l);
        cfg.step_size = 0.999 / (top * top);
        let rep = iht(&phi, &y, &SparseVector::zeros(n), &cfg).unwrap();
        for w in rep.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-10), "{:?}", rep.residual_history);
        }
        Ok(())
    })
}

fn op_counts_scale_with_columns(cases: u32) -> Result<(), String> {
    run(cases, (8usize..16, 20usize..40, 2usize..5, any::<u64>()), |(m, n, factor, seed)| {
        let (small, y) = sparse_problem(m, n, 1, 0.1, seed);
        let mut rng = seeded(seed ^ 5);
        let extra = random_matrix(m, n * (factor - 1), &mut rng);
        let mut cols: Vec<ComplexVector> = (0..n).map(|j| small.column_vector(j)).collect();
        cols.extend((0..extra.cols()).map(|j| extra.column_vector(j)));
        let big = ComplexMatrix::from_columns(&cols).unwrap();
        let ratio_for = |cfg: &SolverConfig, kind: bool| {
            // Cost per iteration; the two problems may stop after different counts.
            let ops = |phi: &ComplexMatrix| {
                let rep = if kind {
                    cosamp(phi, &y, cfg).unwrap()
                } else {
                    iht(phi, &y, &SparseVector::zeros(phi.cols()), cfg).unwrap()
                };
                rep.op_count as f64 / rep.iterations_used.max(1) as f64
            };
            ops(&big) / ops(&small)
        };
        let mut c = SolverConfig::cosamp(1);
        c.exhaust_iterations = true;
        let mut i = SolverConfig::iht(1);
        i.exhaust_iterations = true;
        for (r, name) in [(ratio_for(&c, true), "cosamp"), (ratio_for(&i, false), "iht")] {
            let want = factor as f64;
            prop_assert!(r <= 2.0 * want && r >= want / 2.0, "{name}: ratio {r} vs {want}");
        }
        Ok(())
    })
}

fn solvers_deterministic(cases: u32) -> Result<(), String> {
    run(cases, solver_strategy(), |(m, n, l, noise, seed)| {
        let (phi, y) = sparse_problem(m, n, l, noise, seed);
        let c = SolverConfig::cosamp(l);
        prop_assert_eq!(cosamp(&phi, &y, &c).unwrap(), cosamp(&phi, &y, &c).unwrap());
        let i = SolverConfig::iht(l);
        let z0 = SparseVector::zeros(n);
        prop_assert_eq!(iht(&phi, &y, &z0, &i).unwrap(), iht(&phi, &y, &z0, &i).unwrap());
        Ok(())
    })
}

// estimators

fn tracking_context(n: usize, m: usize, g: usize, l: usize, delta: f64, seed: u64) -> TrackingContext {
    let s = setup(n, n, m, 0.1, seed);
    let full = full_dictionary(&s, n, n, g, g).unwrap();
    TrackingContext {
        setup: Arc::new(s),
        full: Arc::new(full),
        params: TrackerParams::new(l, 3, 4, delta),
    }
}

fn tracker_strategy() -> impl Strategy<Value = (usize, usize, usize, usize, f64, u64)> {
    (3usize..7, 2usize..5, 6usize..14, 1usize..3, 0.0f64..0.3, any::<u64>())
}

fn tracked(
    n: usize,
    m: usize,
    g: usize,
    l: usize,
    true_delta: f64,
    est_delta: f64,
    seed: u64,
) -> (TrackingContext, Vec<Vec<mmwave_cs::estimators::BlockEstimate>>) {
    let ctx = tracking_context(n, m, g, l, est_delta, seed);
    let p = ChannelParams::new(n, n, l).with_delta(true_delta);
    let stream = simulate_stream(&p, &ctx.setup, 4, seed, 0.0, 0).unwrap();
    let runs = EstimatorKind::ALL
        .iter()
        .map(|&k| track(&stream.measurements, k, &ctx).unwrap())
        .collect();
    (ctx, runs)
}

fn block_one_shared(cases: u32) -> Result<(), String> {
    run(cases, tracker_strategy(), |(n, m, g, l, delta, seed)| {
        let (_, runs) = tracked(n, m, g, l, delta, delta, seed);
        prop_assert_eq!(&runs[0][0].sparse, &runs[1][0].sparse);
        prop_assert_eq!(&runs[0][0].sparse, &runs[2][0].sparse);
        prop_assert_eq!(&runs[1][0].h_hat, &runs[2][0].h_hat);
        Ok(())
    })
}

fn dictionary_dimensions(cases: u32) -> Result<(), String> {
    run(cases, tracker_strategy(), |(n, m, g, l, delta, seed)| {
        let (ctx, runs) = tracked(n, m, g, l, delta, delta, seed);
        let reduced = l * l * ctx.params.g_bar_t * ctx.params.g_bar_r;
        for (k, run) in EstimatorKind::ALL.iter().zip(&runs) {
            for (b, est) in run.iter().enumerate() {
                let want = if b == 0 || *k == EstimatorKind::FullGreedy { g * g } else { reduced };
                prop_assert_eq!(est.dictionary.phi.shape(), (m * m, want));
            }
        }
        Ok(())
    })
}

fn numerical_rank(h: &ComplexMatrix) -> usize {
    let m = nalgebra::DMatrix::from_column_slice(h.rows(), h.cols(), h.as_slice());
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1e-300)).count()
}

fn estimate_rank_bounded(cases: u32) -> Result<(), String> {
    run(cases, tracker_strategy(), |(n, m, g, l, delta, seed)| {
        let (_, runs) = tracked(n, m, g, l, delta, delta, seed);
        for est in runs.iter().flatten() {
            prop_assert!(numerical_rank(&est.h_hat) <= l);
        }
        Ok(())
    })
}

fn out_of_tube_is_graceful(cases: u32) -> Result<(), String> {
    run(cases, tracker_strategy(), |(n, m, g, l, _, seed)| {
        // Angles move up to 30° per block while the trackers search ±0.5°.
        let (ctx, runs) = tracked(n, m, g, l, 30f64.to_radians(), 0.5f64.to_radians(), seed);
        for est in runs.iter().flatten() {
            prop_assert!(est.sparse.support.len() <= l);
            prop_assert!(est.solver_report.estimate.nnz() <= l);
            prop_assert!(est.h_hat.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            prop_assert_eq!(est.h_hat.shape(), (ctx.setup.n_r(), ctx.setup.n_t()));
        }
        Ok(())
    })
}

// eval

fn tiny_experiment(seed: u64, m: usize, blocks: usize) -> MseExperimentConfig {
    let mut model = ModelConfig::mse_defaults();
    model.n_t = 4;
    model.n_r = 4;
    model.g_t = 8;
    model.g_r = 8;
    model.g_bar_t = 2;
    model.g_bar_r = 3;
    model.blocks = blocks;
    model.realizations = 2;
    model.seed = seed;
    MseExperimentConfig {
        model,
        m_values: vec![m],
        scenarios: vec![NoiseScenario::low()],
    }
}

fn cells_share_streams(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..4, 1usize..4), |(seed, m, blocks)| {
        let recs = run_mse_experiment(&tiny_experiment(seed, m, blocks)).unwrap();
        prop_assert_eq!(recs.len(), 3);
        prop_assert!(recs.iter().all(|r| r.stream_digest == recs[0].stream_digest));
        // Channel draws are shared across M; noise and training differ.
        let other = run_mse_experiment(&tiny_experiment(seed, m + 1, blocks)).unwrap();
        prop_assert_ne!(&other[0].stream_digest, &recs[0].stream_digest);
        Ok(())
    })
}

fn mean_db_recomputes_exactly(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..4, 1usize..4), |(seed, m, blocks)| {
        for r in run_mse_experiment(&tiny_experiment(seed, m, blocks)).unwrap() {
            let s = r.mse.unwrap();
            let mean = s.per_block.iter().sum::<f64>() / s.per_block.len() as f64;
            prop_assert_eq!(mean, s.mean);
            prop_assert_eq!(to_db(mean), s.mean_db);
        }
        Ok(())
    })
}

fn unit(v: ComplexVector) -> ComplexVector {
    let n = v.norm();
    v.scale(C64::new(1.0 / n, 0.0))
}

fn perfect_csi_rate_dominates(cases: u32) -> Result<(), String> {
    run(cases, (1usize..7, 1usize..7, -10.0f64..10.0, any::<u64>()), |(n_t, n_r, snr_db, seed)| {
        let mut rng = seeded(seed);
        let h = random_matrix(n_r, n_t, &mut rng);
        let snr = 10f64.powf(snr_db / 10.0);
        let best = achievable_rate(&h, &BeamformingLink::new(make_beamformers(&h, false), snr, 1.0).unwrap());
        for _ in 0..100 {
            let d = BeamDirections {
                v: unit(random_vector(n_t, &mut rng)),
                u: unit(random_vector(n_r, &mut rng)),
            };
            let other = achievable_rate(&h, &BeamformingLink::new(d, snr, 1.0).unwrap());
            prop_assert!(other <= best * (1.0 + 1e-12) + 1e-15);
        }
        Ok(())
    })
}

fn response_distance_is_alias_symmetric(cases: u32) -> Result<(), String> {
    run(cases, (0.0f64..6.3, 0.0f64..6.3), |(a, b)| {
        let pi = std::f64::consts::PI;
        prop_assert!((response_distance(a, b) - response_distance(pi - a, b)).abs() <= 1e-12);
        prop_assert!(response_distance(a, b) <= wrapped_distance(a, b) + 1e-15);
        Ok(())
    })
}

pub fn all() -> Vec<Property> {
    macro_rules! p {
        ($module:literal, $f:ident) => {
            Property {
                module: $module,
                name: stringify!($f),
                check: $f,
            }
        };
    }
    vec![
        p!("numerics", kron_vec_identity),
        p!("numerics", khatri_rao_columns),
        p!("numerics", least_squares_residual_orthogonal),
        p!("numerics", hard_threshold_idempotent),
        p!("numerics", principal_svd_consistent),
        p!("channel", channel_reconstruction),
        p!("channel", angle_drift_bounded),
        p!("channel", evolution_deterministic),
        p!("channel", response_distance_is_alias_symmetric),
        p!("sensing", factored_dictionary_matches_kron_form),
        p!("sensing", reduced_columns_are_full_columns),
        p!("sensing", measurement_linear_in_channel),
        p!("sensing", noiseless_on_grid_in_span),
        p!("solvers", cosamp_sparse_and_monotone),
        p!("solvers", iht_sparse),
        p!("solvers", iht_small_step_monotone),
        p!("solvers", op_counts_scale_with_columns),
        p!("solvers", solvers_deterministic),
        p!("estimators", block_one_shared),
        p!("estimators", dictionary_dimensions),
        p!("estimators", estimate_rank_bounded),
        p!("estimators", out_of_tube_is_graceful),
        p!("eval", cells_share_streams),
        p!("eval", mean_db_recomputes_exactly),
        p!("eval", perfect_csi_rate_dominates),
    ]
}
