use gpdc::gp::{
    apply_operator_to_samples, fit_posterior, loo_objective, optimize_hypers, predictive_variance, sample_posterior,
    Dataset, GPModel, Grid, HyperBounds, SampleMatrix,
};
use gpdc::kernels::{eval_kernel, Domain, KernelSpec, ObservationOperator};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn matern(l: f64) -> KernelSpec {
    KernelSpec::matern52(l, 1.0).unwrap()
}

fn point_data(xs: &[f64], ys: &[f64]) -> Dataset {
    let mut d = Dataset::new(Domain::unit_interval());
    for (&x, &y) in xs.iter().zip(ys) {
        d.push(ObservationOperator::point(vec![x]), y).unwrap();
    }
    d
}

/// Textbook GP regression with an LU solve, points only.
fn textbook(k: &KernelSpec, noise: f64, xs: &[f64], ys: &[f64], grid: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = xs.len();
    let kk = DMatrix::from_fn(n, n, |i, j| {
        eval_kernel(k, &[xs[i]], &[xs[j]]).unwrap() + if i == j { noise } else { 0.0 }
    });
    let ks = DMatrix::from_fn(n, grid.len(), |i, j| eval_kernel(k, &[xs[i]], &[grid[j]]).unwrap());
    let kss = DMatrix::from_fn(grid.len(), grid.len(), |i, j| {
        eval_kernel(k, &[grid[i]], &[grid[j]]).unwrap()
    });
    let lu = kk.lu();
    let a = lu.solve(&DVector::from_column_slice(ys)).unwrap();
    let b = lu.solve(&ks).unwrap();
    (ks.transpose() * a, kss - ks.transpose() * b)
}

#[test]
fn noiseless_interpolation_at_observed_points() {
    let xs = [0.05, 0.3, 0.52, 0.77, 0.95];
    let ys = [0.3, -1.2, 0.4, 2.0, -0.1];
    let model = GPModel::new(matern(0.1), 0.0).unwrap();
    let post = fit_posterior(&model, &point_data(&xs, &ys), &Grid::line(xs.to_vec()).unwrap()).unwrap();
    for i in 0..xs.len() {
        assert!((post.mean[i] - ys[i]).abs() < 1e-8, "mean {i}");
        assert!(post.variance(i) < 1e-8, "var {i}");
    }
}

#[test]
fn point_data_matches_textbook_gp() {
    let k = matern(0.15);
    let xs = [0.1, 0.25, 0.6, 0.61, 0.9];
    let ys = [1.0, 0.2, -0.7, -0.6, 0.3];
    let noise = 1e-3;
    let grid: Vec<f64> = (0..25).map(|i| i as f64 / 24.0).collect();
    let model = GPModel::new(k.clone(), noise).unwrap().with_jitter(1e-16).unwrap();
    let post = fit_posterior(&model, &point_data(&xs, &ys), &Grid::line(grid.clone()).unwrap()).unwrap();
    let (mean, cov) = textbook(&k, noise, &xs, &ys, &grid);
    assert!((post.mean - mean).amax() < 1e-8);
    assert!((post.cov - cov).amax() < 1e-8);
}

/// Covariances of the interval functional approximated by averaging 10³ midpoint nodes.
struct Discretized {
    k: KernelSpec,
    nodes: Vec<f64>,
}

impl Discretized {
    fn new(k: KernelSpec, q: f64, w: f64) -> Self {
        let n = 1000;
        let nodes = (0..n).map(|i| q - w / 2.0 + w * (i as f64 + 0.5) / n as f64).collect();
        Self { k, nodes }
    }
    fn with_point(&self, x: f64) -> f64 {
        self.nodes
            .iter()
            .map(|&u| self.k.at_distance((u - x).abs()))
            .sum::<f64>()
            / self.nodes.len() as f64
    }
    fn with_self(&self) -> f64 {
        let n = self.nodes.len() as f64;
        let mut s = 0.0;
        for &a in &self.nodes {
            for &b in &self.nodes {
                s += self.k.at_distance((a - b).abs());
            }
        }
        s / (n * n)
    }
}

#[test]
fn interval_observation_matches_discretized_oracle() {
    let k = matern(0.3);
    let mut data = Dataset::new(Domain::unit_interval());
    data.push(ObservationOperator::interval_mean(0.5, 0.2).unwrap(), 0.5)
        .unwrap();
    let model = GPModel::new(k.clone(), 0.0).unwrap();
    let post = fit_posterior(&model, &data, &Grid::line(vec![0.2, 0.5, 0.9]).unwrap()).unwrap();

    let d = Discretized::new(k.clone(), 0.5, 0.2);
    let kqq = d.with_self();
    for (i, x) in [0.2, 0.5, 0.9].into_iter().enumerate() {
        let kxq = d.with_point(x);
        let mean = kxq / kqq * 0.5;
        let var = 1.0 - kxq * kxq / kqq;
        assert!(
            (post.mean[i] - mean).abs() <= 1e-3 * mean.abs(),
            "mean at {x}: {} vs {mean}",
            post.mean[i]
        );
        assert!((post.variance(i) - var).abs() <= 1e-3 * var.max(1e-3), "var at {x}");
    }
    assert!((post.mean[1] - 0.5).abs() < 0.05);
}

#[test]
fn interval_candidate_variance_matches_discretized_oracle() {
    let k = matern(0.2);
    let data = point_data(&[0.3], &[1.0]);
    let model = GPModel::new(k.clone(), 0.0).unwrap();
    let cand = ObservationOperator::interval_mean(0.45, 0.3).unwrap();
    let v = predictive_variance(&model, &data, &cand).unwrap();
    let d = Discretized::new(k.clone(), 0.45, 0.3);
    let oracle = d.with_self() - d.with_point(0.3).powi(2) / 1.0;
    assert!((v - oracle).abs() <= 1e-3 * oracle, "{v} vs {oracle}");

    let observed = point_data(&[0.45], &[0.0]);
    let p = ObservationOperator::point(vec![0.45]);
    assert!(predictive_variance(&model, &observed, &p).unwrap() < 1e-8);
}

fn small_posterior() -> gpdc::gp::Posterior {
    let model = GPModel::new(matern(0.3), 1e-4).unwrap();
    let data = point_data(&[0.2, 0.7], &[0.5, -0.5]);
    fit_posterior(&model, &data, &Grid::line(vec![0.0, 0.3, 0.5, 0.8, 1.0]).unwrap()).unwrap()
}

#[test]
fn posterior_draws_reproduce_mean_and_covariance() {
    let post = small_posterior();
    let m = 10_000;
    let s = sample_posterior(&post, m, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let n = post.len();
    let emp_mean = DVector::from_fn(n, |j, _| s.values.column(j).mean());
    for j in 0..n {
        let tol = 4.0 * post.variance(j).sqrt() / (m as f64).sqrt();
        assert!((emp_mean[j] - post.mean[j]).abs() <= tol, "mean {j}");
    }
    let centered = DMatrix::from_fn(m, n, |i, j| s.values[(i, j)] - emp_mean[j]);
    let emp_cov = centered.transpose() * &centered / (m as f64 - 1.0);
    let rel = (&emp_cov - &post.cov).norm() / post.cov.norm();
    assert!(rel < 0.05, "frobenius rel {rel}");
}

#[test]
fn draws_are_deterministic_per_seed() {
    let post = small_posterior();
    let a = sample_posterior(&post, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = sample_posterior(&post, 50, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn point_draw_variance_matches_predictive_variance() {
    let model = GPModel::new(matern(0.25), 1e-4).unwrap();
    let data = point_data(&[0.1, 0.5], &[0.3, 0.9]);
    let grid = Grid::unit_line(11).unwrap();
    let post = fit_posterior(&model, &data, &grid).unwrap();
    let s = sample_posterior(&post, 10_000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let op = ObservationOperator::point(vec![0.8]);
    let vals = apply_operator_to_samples(&s, &grid, &op).unwrap();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() as f64 - 1.0);
    let pv = predictive_variance(&model, &data, &op).unwrap();
    assert!((var - pv).abs() <= 0.05 * pv, "{var} vs {pv}");
}

fn draws_of(f: impl Fn(f64) -> f64, xs: &[f64], rows: usize) -> SampleMatrix {
    SampleMatrix {
        values: DMatrix::from_fn(rows, xs.len(), |i, j| f(xs[j]) + i as f64),
    }
}

#[test]
fn operators_applied_to_gridded_draws() {
    let grid = Grid::unit_line(120).unwrap();
    let xs: Vec<f64> = grid.points().into_iter().map(|p| p[0]).collect();

    let s = draws_of(|x| x * x, &xs, 3);
    let at_node = apply_operator_to_samples(&s, &grid, &ObservationOperator::point(vec![xs[17]])).unwrap();
    assert_eq!(at_node, s.column(17));

    let full = ObservationOperator::interval_mean(0.5, 1.0).unwrap();
    let c = draws_of(|_| 2.5, &xs, 2);
    let v = apply_operator_to_samples(&c, &grid, &full).unwrap();
    assert!(v.iter().enumerate().all(|(i, v)| (v - (2.5 + i as f64)).abs() < 1e-12));

    let op = ObservationOperator::interval_mean(0.5, 0.2).unwrap();
    let v = apply_operator_to_samples(&s, &grid, &op).unwrap();
    let exact = (0.6f64.powi(3) - 0.4f64.powi(3)) / (3.0 * 0.2);
    assert!((v[0] - exact).abs() <= 1e-3, "{} vs {exact}", v[0]);
}

#[test]
fn closed_form_loo_matches_refits() {
    let k = matern(0.2);
    let noise = 1e-2;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| (6.0 * x).sin() + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let model = GPModel::new(k.clone(), noise).unwrap().with_jitter(1e-16).unwrap();
    let closed = loo_objective(&model, &point_data(&xs, &ys)).unwrap();

    let mut refit = 0.0;
    for i in 0..xs.len() {
        let keep: Vec<usize> = (0..xs.len()).filter(|&j| j != i).collect();
        let kx: Vec<f64> = keep.iter().map(|&j| xs[j]).collect();
        let ky: Vec<f64> = keep.iter().map(|&j| ys[j]).collect();
        let (m, c) = textbook(&k, noise, &kx, &ky, &[xs[i]]);
        let var = c[(0, 0)] + noise;
        refit += -0.5 * var.ln() - (ys[i] - m[0]).powi(2) / (2.0 * var) - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    assert!((closed - refit).abs() <= 1e-8 * refit.abs(), "{closed} vs {refit}");
}

#[test]
fn correct_noise_level_scores_higher_on_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs: Vec<f64> = (0..20).map(|i| (i as f64 + 0.5) / 20.0).collect();
    let ys: Vec<f64> = xs.iter().map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let data = point_data(&xs, &ys);
    let noisy = GPModel::new(matern(0.1), 0.01).unwrap();
    let exact = GPModel::new(matern(0.1), 0.0).unwrap();
    assert!(loo_objective(&noisy, &data).unwrap() > loo_objective(&exact, &data).unwrap());
}

#[test]
fn hyper_search_never_loses_to_incoming() {
    let data = point_data(&[0.1, 0.35, 0.4, 0.8], &[0.0, 1.0, 0.9, -0.5]);
    for budget in [1, 5, 20] {
        let model = GPModel::new(matern(0.05), 1e-6).unwrap();
        let before = loo_objective(&model, &data).unwrap();
        let fit = optimize_hypers(
            &model,
            &data,
            budget,
            &HyperBounds::default(),
            &mut ChaCha8Rng::seed_from_u64(budget as u64),
        )
        .unwrap();
        let after = loo_objective(&fit.model, &data).unwrap();
        assert!(after >= before, "budget {budget}");
        assert_eq!(after, fit.score);
        assert!(!fit.warning);
    }
}

#[test]
fn hyper_search_recovers_length_scale() {
    let truth = 0.02;
    let k = matern(truth);
    let mut found = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let xs: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
        let gram = DMatrix::from_fn(30, 30, |i, j| {
            k.at_distance((xs[i] - xs[j]).abs()) + if i == j { 1e-8 } else { 0.0 }
        });
        let l = gram.cholesky().unwrap().l();
        let z = DVector::from_fn(30, |_, _| rng.sample::<f64, _>(StandardNormal));
        let ys = l * z;
        let data = point_data(&xs, ys.as_slice());
        let start = GPModel::new(matern(0.1), 1e-4).unwrap();
        let fit = optimize_hypers(&start, &data, 20, &HyperBounds::default(), &mut rng).unwrap();
        found.push(fit.model.length_scale());
    }
    found.sort_by(f64::total_cmp);
    let median = 0.5 * (found[9] + found[10]);
    assert!(
        median > truth / 3.0 && median < truth * 3.0,
        "median ℓ {median}, all {found:?}"
    );
}

#[test]
fn conditioning_only_shrinks_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = GPModel::new(matern(0.15), 0.0).unwrap();
    let grid = Grid::unit_line(30).unwrap();
    let cands = [
        ObservationOperator::point(vec![0.33]),
        ObservationOperator::interval_mean(0.6, 0.25).unwrap(),
        ObservationOperator::smoothed_gradient(0.2, 0.05).unwrap(),
    ];
    let mut data = Dataset::new(Domain::unit_interval());
    let mut prev: Vec<f64> = cands
        .iter()
        .map(|c| predictive_variance(&model, &data, c).unwrap())
        .collect();
    for step in 0..8 {
        let q: f64 = rng.random();
        let op = match step % 3 {
            0 => ObservationOperator::point(vec![q]),
            1 => ObservationOperator::interval_mean(q, 0.1 + 0.3 * rng.random::<f64>()).unwrap(),
            _ => ObservationOperator::smoothed_gradient(q, 0.03).unwrap(),
        };
        data.push(op, rng.sample(StandardNormal)).unwrap();
        let post = fit_posterior(&model, &data, &grid).unwrap();
        assert!((0..post.len()).all(|i| post.variance(i) <= 1.0 + 1e-8));
        let now: Vec<f64> = cands
            .iter()
            .map(|c| predictive_variance(&model, &data, c).unwrap())
            .collect();
        for (a, b) in now.iter().zip(&prev) {
            assert!(*a <= b + 1e-8, "step {step}: {a} > {b}");
        }
        prev = now;
    }
}
