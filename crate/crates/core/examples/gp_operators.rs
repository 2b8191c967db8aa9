//! A GP conditioned on a point value, an interval mean, a smoothed gradient and (in 2-D)
//! a disk mean, with posterior draws pushed through the same operators.

use gpdc::gp::{
    apply_operator_to_samples, fit_posterior, predictive_variance, sample_posterior, Dataset, GPModel, Grid,
};
use gpdc::kernels::{Domain, KernelSpec, ObservationOperator, OperatorKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gpdc::Result<()> {
    let model = GPModel::new(KernelSpec::matern52(0.15, 1.0)?, 1e-6)?;
    let mut data = Dataset::new(Domain::unit_interval());
    data.push(ObservationOperator::point(vec![0.1]), 0.8)?;
    data.push(ObservationOperator::interval_mean(0.5, 0.3)?, -0.4)?;
    data.push(ObservationOperator::smoothed_gradient(0.85, 0.1)?, 2.0)?;

    let grid = Grid::unit_line(11)?;
    let post = fit_posterior(&model, &data, &grid)?;
    println!("   x    mean     sd");
    for (i, p) in grid.points().iter().enumerate() {
        println!(
            "{:>4.1} {:>7.3} {:>6.3}",
            p[0],
            post.mean[i],
            post.variance(i).max(0.0).sqrt()
        );
    }

    // draws on a fine line, then the interval functional applied to each draw
    let fine = Grid::unit_line(200)?;
    let post = fit_posterior(&model, &data, &fine)?;
    let draws = sample_posterior(&post, 2000, &mut ChaCha8Rng::seed_from_u64(1))?;
    let op = ObservationOperator::interval_mean(0.5, 0.3)?;
    let v = apply_operator_to_samples(&draws, &fine, &op)?;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    println!("interval mean over draws {mean:.3} (observed -0.4)");
    let cand = ObservationOperator::interval_mean(0.3, 0.5)?;
    println!(
        "predictive variance of a new wide window {:.2e}",
        predictive_variance(&model, &data, &cand)?
    );

    let mut disk = Dataset::new(Domain::unit_square());
    disk.push(
        ObservationOperator::of_kind(OperatorKind::DiskMean, vec![0.5, 0.5], 0.2)?,
        1.0,
    )?;
    let mesh = Grid::unit_mesh(5)?;
    let post = fit_posterior(&GPModel::new(KernelSpec::matern52(0.2, 1.0)?, 1e-6)?, &disk, &mesh)?;
    println!(
        "2-D mean at the disk center {:.3}, at a corner {:.3}",
        post.mean[12], post.mean[0]
    );
    Ok(())
}
