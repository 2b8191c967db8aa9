//! Distance correlation, distance covariance and k-NN mutual information on a few
//! classic dependence shapes.

use gpdc::depmeasures::{dist_cor, dist_cov, mi_knn, DepConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> gpdc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let m = 300;
    let x: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let noise: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
    let shapes: [(&str, Box<dyn Fn(usize) -> f64>); 4] = [
        ("independent", Box::new(|i| noise[i])),
        ("linear", Box::new(|i| x[i] + 0.2 * noise[i])),
        ("parabola", Box::new(|i| x[i] * x[i] + 0.1 * noise[i])),
        (
            "circle",
            Box::new(|i| (1.0 - x[i] * x[i]).sqrt() * if i % 2 == 0 { 1.0 } else { -1.0 }),
        ),
    ];
    let xm = DMatrix::from_column_slice(m, 1, &x);
    println!(
        "{:<12} {:>7} {:>7} {:>7} {:>7}",
        "shape", "dcor", "dcor.5", "dcov", "mi"
    );
    for (name, f) in &shapes {
        let y: Vec<f64> = (0..m).map(f).collect();
        let ym = DMatrix::from_column_slice(m, 1, &y);
        let dcor = dist_cor(&xm, &ym, &DepConfig::default())?;
        let dcor_half = dist_cor(&xm, &ym, &DepConfig::new(0.5, 3)?)?;
        let dcov = dist_cov(&xm, &ym, &DepConfig::default())?;
        let mi = mi_knn(&x, &y, 3)?;
        println!("{name:<12} {dcor:>7.3} {dcor_half:>7.3} {dcov:>7.3} {mi:>7.3}");
    }
    Ok(())
}
