use impact_subtype::regression::{default_lambda_grid, ridge_fit, RidgePath};
use impact_subtype::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng) -> (Matrix, Vec<f64>) {
    let n = rng.random_range(5..120);
    let p = rng.random_range(1..40);
    let x: Vec<f64> = (0..n * p).map(|_| rng.random_range(-5.0..5.0) * (1.0 + (rng.random::<f64>() * 3.0).exp())).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    (Matrix::from_vec(n, p, x), y)
}

/// Population-std standardization, constant columns left with unit scale.
fn standardize(x: &Matrix) -> Vec<Vec<f64>> {
    let n = x.rows() as f64;
    let stats: Vec<(f64, f64)> = (0..x.cols())
        .map(|c| {
            let m = x.column(c).sum::<f64>() / n;
            let s = (x.column(c).map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            (m, if s > 0.0 { s } else { 1.0 })
        })
        .collect();
    x.iter_rows().map(|r| r.iter().zip(&stats).map(|(v, (m, s))| (v - m) / s).collect()).collect()
}

#[test]
fn penalized_normal_equations_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..100 {
        let (x, y) = random_problem(&mut rng);
        let lambda = 10f64.powf(rng.random_range(-3.0..4.0));
        let model = ridge_fit(&x, &y, lambda).unwrap();
        let z = standardize(&x);
        let ym = y.iter().sum::<f64>() / y.len() as f64;
        let resid: Vec<f64> = z.iter().zip(&y).map(|(r, yi)| r.iter().zip(&model.coefficients).map(|(a, b)| a * b).sum::<f64>() - (yi - ym)).collect();
        let p = x.cols();
        let mut grad_norm = 0.0;
        let mut scale = 0.0;
        for j in 0..p {
            let g: f64 = z.iter().zip(&resid).map(|(r, e)| r[j] * e).sum::<f64>() + lambda * model.coefficients[j];
            let s: f64 = z.iter().zip(&y).map(|(r, yi)| r[j] * (yi - ym)).sum();
            grad_norm += g * g;
            scale += s * s;
        }
        let rel = grad_norm.sqrt() / scale.sqrt().max(1.0);
        assert!(rel < 1e-8, "case {case}: relative gradient {rel}");
    }
}

#[test]
fn noiseless_coefficients_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (n, p) = (80, 6);
        let x: Vec<f64> = (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = Matrix::from_vec(n, p, x);
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b0 = rng.random_range(-1.0..1.0);
        let y: Vec<f64> = x.iter_rows().map(|r| b0 + r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()).collect();
        let (c0, c) = ridge_fit(&x, &y, 1e-9).unwrap().raw_coefficients();
        assert!((c0 - b0).abs() < 1e-6);
        assert!(c.iter().zip(&beta).all(|(a, b)| (a - b).abs() < 1e-6), "{c:?} vs {beta:?}");
    }
}

#[test]
fn coefficient_norm_shrinks_along_the_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let (x, y) = random_problem(&mut rng);
        let path = RidgePath::new(&x, &y).unwrap();
        let norms: Vec<f64> = default_lambda_grid()
            .iter()
            .map(|&l| path.fit(l).unwrap().coefficients.iter().map(|b| b * b).sum::<f64>().sqrt())
            .collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{norms:?}");
    }
}
