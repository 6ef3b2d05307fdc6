//! Embedded property suite behind `golde selfcheck`.
//!
//! Each property draws `trials` random cases from a seeded stream and compares
//! the fast kernels against materialized matrices or closed forms.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{decompose_orthogonal, orth_apply, orth_matrix, orthogonality_defect, quad_inner, ReflectorSet, Weights};
use crate::manifolds::{
    boost_matrix, boost_matrix_velocity_form, boost_sqrt_matrix, elliptic_distance, exp_map, hyperbolic_orth_apply,
    hyperbolic_orth_matrix, membership_residual,
};
use crate::model::{ManifoldConfig, Model};
use crate::training::{finite_diff_check, sample_batch, TrainConfig};

/// Outcome of one property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error.
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub seconds: f64,
}

fn normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.2..3.0)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn mat_max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// A reflector row whose self-inner product is not close to zero.
fn anisotropic(rng: &mut ChaCha8Rng, w: &[f64]) -> Vec<f64> {
    loop {
        let u = normal(rng, w.len());
        let uu: f64 = u.iter().zip(w).map(|(a, b)| a * a * b).sum();
        let norm: f64 = u.iter().map(|a| a * a).sum();
        if uu.abs() >= 0.1 * norm {
            return u;
        }
    }
}

fn random_reflectors(rng: &mut ChaCha8Rng, w: &[f64]) -> ReflectorSet {
    let rows: Vec<Vec<f64>> = (0..w.len()).map(|_| anisotropic(rng, w)).collect();
    ReflectorSet::from_rows(&rows).expect("rows share a length")
}

fn orthogonality_invariance(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..trials {
        let k = rng.random_range(2..=8);
        let w = match case % 3 {
            0 => vec![1.0; k],
            1 => positive(rng, k),
            _ => Weights::lorentz(k).into_inner(),
        };
        let u = anisotropic(rng, &w);
        let x = normal(rng, k);
        let y = normal(rng, k);
        let refl = ReflectorSet::from_rows(&[u]).unwrap();
        let hx = orth_apply(refl.view(), &w, &x).unwrap();
        let hy = orth_apply(refl.view(), &w, &y).unwrap();
        let before = quad_inner(&x, &y, &w).unwrap();
        let after = quad_inner(&hx, &hy, &w).unwrap();
        let scale: f64 = x.iter().zip(&y).zip(&w).map(|((a, b), c)| (a * b * c).abs()).sum();
        worst = worst.max((after - before).abs() / scale.max(before.abs()));
    }
    worst
}

fn fast_path(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..trials {
        let k = [2, 4, 8, 16][case % 4];
        let w = positive(rng, k);
        let refl = random_reflectors(rng, &w);
        let x = normal(rng, k);
        let fast = orth_apply(refl.view(), &w, &x).unwrap();
        let slow = orth_matrix(refl.view(), &w).unwrap() * DMatrix::from_column_slice(k, 1, &x);
        worst = worst.max(max_abs_diff(&fast, slow.as_slice()));
    }
    worst
}

fn decomposition(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let k = rng.random_range(2..=8);
        let w = positive(rng, k);
        let g = orth_matrix(random_reflectors(rng, &w).view(), &w).unwrap();
        let refl = decompose_orthogonal(&g, &w).unwrap();
        let back = orth_matrix(refl.view(), &w).unwrap();
        worst = worst.max(mat_max_abs(&(back - g)));
    }
    worst
}

fn scaled_euclidean(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let k = rng.random_range(2..=8);
        let p = positive(rng, k);
        let refl = random_reflectors(rng, &p);
        let h = normal(rng, k);
        let t = normal(rng, k);
        let direct = elliptic_distance(&orth_apply(refl.view(), &p, &h).unwrap(), &t, &p).unwrap();
        let sp: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
        let scaled_rows: Vec<f64> = (0..refl.rows())
            .flat_map(|c| refl.row(c).iter().zip(&sp).map(|(u, s)| u * s).collect::<Vec<_>>())
            .collect();
        let scaled = ReflectorSet::from_flat(scaled_rows, k).unwrap();
        let sh: Vec<f64> = h.iter().zip(&sp).map(|(a, s)| a * s).collect();
        let st: Vec<f64> = t.iter().zip(&sp).map(|(a, s)| a * s).collect();
        let moved = orth_apply(scaled.view(), &vec![1.0; k], &sh).unwrap();
        let euclid = moved.iter().zip(&st).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max((euclid - direct).abs() / direct.max(1e-300));
    }
    worst
}

/// Worst Lorentz orthogonality defect; infinite when a matrix leaves the
/// positive subgroup or a transformed point leaves the upper sheet.
fn lorentz_positive(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let k = rng.random_range(2..=8);
        let refl = random_reflectors(rng, &vec![1.0; k - 1]);
        let b = normal(rng, k - 1);
        let g = hyperbolic_orth_matrix(refl.view(), &b).unwrap();
        let defect = orthogonality_defect(&g, &Weights::lorentz(k)).unwrap();
        let beta = rng.random_range(0.1..4.0);
        let x = exp_map(&normal(rng, k - 1), beta).unwrap();
        let y = hyperbolic_orth_apply(refl.view(), &b, &x).unwrap();
        if g[(0, 0)] < 1.0 - 1e-12 || membership_residual(y.coords(), beta) > 1e-8 || y.coords()[0] <= 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(defect);
    }
    worst
}

fn boost_forms(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..trials {
        let n = rng.random_range(1..=8);
        let scale = [1.0, 1e-4, 1e-9, 0.0][case % 4];
        let b: Vec<f64> = normal(rng, n).iter().map(|v| v * scale).collect();
        let s = boost_sqrt_matrix(&b);
        let bv = DMatrix::from_column_slice(n, 1, &b);
        let target = DMatrix::identity(n, n) + &bv * bv.transpose();
        worst = worst.max(mat_max_abs(&(&s * &s - target)));
        worst = worst.max(mat_max_abs(&(boost_matrix(&b) - boost_matrix_velocity_form(&b))));
    }
    worst
}

fn exp_membership(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..trials {
        let n = rng.random_range(1..=8);
        let scale = [1.0, 1e-9, 5.0][case % 3];
        let x: Vec<f64> = normal(rng, n).iter().map(|v| v * scale).collect();
        let beta = rng.random_range(0.01..10.0);
        let p = exp_map(&x, beta).unwrap();
        worst = worst.max(membership_residual(p.coords(), beta));
    }
    worst
}

fn gradient(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let cfg = ManifoldConfig::parse_components("P3,P4,Q4,Q3", rng.random_range(1..=2)).unwrap();
        let mut model = Model::init(cfg, 8, 2, rng.random());
        for r in 0..2 {
            let p = positive(rng, 3);
            model.set_elliptic_weights(r, 0, &p).unwrap();
            model.set_boost(r, 2, &normal(rng, 3)).unwrap();
            model.set_curvature(r, 3, rng.random_range(0.5..2.0)).unwrap();
        }
        let train: Vec<_> = (0..4)
            .map(|i| crate::data::Triple::new(i, i % 2, (i + 3) % 8))
            .collect();
        let tc = TrainConfig {
            batch_size: 3,
            neg_size: 3,
            gamma: 2.0,
            alpha: 1.0,
            seed: rng.random(),
            ..TrainConfig::default()
        };
        let batch = sample_batch(&train, 8, &tc, 1, None);
        let report = finite_diff_check(&model, &batch, &tc, 1e-6).expect("finite scores");
        worst = worst.max(report.max);
    }
    worst
}

/// Runs every property with `trials` cases each (the gradient property uses
/// `trials / 100` models, at least one).
pub fn run(trials: usize, seed: u64) -> Vec<PropertyResult> {
    type Check = fn(&mut ChaCha8Rng, usize) -> f64;
    let grad_trials = (trials / 100).max(1);
    let props: [(&'static str, Check, f64, usize); 8] = [
        ("orthogonality-invariance", orthogonality_invariance, 1e-9, trials),
        ("fast-path-vs-matrix", fast_path, 1e-10, trials),
        ("decomposition-round-trip", decomposition, 1e-8, trials),
        ("elliptic-scaled-euclidean", scaled_euclidean, 1e-9, trials),
        ("lorentz-positive-subgroup", lorentz_positive, 1e-9, trials),
        ("boost-closed-forms", boost_forms, 1e-10, trials),
        ("exp-map-membership", exp_membership, 1e-8, trials),
        ("gradient-finite-difference", gradient, 1e-4, grad_trials),
    ];
    props
        .iter()
        .enumerate()
        .map(|(i, &(name, check, tolerance, cases))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let start = Instant::now();
            let worst = check(&mut rng, cases);
            PropertyResult {
                name,
                passed: worst <= tolerance,
                worst,
                tolerance,
                cases,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}
