//! Materialized relation matrices and logical-pattern defects.
//!
//! Defects are max-abs entry errors, aggregated as the max over components.
//! Inversion compares `G_r1` with the group inverse of `G_r2` for its own form
//! (`D^-1 G^T D`), which reduces to the transpose when the form is Euclidean.

use nalgebra::DMatrix;

use super::{ComponentParams, ComponentSpec, Model};
use crate::error::{Error, Result};
use crate::geometry::{orth_matrix, orthogonality_defect, Weights};
use crate::manifolds::{elliptic_weight, hyperbolic_orth_matrix};

/// Largest component dimension that diagnostics will materialize.
pub const MAX_DIAGNOSTIC_DIM: usize = 64;

/// One component's relation matrix and the diagonal form it preserves.
#[derive(Debug, Clone)]
pub struct ComponentMatrix {
    pub spec: ComponentSpec,
    pub matrix: DMatrix<f64>,
    pub form: Vec<f64>,
}

impl ComponentMatrix {
    /// `D^-1 G^T D`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let k = self.form.len();
        DMatrix::from_fn(k, k, |i, j| self.matrix[(j, i)] * self.form[j] / self.form[i])
    }
}

/// Per-component matrices of relation `r`. Hyperbolic matrices act on ambient coordinates.
pub fn relation_matrices(model: &Model, r: usize) -> Result<Vec<ComponentMatrix>> {
    model.check_relation(r)?;
    if let Some(c) = model.config().components().iter().find(|c| c.dim > MAX_DIAGNOSTIC_DIM) {
        return Err(Error::DiagnosticsUnavailable {
            dim: c.dim,
            max: MAX_DIAGNOSTIC_DIM,
        });
    }
    model
        .config()
        .components()
        .iter()
        .enumerate()
        .map(|(i, &spec)| match model.component(r, i) {
            ComponentParams::Elliptic { reflectors, weight_raw } => {
                let p: Vec<f64> = weight_raw.iter().map(|&v| elliptic_weight(v)).collect();
                Ok(ComponentMatrix {
                    spec,
                    matrix: orth_matrix(reflectors, &p)?,
                    form: p,
                })
            }
            ComponentParams::Hyperbolic { reflectors, boost, .. } => Ok(ComponentMatrix {
                spec,
                matrix: hyperbolic_orth_matrix(reflectors, boost)?,
                form: Weights::lorentz(spec.dim).into_inner(),
            }),
        })
        .collect()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `max_i ||G_r G_r - I||_max`.
pub fn symmetry_defect(model: &Model, r: usize) -> Result<f64> {
    Ok(relation_matrices(model, r)?
        .iter()
        .map(|c| {
            let k = c.matrix.nrows();
            max_abs(&(&c.matrix * &c.matrix - DMatrix::identity(k, k)))
        })
        .fold(0.0, f64::max))
}

/// `max_i ||G_r1 - G_r2^-1||_max`.
pub fn inversion_defect(model: &Model, r1: usize, r2: usize) -> Result<f64> {
    let a = relation_matrices(model, r1)?;
    let b = relation_matrices(model, r2)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| max_abs(&(&x.matrix - y.inverse())))
        .fold(0.0, f64::max))
}

/// `max_i ||G_r1 - G_r3 G_r2||_max`: `r1` behaves like `r2` followed by `r3`.
pub fn composition_defect(model: &Model, r1: usize, r2: usize, r3: usize) -> Result<f64> {
    let a = relation_matrices(model, r1)?;
    let b = relation_matrices(model, r2)?;
    let c = relation_matrices(model, r3)?;
    Ok(a.iter()
        .zip(&b)
        .zip(&c)
        .map(|((x, y), z)| max_abs(&(&x.matrix - &z.matrix * &y.matrix)))
        .fold(0.0, f64::max))
}

/// Symmetry, inversion or composition defect depending on how many relations are given.
pub fn pattern_defect(model: &Model, relations: &[usize]) -> Result<f64> {
    match *relations {
        [r] => symmetry_defect(model, r),
        [r1, r2] => inversion_defect(model, r1, r2),
        [r1, r2, r3] => composition_defect(model, r1, r2, r3),
        _ => Err(Error::Config(format!(
            "pattern diagnostics take 1, 2 or 3 relations, got {}",
            relations.len()
        ))),
    }
}

/// Orthogonality defect of each component matrix with respect to its form.
pub fn orthogonality_defects(model: &Model, r: usize) -> Result<Vec<f64>> {
    relation_matrices(model, r)?
        .iter()
        .map(|c| orthogonality_defect(&c.matrix, &c.form))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ManifoldConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(s: &str) -> ManifoldConfig {
        ManifoldConfig::parse_components(s, 2).unwrap()
    }

    #[test]
    fn identity_params_are_symmetric() {
        let m = Model::zeros(cfg("P4,Q5"), 1, 1);
        assert_eq!(symmetry_defect(&m, 0).unwrap(), 0.0);
        assert_eq!(inversion_defect(&m, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn single_reflection_is_involution() {
        let mut m = Model::zeros(cfg("P3,Q4"), 1, 1);
        let mut rows = vec![0.0; 9];
        rows[..3].copy_from_slice(&[0.3, -1.2, 0.7]);
        m.set_reflectors(0, 0, &rows).unwrap();
        m.set_reflectors(0, 1, &rows).unwrap();
        m.set_elliptic_weights(0, 0, &[0.5, 2.0, 1.3]).unwrap();
        assert!(symmetry_defect(&m, 0).unwrap() < 1e-14);
    }

    #[test]
    fn group_inverse_gives_zero_inversion_defect() {
        let mut m = Model::init(cfg("P4,Q4"), 1, 2, 5);
        m.set_elliptic_weights(0, 0, &[0.4, 1.0, 2.5, 0.9]).unwrap();
        m.set_boost(0, 1, &[0.3, -0.8, 0.1]).unwrap();
        let g = relation_matrices(&m, 0).unwrap();
        for c in &g {
            let prod = &c.matrix * c.inverse();
            let k = prod.nrows();
            assert!(max_abs(&(prod - DMatrix::identity(k, k))) < 1e-12);
        }
        assert!(orthogonality_defects(&m, 0).unwrap().iter().all(|&d| d < 1e-12));
    }

    #[test]
    fn fresh_model_is_orthogonal() {
        let m = Model::init(cfg("P8,P8,Q9,Q9"), 2, 3, 17);
        for r in 0..3 {
            assert!(orthogonality_defects(&m, r).unwrap().iter().all(|&d| d <= 1e-9));
        }
    }

    #[test]
    fn random_relations_are_not_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut above = 0;
        for seed in 0..100 {
            let mut m = Model::init(cfg("P4,Q4"), 1, 2, seed);
            for r in 0..2 {
                let b: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                m.set_boost(r, 1, &b).unwrap();
            }
            if inversion_defect(&m, 0, 1).unwrap() > 0.1 {
                above += 1;
            }
        }
        assert!(above >= 95, "{above}/100");
    }

    #[test]
    fn composition_of_matching_products() {
        let mut m = Model::zeros(cfg("P2"), 1, 3);
        // r1 = reflection about e0 then e1 = -I; r2 = reflection e0; r3 = reflection e1
        m.set_reflectors(0, 0, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        m.set_reflectors(1, 0, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        m.set_reflectors(2, 0, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(composition_defect(&m, 0, 1, 2).unwrap() < 1e-15);
        assert!(pattern_defect(&m, &[0, 1, 2]).unwrap() < 1e-15);
        assert!(pattern_defect(&m, &[]).is_err());
    }

    #[test]
    fn oversized_components_are_rejected() {
        let m = Model::zeros(cfg("P65"), 1, 1);
        assert!(matches!(
            symmetry_defect(&m, 0),
            Err(Error::DiagnosticsUnavailable { dim: 65, max: 64 })
        ));
    }
}
