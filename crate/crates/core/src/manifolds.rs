//! Elliptic and hyperbolic relation transforms and distances.
//!
//! Elliptic components transform with `Orth(U, p)` and measure the Mahalanobis
//! distance under `diag(p)`. Hyperbolic components live on the upper sheet of
//! `Q_beta = { x : <x,x>_q = -beta, x_1 > 0 }` with `q = (-1, 1, ..., 1)`;
//! entity vectors are lifted with the exponential map at the origin and
//! transformed by a boost followed by a Euclidean rotation of the spatial part.
//!
//! Each differentiable kernel has a matching `*_backward` used by training.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::geometry::{self, dot, orth_apply_in_place, wdot, Reflectors, Weights};
use crate::numeric::{acosh_clamped, acosh_over_sinh, cosh_minus_sinhc_over_sq, sinhc};

/// Lower bound added to reparameterized elliptic weights.
pub const ELLIPTIC_FLOOR: f64 = 1e-6;
/// Lower bound added to reparameterized curvature radii.
pub const CURVATURE_FLOOR: f64 = 1e-4;
/// Relative hyperboloid residual accepted at operation boundaries.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-6;

/// Elliptic weight `p = softplus(raw) + 1e-6`.
#[inline]
pub fn elliptic_weight(raw: f64) -> f64 {
    crate::numeric::positive(raw, ELLIPTIC_FLOOR)
}

/// Curvature radius `beta = softplus(raw) + 1e-4`.
#[inline]
pub fn curvature(raw: f64) -> f64 {
    crate::numeric::positive(raw, CURVATURE_FLOOR)
}

/// Strictly positive elliptic weights, obtained from unconstrained raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticWeights(Vec<f64>);

impl EllipticWeights {
    pub fn from_raw(raw: &[f64]) -> Self {
        EllipticWeights(raw.iter().map(|&r| elliptic_weight(r)).collect())
    }

    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&v| !(v >= ELLIPTIC_FLOOR) || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "elliptic weights must be finite and at least {ELLIPTIC_FLOOR:e}"
            )));
        }
        Ok(EllipticWeights(p))
    }

    pub fn ones(dim: usize) -> Self {
        EllipticWeights(vec![1.0; dim])
    }
}

impl std::ops::Deref for EllipticWeights {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `Orth(U, p) e`.
pub fn elliptic_transform(refl: Reflectors<'_>, p: &EllipticWeights, e: &[f64]) -> Result<Vec<f64>> {
    geometry::orth_apply(refl, p, e)
}

/// `sqrt((x - y)^T diag(p) (x - y))`.
pub fn elliptic_distance(x: &[f64], y: &[f64], p: &[f64]) -> Result<f64> {
    check_len(p.len(), x.len())?;
    check_len(p.len(), y.len())?;
    Ok(elliptic_sq_distance(x, y, p).sqrt())
}

#[inline]
pub(crate) fn elliptic_sq_distance(x: &[f64], y: &[f64], p: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(p)
        .map(|((a, b), w)| {
            let d = a - b;
            w * d * d
        })
        .sum()
}

/// `d^l` for the elliptic distance and its backward pass.
///
/// Accumulates `upstream * dD/dx` into `gx`, `upstream * dD/dy` into `gy` and
/// `upstream * dD/dp` into `gp`. Returns the value `D`.
pub fn elliptic_term_backward(
    x: &[f64],
    y: &[f64],
    p: &[f64],
    norm: u32,
    upstream: f64,
    gx: &mut [f64],
    gy: &mut [f64],
    gp: &mut [f64],
) -> f64 {
    let q = elliptic_sq_distance(x, y, p);
    let half = norm as f64 / 2.0;
    let value = if norm == 2 { q } else { q.powf(half) };
    let d_dq = match norm {
        2 => 1.0,
        _ if q <= 0.0 => 0.0,
        _ => half * q.powf(half - 1.0),
    };
    let s = upstream * d_dq;
    for i in 0..p.len() {
        let delta = x[i] - y[i];
        let gd = 2.0 * s * p[i] * delta;
        gx[i] += gd;
        gy[i] -= gd;
        gp[i] += s * delta * delta;
    }
    value
}

/// `d^l` for the elliptic distance.
#[inline]
pub fn elliptic_term(x: &[f64], y: &[f64], p: &[f64], norm: u32) -> f64 {
    let q = elliptic_sq_distance(x, y, p);
    if norm == 2 {
        q
    } else {
        q.powf(norm as f64 / 2.0)
    }
}

/// A point on the upper sheet of the hyperboloid `Q_beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicPoint {
    coords: Vec<f64>,
    beta: f64,
}

impl HyperbolicPoint {
    /// Validates membership within [`MEMBERSHIP_TOLERANCE`] and `x_1 > 0`.
    pub fn new(coords: Vec<f64>, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("curvature radius must be positive, got {beta}")));
        }
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        let residual = membership_residual(&coords, beta);
        if !(residual <= MEMBERSHIP_TOLERANCE) || !(coords[0] > 0.0) {
            return Err(Error::OffManifold { residual });
        }
        Ok(HyperbolicPoint { coords, beta })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// `|<x,x>_q + beta|` relative to the magnitude of the terms, `max(beta, x_1^2)`.
///
/// Evaluated after dividing by `x_1` so far-out points do not overflow.
pub fn membership_residual(x: &[f64], beta: f64) -> f64 {
    let x0 = x[0];
    if x0 * x0 <= beta || x0 == 0.0 {
        let q: f64 = -x0 * x0 + x[1..].iter().map(|v| v * v).sum::<f64>();
        return (q + beta).abs() / beta;
    }
    let spatial: f64 = x[1..].iter().map(|v| (v / x0) * (v / x0)).sum();
    (-1.0 + spatial + (beta / x0) / x0).abs()
}

/// Writes `g_beta(x)` into `out` (length `x.len() + 1`).
#[inline]
pub(crate) fn exp_map_into(x: &[f64], beta: f64, out: &mut [f64]) {
    let sb = beta.sqrt();
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = n / sb;
    let (ch, shc) = if s < 1e-7 {
        (1.0 + 0.5 * s * s, 1.0 + s * s / 6.0)
    } else {
        (s.cosh(), sinhc(s))
    };
    out[0] = sb * ch;
    for (o, v) in out[1..].iter_mut().zip(x) {
        *o = shc * v;
    }
}

/// Exponential map at the origin, `R^{k-1} -> Q_beta^k`.
pub fn exp_map(x: &[f64], beta: f64) -> Result<HyperbolicPoint> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("curvature radius must be positive, got {beta}")));
    }
    let mut out = vec![0.0; x.len() + 1];
    exp_map_into(x, beta, &mut out);
    Ok(HyperbolicPoint { coords: out, beta })
}

/// Backward pass of the exponential map. Accumulates into `gx`, returns `dL/dbeta`.
pub fn exp_map_backward(x: &[f64], beta: f64, g_out: &[f64], gx: &mut [f64]) -> f64 {
    let sb = beta.sqrt();
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = n / sb;
    let shc = sinhc(s);
    let h = cosh_minus_sinhc_over_sq(s);
    let g0 = g_out[0];
    let gr = &g_out[1..];
    let gr_x = dot(gr, x);
    let a = g0 * shc / sb + gr_x * h / beta;
    for i in 0..x.len() {
        gx[i] += a * x[i] + shc * gr[i];
    }
    (g0 * (s.cosh() - s * s.sinh()) - gr_x * h * s * s / sb) / (2.0 * sb)
}

/// Coefficient `c` with `sqrt(I + b b^T) = I + c b b^T`.
///
/// Equal to `(sqrt(1 + |b|^2) - 1) / |b|^2`; evaluated as `1 / (1 + sqrt(1 + |b|^2))`,
/// which has no singularity at `b = 0` (where it is 1/2).
#[inline]
pub fn boost_sqrt_coeff(b_sq: f64) -> f64 {
    1.0 / (1.0 + (1.0 + b_sq).sqrt())
}

/// Applies the boost `[[sqrt(|b|^2+1), b^T], [b, sqrt(I + b b^T)]]` in place.
#[inline]
pub(crate) fn boost_in_place(b: &[f64], x: &mut [f64]) {
    let b_sq = dot(b, b);
    let gamma = (1.0 + b_sq).sqrt();
    let c = boost_sqrt_coeff(b_sq);
    let x0 = x[0];
    let bx = dot(b, &x[1..]);
    x[0] = gamma * x0 + bx;
    let scale = x0 + c * bx;
    for (xi, bi) in x[1..].iter_mut().zip(b) {
        *xi += scale * bi;
    }
}

/// Boost applied to `x` (length `b.len() + 1`) in O(k).
pub fn boost_apply(b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len(b.len() + 1, x.len())?;
    let mut out = x.to_vec();
    boost_in_place(b, &mut out);
    Ok(out)
}

/// Backward pass of the boost. `grad` enters as the output gradient and leaves
/// as the input gradient; `gb` accumulates the gradient of `b`. `x` is the input.
pub fn boost_backward(b: &[f64], x: &[f64], grad: &mut [f64], gb: &mut [f64]) {
    let b_sq = dot(b, b);
    let gamma = (1.0 + b_sq).sqrt();
    let c = boost_sqrt_coeff(b_sq);
    let dc = -1.0 / (gamma * (1.0 + gamma) * (1.0 + gamma));
    let x0 = x[0];
    let xs = &x[1..];
    let bx = dot(b, xs);
    let g0 = grad[0];
    let b_gs = dot(b, &grad[1..]);
    for i in 0..b.len() {
        let gs = grad[i + 1];
        gb[i] += g0 * (x0 * b[i] / gamma + xs[i])
            + x0 * gs
            + c * (b_gs * xs[i] + bx * gs)
            + b_gs * bx * dc * b[i];
    }
    grad[0] = gamma * g0 + b_gs;
    let scale = g0 + c * b_gs;
    for (gi, bi) in grad[1..].iter_mut().zip(b) {
        *gi += scale * bi;
    }
}

/// Materialized boost using the closed-form square root.
pub fn boost_matrix(b: &[f64]) -> DMatrix<f64> {
    let k = b.len() + 1;
    let b_sq = dot(b, b);
    let gamma = (1.0 + b_sq).sqrt();
    let c = boost_sqrt_coeff(b_sq);
    DMatrix::from_fn(k, k, |i, j| match (i, j) {
        (0, 0) => gamma,
        (0, j) => b[j - 1],
        (i, 0) => b[i - 1],
        (i, j) => (if i == j { 1.0 } else { 0.0 }) + c * b[i - 1] * b[j - 1],
    })
}

/// The same boost in velocity form `[[g, -g v^T], [-g v, I + g^2/(1+g) v v^T]]`
/// with `g = sqrt(1 + |b|^2)` and `v = -b / g`.
pub fn boost_matrix_velocity_form(b: &[f64]) -> DMatrix<f64> {
    let k = b.len() + 1;
    let gamma = (1.0 + dot(b, b)).sqrt();
    let v: Vec<f64> = b.iter().map(|bi| -bi / gamma).collect();
    let c = gamma * gamma / (1.0 + gamma);
    DMatrix::from_fn(k, k, |i, j| match (i, j) {
        (0, 0) => gamma,
        (0, j) => -gamma * v[j - 1],
        (i, 0) => -gamma * v[i - 1],
        (i, j) => (if i == j { 1.0 } else { 0.0 }) + c * v[i - 1] * v[j - 1],
    })
}

/// `I + c b b^T`, the closed-form `sqrt(I + b b^T)`.
pub fn boost_sqrt_matrix(b: &[f64]) -> DMatrix<f64> {
    let n = b.len();
    let c = boost_sqrt_coeff(dot(b, b));
    DMatrix::from_fn(n, n, |i, j| (if i == j { 1.0 } else { 0.0 }) + c * b[i] * b[j])
}

/// Boost followed by the spatial rotation `Orth(U, 1)`, in place on ambient `x`.
#[inline]
pub(crate) fn hyperbolic_transform_in_place(refl: Reflectors<'_>, b: &[f64], ones: &[f64], x: &mut [f64]) {
    boost_in_place(b, x);
    orth_apply_in_place(refl, ones, &mut x[1..]);
}

/// Inverse of [`hyperbolic_transform_in_place`]: undo the rotation, then boost by `-b`.
#[inline]
pub(crate) fn hyperbolic_inverse_in_place(refl: Reflectors<'_>, b: &[f64], ones: &[f64], x: &mut [f64]) {
    geometry::orth_apply_inverse_in_place(refl, ones, &mut x[1..]);
    let neg: Vec<f64> = b.iter().map(|v| -v).collect();
    boost_in_place(&neg, x);
}

/// `Orth_Q(U, b) x`: boost, then rotate the spatial coordinates.
pub fn hyperbolic_orth_apply(refl: Reflectors<'_>, b: &[f64], x: &HyperbolicPoint) -> Result<HyperbolicPoint> {
    let k = x.coords.len();
    check_len(k - 1, refl.dim())?;
    check_len(k - 1, b.len())?;
    if refl.rows() > refl.dim() {
        return Err(Error::Domain("more reflector rows than spatial dimensions".into()));
    }
    let residual = membership_residual(&x.coords, x.beta);
    if !(residual <= MEMBERSHIP_TOLERANCE) || !(x.coords[0] > 0.0) {
        return Err(Error::OffManifold { residual });
    }
    let ones = vec![1.0; k - 1];
    let mut out = x.coords.clone();
    hyperbolic_transform_in_place(refl, b, &ones, &mut out);
    Ok(HyperbolicPoint {
        coords: out,
        beta: x.beta,
    })
}

/// Materialized `[[1, 0], [0, Orth(U, 1)]] * Boost(b)`.
pub fn hyperbolic_orth_matrix(refl: Reflectors<'_>, b: &[f64]) -> Result<DMatrix<f64>> {
    let n = b.len();
    check_len(n, refl.dim())?;
    let rot = geometry::orth_matrix(refl, &vec![1.0; n])?;
    let mut block = DMatrix::<f64>::zeros(n + 1, n + 1);
    block[(0, 0)] = 1.0;
    block.view_mut((1, 1), (n, n)).copy_from(&rot);
    Ok(block * boost_matrix(b))
}

/// `sqrt(beta) * arccosh(-<x,y>_q / beta)` on raw coordinates.
#[inline]
pub fn geodesic_distance(x: &[f64], y: &[f64], beta: f64) -> f64 {
    let z = -lorentz_dot(x, y) / beta;
    beta.sqrt() * acosh_clamped(z)
}

#[inline]
pub(crate) fn lorentz_dot(x: &[f64], y: &[f64]) -> f64 {
    -x[0] * y[0] + dot(&x[1..], &y[1..])
}

/// Geodesic distance between two points on the same hyperboloid.
pub fn hyperbolic_distance(x: &HyperbolicPoint, y: &HyperbolicPoint) -> Result<f64> {
    check_len(x.coords.len(), y.coords.len())?;
    if x.beta != y.beta {
        return Err(Error::Domain(format!(
            "points lie on different hyperboloids (beta {} vs {})",
            x.beta, y.beta
        )));
    }
    Ok(geodesic_distance(&x.coords, &y.coords, x.beta))
}

/// `d^l` for the geodesic distance.
#[inline]
pub fn geodesic_term(x: &[f64], y: &[f64], beta: f64, norm: u32) -> f64 {
    let d = geodesic_distance(x, y, beta);
    match norm {
        1 => d,
        2 => d * d,
        l => d.powi(l as i32),
    }
}

/// Backward pass of [`geodesic_term`]. Accumulates into `gx`, `gy`; returns the
/// explicit `dL/dbeta` (holding the points fixed).
pub fn geodesic_term_backward(
    x: &[f64],
    y: &[f64],
    beta: f64,
    norm: u32,
    upstream: f64,
    gx: &mut [f64],
    gy: &mut [f64],
) -> f64 {
    let z = -lorentz_dot(x, y) / beta;
    let a = acosh_clamped(z);
    let l = norm as f64;
    // dD/dz where D = (sqrt(beta) * a)^l
    let d_dz = match norm {
        1 => {
            if a > 0.0 {
                beta.sqrt() / (z * z - 1.0).sqrt()
            } else {
                0.0
            }
        }
        _ => l * beta.powf(l / 2.0) * a.powi(norm as i32 - 2) * acosh_over_sinh(z),
    };
    let s = upstream * d_dz / beta;
    // dz/dx = -(q . y) / beta
    gx[0] += s * y[0];
    gy[0] += s * x[0];
    for i in 1..x.len() {
        gx[i] -= s * y[i];
        gy[i] -= s * x[i];
    }
    let d_dbeta = (l / 2.0) * beta.powf(l / 2.0 - 1.0) * a.powi(norm as i32);
    upstream * (d_dbeta - d_dz * z / beta)
}

/// Convenience: `<x, x>_q`.
pub fn lorentz_norm_sq(x: &[f64]) -> f64 {
    let q = Weights::lorentz(x.len());
    wdot(x, x, &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ReflectorSet;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn elliptic_distance_examples() {
        assert_eq!(elliptic_distance(&[1.0, 2.0], &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(elliptic_distance(&[3.0, 0.0], &[0.0, 4.0], &[1.0, 1.0]).unwrap(), 5.0);
        assert_eq!(elliptic_distance(&[1.0, 0.0], &[0.0, 0.0], &[4.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn elliptic_transform_identity_rows() {
        let id = ReflectorSet::identity(3, 3);
        let e = [0.3, -0.4, 1.2];
        let out = elliptic_transform(id.view(), &EllipticWeights::ones(3), &e).unwrap();
        assert_eq!(out, e.to_vec());
    }

    #[test]
    fn exp_map_examples() {
        let g = exp_map(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(g.coords(), &[1.0, 0.0, 0.0]);
        let s: f64 = 0.8;
        let g = exp_map(&[s, 0.0, 0.0], 1.0).unwrap();
        assert!(close(g.coords(), &[s.cosh(), s.sinh(), 0.0, 0.0], 1e-15));
        assert!(exp_map(&[1.0], 0.0).is_err());
        assert!(exp_map(&[1.0], -1.0).is_err());
    }

    #[test]
    fn boost_zero_is_identity() {
        let x = [1.3, 0.2, -0.5];
        assert_eq!(boost_apply(&[0.0, 0.0], &x).unwrap(), x.to_vec());
        assert!(boost_apply(&[0.0], &x).is_err());
    }

    #[test]
    fn hyperbolic_distance_examples() {
        let x = HyperbolicPoint::new(vec![1.0, 0.0], 1.0).unwrap();
        let y = HyperbolicPoint::new(vec![1f64.cosh(), 1f64.sinh()], 1.0).unwrap();
        assert_eq!(hyperbolic_distance(&x, &x).unwrap(), 0.0);
        assert!((hyperbolic_distance(&x, &y).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(hyperbolic_distance(&x, &y).unwrap(), hyperbolic_distance(&y, &x).unwrap());
        let other = exp_map(&[0.0], 2.0).unwrap();
        assert!(hyperbolic_distance(&x, &other).is_err());
    }

    #[test]
    fn off_manifold_points_are_rejected() {
        assert!(matches!(
            HyperbolicPoint::new(vec![2.0, 0.0], 1.0),
            Err(Error::OffManifold { .. })
        ));
        assert!(HyperbolicPoint::new(vec![-1.0, 0.0], 1.0).is_err());
        let refl = ReflectorSet::identity(1, 1);
        let p = HyperbolicPoint {
            coords: vec![3.0, 0.0],
            beta: 1.0,
        };
        assert!(hyperbolic_orth_apply(refl.view(), &[0.0], &p).is_err());
    }

    #[test]
    fn identity_hyperbolic_transform() {
        let x = exp_map(&[0.4, -0.3], 1.5).unwrap();
        let id = ReflectorSet::identity(2, 2);
        let y = hyperbolic_orth_apply(id.view(), &[0.0, 0.0], &x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn inverse_hyperbolic_transform() {
        let set = ReflectorSet::from_rows(&[vec![0.3, 1.0], vec![-0.8, 0.2]]).unwrap();
        let b = [0.7, -1.1];
        let x = exp_map(&[0.4, -0.3], 1.5).unwrap();
        let ones = [1.0, 1.0];
        let mut y = x.coords().to_vec();
        hyperbolic_transform_in_place(set.view(), &b, &ones, &mut y);
        hyperbolic_inverse_in_place(set.view(), &b, &ones, &mut y);
        assert!(close(&y, x.coords(), 1e-13));
    }

    #[test]
    fn membership_residual_handles_far_points() {
        let g = exp_map(&[50.0, 0.0], 1e-2).unwrap();
        assert!(g.coords()[0].is_finite());
        assert!(membership_residual(g.coords(), 1e-2) <= 1e-9);
    }
}
