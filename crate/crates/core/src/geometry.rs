//! Quadratic inner products and generalized Householder reflections.
//!
//! Everything here is parameterized by a weighting vector `w` with no zero
//! entries, which defines the bilinear form `<x, y>_w = sum_i w_i x_i y_i`.
//! `w = 1` gives the Euclidean form, a strictly positive `w` an elliptic one and
//! `w = (-1, 1, ..., 1)` the Lorentz form of the hyperboloid model.
//!
//! A reflector set `U` with rows `u_1 .. u_n` denotes the product
//! `H(u_n, w) ... H(u_1, w)`: when acting on a vector, `u_1` is applied first.
//! Rows whose self inner product is below [`isotropy_threshold`] are treated as
//! the identity.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// Rows with `|<u,u>_w|` below this value are skipped as identity reflections.
#[inline]
pub fn isotropy_threshold(dim: usize) -> f64 {
    1e-12 * dim as f64
}

/// A validated weighting vector (every entry nonzero).
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Domain("empty weighting vector".into()));
        }
        if let Some(i) = w.iter().position(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "weighting vector entry {i} is {}; entries must be finite and nonzero",
                w[i]
            )));
        }
        Ok(Weights(w))
    }

    pub fn euclidean(dim: usize) -> Self {
        Weights(vec![1.0; dim])
    }

    /// Lorentz signature `(-1, 1, ..., 1)`.
    pub fn lorentz(dim: usize) -> Self {
        let mut w = vec![1.0; dim];
        w[0] = -1.0;
        Weights(w)
    }

    /// Strictly positive weights.
    pub fn elliptic(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&v| v <= 0.0) {
            return Err(Error::Domain("elliptic weights must be strictly positive".into()));
        }
        Weights::new(p)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Weights {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Borrowed view over `rows` reflector vectors of length `dim`, stored row-major.
#[derive(Debug, Clone, Copy)]
pub struct Reflectors<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> Reflectors<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Domain(format!(
                "{} reflector entries do not form rows of length {dim}",
                data.len()
            )));
        }
        Ok(Reflectors { data, dim })
    }

    #[inline]
    pub(crate) fn new_unchecked(data: &'a [f64], dim: usize) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0);
        Reflectors { data, dim }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn row(&self, c: usize) -> &'a [f64] {
        &self.data[c * self.dim..(c + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }
}

/// Owned reflector rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorSet {
    data: Vec<f64>,
    dim: usize,
}

impl ReflectorSet {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Domain("reflector set needs at least one non-empty row".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            check_len(dim, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(ReflectorSet { data, dim })
    }

    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        Reflectors::new(&data, dim)?;
        Ok(ReflectorSet { data, dim })
    }

    /// `rows` identity-flagged (all-zero) rows.
    pub fn identity(rows: usize, dim: usize) -> Self {
        ReflectorSet {
            data: vec![0.0; rows * dim],
            dim,
        }
    }

    pub fn view(&self) -> Reflectors<'_> {
        Reflectors::new_unchecked(&self.data, self.dim)
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.dim..(c + 1) * self.dim]
    }

    /// Whether row `c` is skipped during application for weights `w`.
    pub fn is_identity_row(&self, c: usize, w: &[f64]) -> bool {
        let u = self.row(c);
        wdot(u, u, w).abs() < isotropy_threshold(self.dim)
    }
}

#[inline]
pub(crate) fn wdot(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((a, b), c)| a * b * c)
        .sum()
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `<x, y>_w`.
pub fn quad_inner(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64> {
    check_len(w.len(), x.len())?;
    check_len(w.len(), y.len())?;
    Ok(wdot(x, y, w))
}

/// Reflects `x` in place about the `w`-orthogonal complement of `u`.
/// Returns `false` (leaving `x` untouched) when `u` is below the isotropy threshold.
#[inline]
pub(crate) fn reflect_in_place(u: &[f64], w: &[f64], x: &mut [f64]) -> bool {
    let uu = wdot(u, u, w);
    if uu.abs() < isotropy_threshold(u.len()) {
        return false;
    }
    let coef = 2.0 * wdot(u, x, w) / uu;
    for (xi, ui) in x.iter_mut().zip(u) {
        *xi -= coef * ui;
    }
    true
}

/// `H(u, w) x = x - 2 <u,x>_w / <u,u>_w * u`, in O(k).
pub fn householder_apply(u: &[f64], w: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len(w.len(), u.len())?;
    check_len(w.len(), x.len())?;
    let mut out = x.to_vec();
    if !reflect_in_place(u, w, &mut out) {
        return Err(Error::DegenerateReflector {
            self_inner: wdot(u, u, w),
        });
    }
    Ok(out)
}

/// Applies `H(u_n) ... H(u_1)` to `x` in place (row 0 first).
pub fn orth_apply_in_place(refl: Reflectors<'_>, w: &[f64], x: &mut [f64]) {
    for c in 0..refl.rows() {
        reflect_in_place(refl.row(c), w, x);
    }
}

/// Applies the inverse product `H(u_1) ... H(u_n)` to `x` in place (last row first).
pub fn orth_apply_inverse_in_place(refl: Reflectors<'_>, w: &[f64], x: &mut [f64]) {
    for c in (0..refl.rows()).rev() {
        reflect_in_place(refl.row(c), w, x);
    }
}

fn check_orth_dims(refl: Reflectors<'_>, w: &[f64]) -> Result<()> {
    check_len(w.len(), refl.dim())?;
    if refl.rows() > refl.dim() {
        return Err(Error::Domain(format!(
            "{} reflector rows exceed dimension {}",
            refl.rows(),
            refl.dim()
        )));
    }
    Ok(())
}

/// `Orth(U, w) x` via sequential reflections.
pub fn orth_apply(refl: Reflectors<'_>, w: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_orth_dims(refl, w)?;
    check_len(w.len(), x.len())?;
    let mut out = x.to_vec();
    orth_apply_in_place(refl, w, &mut out);
    Ok(out)
}

/// Materializes `Orth(U, w)` as a dense `k x k` matrix.
pub fn orth_matrix(refl: Reflectors<'_>, w: &[f64]) -> Result<DMatrix<f64>> {
    check_orth_dims(refl, w)?;
    let k = w.len();
    let mut g = DMatrix::<f64>::identity(k, k);
    for c in 0..refl.rows() {
        let u = refl.row(c);
        let uu = wdot(u, u, w);
        if uu.abs() < isotropy_threshold(k) {
            continue;
        }
        // H g = g - (2/uu) u (u^T W g), a rank-one update
        let coef = 2.0 / uu;
        for j in 0..k {
            let col = g.column(j);
            let proj: f64 = (0..k).map(|i| u[i] * w[i] * col[i]).sum::<f64>() * coef;
            let mut col = g.column_mut(j);
            for i in 0..k {
                col[i] -= proj * u[i];
            }
        }
    }
    Ok(g)
}

fn householder_matrix_unchecked(u: &[f64], w: &[f64], uu: f64) -> DMatrix<f64> {
    let k = u.len();
    DMatrix::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - 2.0 * u[i] * u[j] * w[j] / uu
    })
}

/// Materialized `H(u, w)`.
pub fn householder_matrix(u: &[f64], w: &[f64]) -> Result<DMatrix<f64>> {
    check_len(w.len(), u.len())?;
    let uu = wdot(u, u, w);
    if uu.abs() < isotropy_threshold(u.len()) {
        return Err(Error::DegenerateReflector { self_inner: uu });
    }
    Ok(householder_matrix_unchecked(u, w, uu))
}

/// Max-abs entry of `G^T diag(w) G - diag(w)`.
pub fn orthogonality_defect(g: &DMatrix<f64>, w: &[f64]) -> Result<f64> {
    let k = w.len();
    if g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch {
            expected: g.nrows(),
            got: g.ncols(),
        });
    }
    check_len(k, g.nrows())?;
    let mut defect = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for l in 0..k {
                s += g[(l, i)] * w[l] * g[(l, j)];
            }
            if i == j {
                s -= w[i];
            }
            defect = defect.max(s.abs());
        }
    }
    Ok(defect)
}

/// Tolerance on the orthogonality defect accepted by [`decompose_orthogonal`].
pub const DECOMPOSE_TOLERANCE: f64 = 1e-8;

/// Factors a `w`-orthogonal matrix into at most `k` reflections.
///
/// Sweeps the basis vectors `e_j`. When the running matrix `M` already fixes
/// `e_j` nothing is recorded; otherwise `u = M e_j - e_j` is anisotropic (the
/// form is positive definite) and `H(u) M` fixes `e_j` as well as every basis
/// vector fixed before. After the sweep `H(u_m) ... H(u_1) G = I`, so the rows
/// are returned in reverse recording order, padded with identity rows to `k`.
///
/// Only positive-definite `w` is supported.
pub fn decompose_orthogonal(g: &DMatrix<f64>, w: &[f64]) -> Result<ReflectorSet> {
    let k = w.len();
    if w.iter().any(|&v| v <= 0.0) {
        return Err(Error::UnsupportedSignature(
            "decomposition requires strictly positive weights".into(),
        ));
    }
    let defect = orthogonality_defect(g, w)?;
    let scale = w.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    if defect > DECOMPOSE_TOLERANCE * scale {
        return Err(Error::NotOrthogonal { defect });
    }

    let mut m = g.clone();
    let mut recorded: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut u: Vec<f64> = (0..k).map(|i| m[(i, j)]).collect();
        u[j] -= 1.0;
        let norm = wdot(&u, &u, w).sqrt();
        if norm <= 1e-12 * w[j].sqrt() {
            continue;
        }
        u.iter_mut().for_each(|v| *v /= norm);
        let h = householder_matrix_unchecked(&u, w, 1.0);
        m = h * m;
        recorded.push(u);
    }

    let mut data = Vec::with_capacity(k * k);
    for u in recorded.iter().rev() {
        data.extend_from_slice(u);
    }
    data.resize(k * k, 0.0);
    Ok(ReflectorSet { data, dim: k })
}

/// Intermediate vectors recorded by [`orth_forward_traced`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct OrthTrace {
    /// `inputs[c]` is the vector entering reflection `c`.
    inputs: Vec<f64>,
}

/// Forward `Orth(U, w) x`, keeping each reflection's input.
pub fn orth_forward_traced(refl: Reflectors<'_>, w: &[f64], x: &[f64]) -> (Vec<f64>, OrthTrace) {
    let mut inputs = vec![0.0; refl.rows() * refl.dim()];
    let mut cur = x.to_vec();
    orth_forward_into(refl, w, &mut cur, &mut inputs);
    (cur, OrthTrace { inputs })
}

/// In-place traced forward; `inputs` must hold `rows * dim` values.
pub(crate) fn orth_forward_into(refl: Reflectors<'_>, w: &[f64], x: &mut [f64], inputs: &mut [f64]) {
    let k = refl.dim();
    for c in 0..refl.rows() {
        inputs[c * k..(c + 1) * k].copy_from_slice(x);
        reflect_in_place(refl.row(c), w, x);
    }
}

/// Backward pass of [`orth_forward_traced`].
///
/// Takes the upstream gradient `grad` of the output and overwrites it with the
/// gradient of the input. Row gradients are accumulated into `grad_rows`
/// (same layout as the reflector data); weight gradients into `grad_w` when given.
pub fn orth_backward(
    refl: Reflectors<'_>,
    w: &[f64],
    trace: &OrthTrace,
    grad: &mut [f64],
    grad_rows: &mut [f64],
    grad_w: Option<&mut [f64]>,
) {
    orth_backward_inputs(refl, w, &trace.inputs, grad, grad_rows, grad_w);
}

pub(crate) fn orth_backward_inputs(
    refl: Reflectors<'_>,
    w: &[f64],
    inputs: &[f64],
    grad: &mut [f64],
    grad_rows: &mut [f64],
    mut grad_w: Option<&mut [f64]>,
) {
    let k = refl.dim();
    let tau = isotropy_threshold(k);
    for c in (0..refl.rows()).rev() {
        let u = refl.row(c);
        let x = &inputs[c * k..(c + 1) * k];
        let uu = wdot(u, u, w);
        if uu.abs() < tau {
            continue;
        }
        let ux = wdot(u, x, w);
        let coef = ux / uu;
        let m = dot(grad, u);
        let gu = &mut grad_rows[c * k..(c + 1) * k];
        // y = x - 2 coef u, coef = <u,x>_w / <u,u>_w
        for i in 0..k {
            let dcoef_du = w[i] * x[i] / uu - 2.0 * ux * w[i] * u[i] / (uu * uu);
            gu[i] += -2.0 * coef * grad[i] - 2.0 * m * dcoef_du;
        }
        if let Some(gw) = grad_w.as_deref_mut() {
            for i in 0..k {
                let dcoef_dw = u[i] * x[i] / uu - ux * u[i] * u[i] / (uu * uu);
                gw[i] += -2.0 * m * dcoef_dw;
            }
        }
        for i in 0..k {
            grad[i] -= 2.0 * m * w[i] * u[i] / uu;
        }
    }
}
