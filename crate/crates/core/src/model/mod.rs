//! Parameter store and scoring function on a product manifold.
//!
//! All parameters live in one flat `Vec<f64>`: the entity table (row-major,
//! `num_entities x stored_dim`) followed by one block per relation. A relation
//! block holds, for each component in order:
//!
//! * elliptic `P_k`: reflector rows `k x k`, raw elliptic weights `k`;
//! * hyperbolic `Q_k`: reflector rows `(k-1) x (k-1)`, boost `k-1`, raw curvature `1`.
//!
//! Elliptic weights and curvature radii are stored unconstrained and mapped
//! through `softplus(raw) + floor`. Heads are transformed; tails are only
//! associated with the relation's space (identity for elliptic components, the
//! exponential map with the relation's curvature for hyperbolic ones).

pub mod checkpoint;
pub mod config;
pub mod diagnostics;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use config::{ComponentSpec, Geometry, ManifoldConfig};

use crate::error::{Error, Result};
use crate::geometry::{orth_apply_in_place, orth_apply_inverse_in_place, orth_backward_inputs, orth_forward_into, Reflectors};
use crate::manifolds::{
    boost_backward, boost_in_place, curvature, elliptic_term, elliptic_term_backward, elliptic_weight, exp_map_backward,
    exp_map_into, geodesic_term, geodesic_term_backward, hyperbolic_inverse_in_place, hyperbolic_transform_in_place,
    CURVATURE_FLOOR, ELLIPTIC_FLOOR,
};
use crate::numeric::{raw_for_positive, sigmoid};

/// Storage precision of the parameters. Computation is always double precision;
/// `F32` rounds parameters to single precision after every update and on save.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::Config(format!("unknown precision `{other}` (expected f32 or f64)"))),
        }
    }
}

/// Kind of scalar at a given flat parameter index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamClass {
    Entity,
    Reflector,
    EllipticWeight,
    Boost,
    Curvature,
}

impl ParamClass {
    pub const ALL: [ParamClass; 5] = [
        ParamClass::Entity,
        ParamClass::Reflector,
        ParamClass::EllipticWeight,
        ParamClass::Boost,
        ParamClass::Curvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamClass::Entity => "entity",
            ParamClass::Reflector => "reflector",
            ParamClass::EllipticWeight => "elliptic-weight-raw",
            ParamClass::Boost => "boost",
            ParamClass::Curvature => "curvature-raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ComponentLayout {
    spec: ComponentSpec,
    /// Offset of this component's coordinates inside an entity row.
    entity_offset: usize,
    /// Offset of this component's parameters inside a relation block.
    relation_offset: usize,
}

impl ComponentLayout {
    fn n(&self) -> usize {
        self.spec.reflector_dim()
    }
}

/// Borrowed parameters of one relation in one component.
#[derive(Debug, Clone, Copy)]
pub enum ComponentParams<'a> {
    Elliptic {
        reflectors: Reflectors<'a>,
        weight_raw: &'a [f64],
    },
    Hyperbolic {
        reflectors: Reflectors<'a>,
        boost: &'a [f64],
        curvature_raw: f64,
    },
}

/// Entity table plus per-relation transform parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ManifoldConfig,
    layouts: Vec<ComponentLayout>,
    num_entities: usize,
    num_relations: usize,
    precision: Precision,
    params: Vec<f64>,
}

impl Model {
    /// Parameters with every relation at the identity transform and zero entities.
    pub fn zeros(config: ManifoldConfig, num_entities: usize, num_relations: usize) -> Self {
        let len = num_entities * config.stored_dim() + num_relations * config.relation_param_len();
        let mut model = Model {
            layouts: layouts_of(&config),
            config,
            num_entities,
            num_relations,
            precision: Precision::F64,
            params: vec![0.0; len],
        };
        let p_raw = raw_for_positive(1.0, ELLIPTIC_FLOOR);
        let beta_raw = raw_for_positive(1.0, CURVATURE_FLOOR);
        for r in 0..num_relations {
            for i in 0..model.layouts.len() {
                let lay = model.layouts[i].clone();
                let n = lay.n();
                let block = model.component_slice_mut(r, i);
                match lay.spec.geometry {
                    Geometry::Elliptic => block[n * n..].fill(p_raw),
                    Geometry::Hyperbolic => block[n * n + n] = beta_raw,
                }
            }
        }
        model
    }

    /// Seeded initialization: entities uniform in `(-0.5, 0.5) / sqrt(k)`, reflector
    /// rows standard normal, `p = 1`, `b = 0`, `beta = 1`.
    pub fn init(config: ManifoldConfig, num_entities: usize, num_relations: usize, seed: u64) -> Self {
        let mut model = Model::zeros(config, num_entities, num_relations);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = model.config.stored_dim();
        let scale = 1.0 / (dim as f64).sqrt();
        for v in &mut model.params[..num_entities * dim] {
            *v = (rng.random::<f64>() - 0.5) * scale;
        }
        for r in 0..num_relations {
            for i in 0..model.layouts.len() {
                let n = model.layouts[i].n();
                let block = model.component_slice_mut(r, i);
                for v in &mut block[..n * n] {
                    *v = rng.sample(StandardNormal);
                }
            }
        }
        model
    }

    pub fn config(&self) -> &ManifoldConfig {
        &self.config
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn set_precision(&mut self, precision: Precision) {
        self.precision = precision;
        self.round_to_precision();
    }

    /// Rounds every parameter to the storage precision.
    pub fn round_to_precision(&mut self) {
        if self.precision == Precision::F32 {
            for v in &mut self.params {
                *v = *v as f32 as f64;
            }
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn from_parts(
        config: ManifoldConfig,
        num_entities: usize,
        num_relations: usize,
        precision: Precision,
        params: Vec<f64>,
    ) -> Result<Self> {
        let expected = num_entities * config.stored_dim() + num_relations * config.relation_param_len();
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Model {
            layouts: layouts_of(&config),
            config,
            num_entities,
            num_relations,
            precision,
            params,
        })
    }

    fn entity_table_len(&self) -> usize {
        self.num_entities * self.config.stored_dim()
    }

    /// Flat index where relation `r`'s block starts.
    pub fn relation_offset(&self, r: usize) -> usize {
        self.entity_table_len() + r * self.config.relation_param_len()
    }

    pub fn entity(&self, e: usize) -> &[f64] {
        let d = self.config.stored_dim();
        &self.params[e * d..(e + 1) * d]
    }

    pub fn entity_mut(&mut self, e: usize) -> &mut [f64] {
        let d = self.config.stored_dim();
        &mut self.params[e * d..(e + 1) * d]
    }

    pub fn relation_block(&self, r: usize) -> &[f64] {
        let start = self.relation_offset(r);
        &self.params[start..start + self.config.relation_param_len()]
    }

    fn component_range(&self, r: usize, i: usize) -> std::ops::Range<usize> {
        let lay = &self.layouts[i];
        let start = self.relation_offset(r) + lay.relation_offset;
        start..start + lay.spec.relation_param_len()
    }

    /// Raw parameter slice of relation `r`, component `i` (layout in the module docs).
    pub fn component_slice_mut(&mut self, r: usize, i: usize) -> &mut [f64] {
        let range = self.component_range(r, i);
        &mut self.params[range]
    }

    pub fn component(&self, r: usize, i: usize) -> ComponentParams<'_> {
        let spec = self.config.components()[i];
        let block = &self.params[self.component_range(r, i)];
        component_view(spec, block)
    }

    /// Reparameterized elliptic weights `p_r` of component `i`.
    pub fn elliptic_weights(&self, r: usize, i: usize) -> Option<Vec<f64>> {
        match self.component(r, i) {
            ComponentParams::Elliptic { weight_raw, .. } => Some(weight_raw.iter().map(|&v| elliptic_weight(v)).collect()),
            ComponentParams::Hyperbolic { .. } => None,
        }
    }

    /// Reparameterized curvature radius `beta_r` of component `i`.
    pub fn curvature(&self, r: usize, i: usize) -> Option<f64> {
        match self.component(r, i) {
            ComponentParams::Hyperbolic { curvature_raw, .. } => Some(curvature(curvature_raw)),
            ComponentParams::Elliptic { .. } => None,
        }
    }

    pub fn set_reflectors(&mut self, r: usize, i: usize, rows: &[f64]) -> Result<()> {
        let n = self.config.components()[i].reflector_dim();
        crate::error::check_len(n * n, rows.len())?;
        self.component_slice_mut(r, i)[..n * n].copy_from_slice(rows);
        Ok(())
    }

    pub fn set_elliptic_weights(&mut self, r: usize, i: usize, p: &[f64]) -> Result<()> {
        let spec = self.config.components()[i];
        if spec.geometry != Geometry::Elliptic {
            return Err(Error::Config(format!("component {i} is not elliptic")));
        }
        let n = spec.reflector_dim();
        crate::error::check_len(n, p.len())?;
        if p.iter().any(|&v| !(v > ELLIPTIC_FLOOR)) {
            return Err(Error::Domain(format!("elliptic weights must exceed {ELLIPTIC_FLOOR:e}")));
        }
        let block = self.component_slice_mut(r, i);
        for (dst, &v) in block[n * n..].iter_mut().zip(p) {
            *dst = raw_for_positive(v, ELLIPTIC_FLOOR);
        }
        Ok(())
    }

    pub fn set_boost(&mut self, r: usize, i: usize, b: &[f64]) -> Result<()> {
        let spec = self.config.components()[i];
        if spec.geometry != Geometry::Hyperbolic {
            return Err(Error::Config(format!("component {i} is not hyperbolic")));
        }
        let n = spec.reflector_dim();
        crate::error::check_len(n, b.len())?;
        self.component_slice_mut(r, i)[n * n..n * n + n].copy_from_slice(b);
        Ok(())
    }

    pub fn set_curvature(&mut self, r: usize, i: usize, beta: f64) -> Result<()> {
        let spec = self.config.components()[i];
        if spec.geometry != Geometry::Hyperbolic {
            return Err(Error::Config(format!("component {i} is not hyperbolic")));
        }
        if !(beta > CURVATURE_FLOOR) {
            return Err(Error::Domain(format!("curvature must exceed {CURVATURE_FLOOR:e}")));
        }
        let n = spec.reflector_dim();
        self.component_slice_mut(r, i)[n * n + n] = raw_for_positive(beta, CURVATURE_FLOOR);
        Ok(())
    }

    pub fn check_entity(&self, e: usize) -> Result<()> {
        if e < self.num_entities {
            Ok(())
        } else {
            Err(Error::IdOutOfRange {
                kind: "entity",
                id: e,
                bound: self.num_entities,
            })
        }
    }

    pub fn check_relation(&self, r: usize) -> Result<()> {
        if r < self.num_relations {
            Ok(())
        } else {
            Err(Error::IdOutOfRange {
                kind: "relation",
                id: r,
                bound: self.num_relations,
            })
        }
    }

    /// Transformed head, one vector per component (ambient coordinates for hyperbolic ones).
    pub fn transform_head(&self, h: usize, r: usize) -> Result<Vec<Vec<f64>>> {
        self.check_entity(h)?;
        self.check_relation(r)?;
        let eh = self.entity(h);
        Ok(self
            .layouts
            .iter()
            .enumerate()
            .map(|(i, lay)| {
                let sub = &eh[lay.entity_offset..lay.entity_offset + lay.spec.stored_dim()];
                let mut out = self.associate_component(sub, r, i);
                self.transform_component_in_place(r, i, &mut out);
                out
            })
            .collect())
    }

    /// Relation-specific embedding of an entity, one vector per component.
    pub fn associate(&self, e: usize, r: usize) -> Result<Vec<Vec<f64>>> {
        self.check_entity(e)?;
        self.check_relation(r)?;
        let ev = self.entity(e);
        Ok(self
            .layouts
            .iter()
            .enumerate()
            .map(|(i, lay)| self.associate_component(&ev[lay.entity_offset..lay.entity_offset + lay.spec.stored_dim()], r, i))
            .collect())
    }

    fn associate_component(&self, sub: &[f64], r: usize, i: usize) -> Vec<f64> {
        match self.component(r, i) {
            ComponentParams::Elliptic { .. } => sub.to_vec(),
            ComponentParams::Hyperbolic { curvature_raw, .. } => {
                let mut out = vec![0.0; sub.len() + 1];
                exp_map_into(sub, curvature(curvature_raw), &mut out);
                out
            }
        }
    }

    fn transform_component_in_place(&self, r: usize, i: usize, x: &mut [f64]) {
        match self.component(r, i) {
            ComponentParams::Elliptic { reflectors, weight_raw } => {
                let p: Vec<f64> = weight_raw.iter().map(|&v| elliptic_weight(v)).collect();
                orth_apply_in_place(reflectors, &p, x);
            }
            ComponentParams::Hyperbolic { reflectors, boost, .. } => {
                let ones = vec![1.0; boost.len()];
                hyperbolic_transform_in_place(reflectors, boost, &ones, x);
            }
        }
    }

    /// Per-component terms `d_i^l` between transformed head and associated tail.
    pub fn component_terms(&self, h: usize, r: usize, t: usize) -> Result<Vec<f64>> {
        let heads = self.transform_head(h, r)?;
        let tails = self.associate(t, r)?;
        let norm = self.config.norm();
        Ok(heads
            .iter()
            .zip(&tails)
            .enumerate()
            .map(|(i, (x, y))| match self.component(r, i) {
                ComponentParams::Elliptic { weight_raw, .. } => {
                    let p: Vec<f64> = weight_raw.iter().map(|&v| elliptic_weight(v)).collect();
                    elliptic_term(x, y, &p, norm)
                }
                ComponentParams::Hyperbolic { curvature_raw, .. } => geodesic_term(x, y, curvature(curvature_raw), norm),
            })
            .collect())
    }

    /// `-sum_i d_i(head', tail)^l`; always `<= 0`.
    pub fn score(&self, h: usize, r: usize, t: usize) -> Result<f64> {
        self.check_entity(h)?;
        self.check_entity(t)?;
        self.check_relation(r)?;
        Ok(self.score_unchecked(h, r, t))
    }

    /// [`Model::score`] without id checks and with a single scratch allocation.
    pub(crate) fn score_unchecked(&self, h: usize, r: usize, t: usize) -> f64 {
        let norm = self.config.norm();
        let eh = self.entity(h);
        let et = self.entity(t);
        let width = self.layouts.iter().map(|l| l.spec.dim).max().unwrap_or(0);
        let mut scratch = vec![0.0; 3 * width];
        let (x, rest) = scratch.split_at_mut(width);
        let (y, w) = rest.split_at_mut(width);
        let mut total = 0.0;
        for (i, lay) in self.layouts.iter().enumerate() {
            let n = lay.n();
            let eo = lay.entity_offset;
            total += match self.component(r, i) {
                ComponentParams::Elliptic { reflectors, weight_raw } => {
                    let (x, w) = (&mut x[..n], &mut w[..n]);
                    for (wj, &raw) in w.iter_mut().zip(weight_raw) {
                        *wj = elliptic_weight(raw);
                    }
                    x.copy_from_slice(&eh[eo..eo + n]);
                    orth_apply_in_place(reflectors, w, x);
                    elliptic_term(x, &et[eo..eo + n], w, norm)
                }
                ComponentParams::Hyperbolic {
                    reflectors,
                    boost,
                    curvature_raw,
                } => {
                    let beta = curvature(curvature_raw);
                    let (x, y, w) = (&mut x[..n + 1], &mut y[..n + 1], &mut w[..n]);
                    w.fill(1.0);
                    exp_map_into(&eh[eo..eo + n], beta, x);
                    exp_map_into(&et[eo..eo + n], beta, y);
                    hyperbolic_transform_in_place(reflectors, boost, w, x);
                    geodesic_term(x, y, beta, norm)
                }
            };
        }
        -total
    }

    /// Scores `(h, r, e)` for every entity `e` into `out`.
    pub fn score_all_tails(&self, h: usize, r: usize, out: &mut [f64]) -> Result<()> {
        crate::error::check_len(self.num_entities, out.len())?;
        let heads = self.transform_head(h, r)?;
        self.score_against_all(r, &heads, out);
        Ok(())
    }

    /// Scores `(e, r, t)` for every entity `e` into `out`.
    ///
    /// The transforms preserve their form, so `d(G e, t) = d(e, G^-1 t)`: the
    /// tail is pulled back once instead of transforming every candidate head.
    pub fn score_all_heads(&self, r: usize, t: usize, out: &mut [f64]) -> Result<()> {
        crate::error::check_len(self.num_entities, out.len())?;
        let mut pulled = self.associate(t, r)?;
        for (i, y) in pulled.iter_mut().enumerate() {
            match self.component(r, i) {
                ComponentParams::Elliptic { reflectors, weight_raw } => {
                    let p: Vec<f64> = weight_raw.iter().map(|&v| elliptic_weight(v)).collect();
                    orth_apply_inverse_in_place(reflectors, &p, y);
                }
                ComponentParams::Hyperbolic { reflectors, boost, .. } => {
                    let ones = vec![1.0; boost.len()];
                    hyperbolic_inverse_in_place(reflectors, boost, &ones, y);
                }
            }
        }
        self.score_against_all(r, &pulled, out);
        Ok(())
    }

    /// `out[e] = -sum_i d_i(fixed_i, assoc_r(e)_i)^l`.
    fn score_against_all(&self, r: usize, fixed: &[Vec<f64>], out: &mut [f64]) {
        let norm = self.config.norm();
        let layouts = &self.layouts;
        let per_comp: Vec<(Option<Vec<f64>>, Option<f64>)> = (0..layouts.len())
            .map(|i| (self.elliptic_weights(r, i), self.curvature(r, i)))
            .collect();
        let mut buf = vec![0.0; layouts.iter().map(|l| l.spec.dim).max().unwrap_or(0)];
        for (e, slot) in out.iter_mut().enumerate() {
            let ev = self.entity(e);
            let mut total = 0.0;
            for (i, lay) in layouts.iter().enumerate() {
                let sub = &ev[lay.entity_offset..lay.entity_offset + lay.spec.stored_dim()];
                total += match &per_comp[i] {
                    (Some(p), _) => elliptic_term(&fixed[i], sub, p, norm),
                    (None, Some(beta)) => {
                        let y = &mut buf[..sub.len() + 1];
                        exp_map_into(sub, *beta, y);
                        geodesic_term(&fixed[i], y, *beta, norm)
                    }
                    (None, None) => unreachable!("component is neither elliptic nor hyperbolic"),
                };
            }
            *slot = -total;
        }
    }

    /// Score of `(h, r, t)` plus its gradient scaled by `upstream` (= dL/dscore),
    /// accumulated into `sink`. Ids are not range-checked.
    pub fn score_backward(&self, h: usize, r: usize, t: usize, upstream: f64, sink: &mut SparseGrad) -> f64 {
        let norm = self.config.norm();
        let g_term = -upstream;
        let eh = self.entity(h);
        let et = self.entity(t);
        let dim = self.config.stored_dim();
        let rel_len = self.config.relation_param_len();
        let width = self.layouts.iter().map(|l| l.spec.dim).max().unwrap_or(0);

        // one allocation: entity and relation gradients, then per-component scratch
        let mut buf = vec![0.0; 2 * dim + rel_len + width * width + 7 * width];
        let (g_h, rest) = buf.split_at_mut(dim);
        let (g_t, rest) = rest.split_at_mut(dim);
        let (g_rel, rest) = rest.split_at_mut(rel_len);
        let (inputs, rest) = rest.split_at_mut(width * width);
        let (xh, rest) = rest.split_at_mut(width);
        let (xt, rest) = rest.split_at_mut(width);
        let (y, rest) = rest.split_at_mut(width);
        let (gy, rest) = rest.split_at_mut(width);
        let (gxt, rest) = rest.split_at_mut(width);
        let (w, gp) = rest.split_at_mut(width);

        let mut total = 0.0;
        for (i, lay) in self.layouts.iter().enumerate() {
            let n = lay.n();
            let eo = lay.entity_offset;
            let sub_h = &eh[eo..eo + n];
            let sub_t = &et[eo..eo + n];
            let g_block = &mut g_rel[lay.relation_offset..lay.relation_offset + lay.spec.relation_param_len()];
            let (g_rows, g_rest) = g_block.split_at_mut(n * n);
            let inputs = &mut inputs[..n * n];
            match self.component(r, i) {
                ComponentParams::Elliptic { reflectors, weight_raw } => {
                    let (p, y, gy, gp) = (&mut w[..n], &mut y[..n], &mut gy[..n], &mut gp[..n]);
                    for (pj, &raw) in p.iter_mut().zip(weight_raw) {
                        *pj = elliptic_weight(raw);
                    }
                    y.copy_from_slice(sub_h);
                    orth_forward_into(reflectors, p, y, inputs);
                    gy.fill(0.0);
                    gp.fill(0.0);
                    total += elliptic_term_backward(y, sub_t, p, norm, g_term, gy, &mut g_t[eo..eo + n], gp);
                    orth_backward_inputs(reflectors, p, inputs, gy, g_rows, Some(gp));
                    for (dst, g) in g_h[eo..eo + n].iter_mut().zip(gy.iter()) {
                        *dst += g;
                    }
                    for j in 0..n {
                        g_rest[j] += gp[j] * sigmoid(weight_raw[j]);
                    }
                }
                ComponentParams::Hyperbolic {
                    reflectors,
                    boost,
                    curvature_raw,
                } => {
                    let beta = curvature(curvature_raw);
                    let ones = &mut w[..n];
                    ones.fill(1.0);
                    let (xh, xt, y) = (&mut xh[..n + 1], &mut xt[..n + 1], &mut y[..n + 1]);
                    let (gy, gxt) = (&mut gy[..n + 1], &mut gxt[..n + 1]);
                    exp_map_into(sub_h, beta, xh);
                    exp_map_into(sub_t, beta, xt);
                    y.copy_from_slice(xh);
                    boost_in_place(boost, y);
                    orth_forward_into(reflectors, ones, &mut y[1..], inputs);

                    gy.fill(0.0);
                    gxt.fill(0.0);
                    total += geodesic_term(y, xt, beta, norm);
                    let mut g_beta = geodesic_term_backward(y, xt, beta, norm, g_term, gy, gxt);
                    orth_backward_inputs(reflectors, ones, inputs, &mut gy[1..], g_rows, None);
                    let (g_boost, g_curv) = g_rest.split_at_mut(n);
                    boost_backward(boost, xh, gy, g_boost);
                    g_beta += exp_map_backward(sub_h, beta, gy, &mut g_h[eo..eo + n]);
                    g_beta += exp_map_backward(sub_t, beta, gxt, &mut g_t[eo..eo + n]);
                    g_curv[0] += g_beta * sigmoid(curvature_raw);
                }
            }
        }
        sink.add_entity(h, g_h);
        sink.add_entity(t, g_t);
        sink.add_relation(r, g_rel);
        -total
    }

    /// Class of the parameter at flat index `idx`.
    pub fn param_class(&self, idx: usize) -> ParamClass {
        self.locate(idx).1
    }

    /// Human-readable path of the parameter at flat index `idx`.
    pub fn param_path(&self, idx: usize) -> String {
        let (owner, class, comp, within) = self.locate(idx);
        match class {
            ParamClass::Entity => format!("entity[{owner}][{within}]"),
            _ => format!("relation[{owner}].component[{comp}].{}[{within}]", class.name()),
        }
    }

    fn locate(&self, idx: usize) -> (usize, ParamClass, usize, usize) {
        let ent = self.entity_table_len();
        if idx < ent {
            let d = self.config.stored_dim();
            return (idx / d, ParamClass::Entity, 0, idx % d);
        }
        let rel_len = self.config.relation_param_len();
        let r = (idx - ent) / rel_len;
        let off = (idx - ent) % rel_len;
        for (i, lay) in self.layouts.iter().enumerate() {
            let len = lay.spec.relation_param_len();
            if off >= lay.relation_offset && off < lay.relation_offset + len {
                let local = off - lay.relation_offset;
                let n = lay.n();
                let class = if local < n * n {
                    ParamClass::Reflector
                } else if lay.spec.geometry == Geometry::Elliptic {
                    ParamClass::EllipticWeight
                } else if local < n * n + n {
                    ParamClass::Boost
                } else {
                    ParamClass::Curvature
                };
                let within = match class {
                    ParamClass::Reflector => local,
                    ParamClass::Curvature => 0,
                    _ => local - n * n,
                };
                return (r, class, i, within);
            }
        }
        unreachable!("index {idx} is outside the parameter vector")
    }
}

fn layouts_of(config: &ManifoldConfig) -> Vec<ComponentLayout> {
    let mut out = Vec::with_capacity(config.components().len());
    let (mut eo, mut ro) = (0, 0);
    for &spec in config.components() {
        out.push(ComponentLayout {
            spec,
            entity_offset: eo,
            relation_offset: ro,
        });
        eo += spec.stored_dim();
        ro += spec.relation_param_len();
    }
    out
}

fn component_view(spec: ComponentSpec, block: &[f64]) -> ComponentParams<'_> {
    let n = spec.reflector_dim();
    let reflectors = Reflectors::new_unchecked(&block[..n * n], n);
    match spec.geometry {
        Geometry::Elliptic => ComponentParams::Elliptic {
            reflectors,
            weight_raw: &block[n * n..n * n + n],
        },
        Geometry::Hyperbolic => ComponentParams::Hyperbolic {
            reflectors,
            boost: &block[n * n..n * n + n],
            curvature_raw: block[n * n + n],
        },
    }
}

/// Gradient contributions of a few triples: touched entity rows and relation blocks.
#[derive(Debug, Clone, Default)]
pub struct SparseGrad {
    entities: Vec<(usize, Vec<f64>)>,
    relations: Vec<(usize, Vec<f64>)>,
}

impl SparseGrad {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_to(list: &mut Vec<(usize, Vec<f64>)>, id: usize, g: &[f64]) {
        match list.iter_mut().find(|(k, _)| *k == id) {
            Some((_, acc)) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => list.push((id, g.to_vec())),
        }
    }

    pub fn add_entity(&mut self, e: usize, g: &[f64]) {
        Self::add_to(&mut self.entities, e, g);
    }

    pub fn add_relation(&mut self, r: usize, g: &[f64]) {
        Self::add_to(&mut self.relations, r, g);
    }

    pub fn scale(&mut self, s: f64) {
        for (_, g) in self.entities.iter_mut().chain(self.relations.iter_mut()) {
            g.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Adds these contributions into a dense gradient laid out like `model.params()`.
    pub fn add_into(&self, model: &Model, dense: &mut [f64]) {
        let d = model.config.stored_dim();
        for (e, g) in &self.entities {
            dense[e * d..(e + 1) * d].iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        for (r, g) in &self.relations {
            let start = model.relation_offset(*r);
            dense[start..start + g.len()].iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
    }

    pub fn touched_entities(&self) -> impl Iterator<Item = usize> + '_ {
        self.entities.iter().map(|(e, _)| *e)
    }
}
