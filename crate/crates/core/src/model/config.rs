use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Elliptic,
    Hyperbolic,
}

impl Geometry {
    pub fn tag(self) -> char {
        match self {
            Geometry::Elliptic => 'P',
            Geometry::Hyperbolic => 'Q',
        }
    }
}

/// One factor of the product manifold. `dim` is the ambient dimension `k_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComponentSpec {
    pub geometry: Geometry,
    pub dim: usize,
}

impl ComponentSpec {
    pub fn elliptic(dim: usize) -> Self {
        ComponentSpec {
            geometry: Geometry::Elliptic,
            dim,
        }
    }

    pub fn hyperbolic(dim: usize) -> Self {
        ComponentSpec {
            geometry: Geometry::Hyperbolic,
            dim,
        }
    }

    /// Entity coordinates consumed by this component: `k_i` for elliptic,
    /// `k_i - 1` for hyperbolic (the exponential map adds the time coordinate).
    pub fn stored_dim(&self) -> usize {
        match self.geometry {
            Geometry::Elliptic => self.dim,
            Geometry::Hyperbolic => self.dim - 1,
        }
    }

    /// Length of each reflector row (and the row count).
    pub fn reflector_dim(&self) -> usize {
        self.stored_dim()
    }

    /// Number of scalars this component adds to a relation's parameter block.
    pub fn relation_param_len(&self) -> usize {
        let n = self.reflector_dim();
        match self.geometry {
            Geometry::Elliptic => n * n + n,
            Geometry::Hyperbolic => n * n + n + 1,
        }
    }
}

impl fmt::Display for ComponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.geometry.tag(), self.dim)
    }
}

impl FromStr for ComponentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let geometry = match chars.next() {
            Some('P') | Some('p') => Geometry::Elliptic,
            Some('Q') | Some('q') => Geometry::Hyperbolic,
            _ => return Err(Error::Config(format!("bad component `{s}`: expected P<k> or Q<k>"))),
        };
        let dim = chars
            .as_str()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("bad component dimension in `{s}`")))?;
        Ok(ComponentSpec { geometry, dim })
    }
}

/// Ordered product of elliptic and hyperbolic components plus the norm indicator `l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ManifoldConfig {
    components: Vec<ComponentSpec>,
    norm: u32,
}

impl ManifoldConfig {
    pub fn new(components: Vec<ComponentSpec>, norm: u32) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("product manifold needs at least one component".into()));
        }
        if let Some(c) = components.iter().find(|c| c.dim < 2) {
            return Err(Error::Config(format!("component {c} has dimension below 2")));
        }
        if norm == 0 {
            return Err(Error::Config("norm indicator must be a positive integer".into()));
        }
        Ok(ManifoldConfig { components, norm })
    }

    /// Homogeneous partition: `mp` elliptic components sharing `kstar` stored
    /// coordinates and `mq` hyperbolic components sharing the remaining
    /// `dim - kstar`. `kstar` defaults to `dim` without hyperbolic components, 0
    /// without elliptic ones and `dim / 2` otherwise.
    pub fn from_partition(dim: usize, kstar: Option<usize>, mp: usize, mq: usize, norm: u32) -> Result<Self> {
        if mp == 0 && mq == 0 {
            return Err(Error::Config("need at least one elliptic or hyperbolic component".into()));
        }
        let kstar = kstar.unwrap_or(match (mp, mq) {
            (_, 0) => dim,
            (0, _) => 0,
            _ => dim / 2,
        });
        if kstar > dim {
            return Err(Error::Config(format!("kstar {kstar} exceeds dim {dim}")));
        }
        let rest = dim - kstar;
        let mut components = Vec::with_capacity(mp + mq);
        if mp == 0 {
            if kstar != 0 {
                return Err(Error::Config(format!("kstar {kstar} given but mp is 0")));
            }
        } else {
            if kstar % mp != 0 {
                return Err(Error::Config(format!("kstar {kstar} is not divisible by mp {mp}")));
            }
            components.extend(std::iter::repeat_n(ComponentSpec::elliptic(kstar / mp), mp));
        }
        if mq == 0 {
            if rest != 0 {
                return Err(Error::Config(format!(
                    "{rest} coordinates left for hyperbolic components but mq is 0"
                )));
            }
        } else {
            if rest % mq != 0 {
                return Err(Error::Config(format!(
                    "dim - kstar = {rest} is not divisible by mq {mq}"
                )));
            }
            components.extend(std::iter::repeat_n(ComponentSpec::hyperbolic(rest / mq + 1), mq));
        }
        ManifoldConfig::new(components, norm)
    }

    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn norm(&self) -> u32 {
        self.norm
    }

    pub fn with_norm(mut self, norm: u32) -> Result<Self> {
        if norm == 0 {
            return Err(Error::Config("norm indicator must be a positive integer".into()));
        }
        self.norm = norm;
        Ok(self)
    }

    /// Stored entity dimension.
    pub fn stored_dim(&self) -> usize {
        self.components.iter().map(ComponentSpec::stored_dim).sum()
    }

    /// Sum of ambient dimensions `k_i`.
    pub fn ambient_dim(&self) -> usize {
        self.components.iter().map(|c| c.dim).sum()
    }

    pub fn relation_param_len(&self) -> usize {
        self.components.iter().map(ComponentSpec::relation_param_len).sum()
    }

    fn count(&self, g: Geometry) -> usize {
        self.components.iter().filter(|c| c.geometry == g).count()
    }

    fn common_dim(&self, g: Geometry) -> Option<usize> {
        let mut dims = self.components.iter().filter(|c| c.geometry == g).map(|c| c.dim);
        let first = dims.next()?;
        dims.all(|d| d == first).then_some(first)
    }

    pub fn m_p(&self) -> usize {
        self.count(Geometry::Elliptic)
    }

    pub fn m_q(&self) -> usize {
        self.count(Geometry::Hyperbolic)
    }

    /// Shared elliptic dimension, when all elliptic components agree.
    pub fn k_p(&self) -> Option<usize> {
        self.common_dim(Geometry::Elliptic)
    }

    /// Shared hyperbolic ambient dimension, when all hyperbolic components agree.
    pub fn k_q(&self) -> Option<usize> {
        self.common_dim(Geometry::Hyperbolic)
    }

    /// Compact form such as `P4,P4,Q5,Q5`.
    pub fn components_string(&self) -> String {
        self.components
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_components(s: &str, norm: u32) -> Result<Self> {
        let comps = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        ManifoldConfig::new(comps, norm)
    }
}

impl fmt::Display for ManifoldConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "components={} stored_dim={} ambient_dim={} norm={}",
            self.components_string(),
            self.stored_dim(),
            self.ambient_dim(),
            self.norm
        )
    }
}
