//! Real-valued functions sampled on a grid domain.

use std::sync::Arc;

use crate::error::{domain_err, Result};
use crate::field::domain::{GridDomain, PointClass, MAX_AXES};

/// A scalar sample per grid point. Exterior points carry NaN; interior
/// and boundary points of a fully defined field are finite. Operators
/// that only produce values on part of the interior (ball averages,
/// mollification) leave NaN outside their admissible set, and every
/// consumer here skips non-finite entries.
#[derive(Clone, Debug)]
pub struct GridField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl GridField {
    /// Samples `f` at all interior and boundary points.
    pub fn from_fn(domain: Arc<GridDomain>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = vec![f64::NAN; domain.points()];
        let mut pos = [0.0f64; MAX_AXES];
        let axes = domain.axes();
        for flat in 0..domain.points() {
            if domain.classify(flat) != PointClass::Exterior {
                domain.position(flat, &mut pos);
                values[flat] = f(&pos[..axes]);
            }
        }
        GridField { domain, values }
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> Self {
        Self::from_fn(domain, |_| c)
    }

    /// Wraps a raw value vector (used by solvers and file I/O).
    pub fn from_values(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.points() {
            return domain_err("value vector does not match domain size");
        }
        Ok(GridField { domain, values })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// True when every interior and boundary point is finite.
    pub fn fully_defined(&self) -> bool {
        (0..self.domain.points()).all(|f| {
            self.domain.classify(f) == PointClass::Exterior || self.values[f].is_finite()
        })
    }

    /// Interior points where this field carries a finite value.
    pub fn finite_interior(&self) -> Vec<u32> {
        self.domain
            .interior()
            .iter()
            .copied()
            .filter(|&f| self.values[f as usize].is_finite())
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        let values = self.values.iter().map(|&v| f(v)).collect();
        GridField {
            domain: self.domain.clone(),
            values,
        }
    }

    /// Pointwise a·self + b·other on a shared domain.
    pub fn combine(&self, other: &GridField, a: f64, b: f64) -> Result<GridField> {
        if !self.domain.same_layout(other.domain()) {
            return domain_err("combine requires identical domains");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(GridField {
            domain: self.domain.clone(),
            values,
        })
    }

    pub fn max_interior(&self) -> f64 {
        self.domain
            .interior()
            .iter()
            .map(|&f| self.values[f as usize])
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_interior(&self) -> f64 {
        self.domain
            .interior()
            .iter()
            .map(|&f| self.values[f as usize])
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_boundary(&self) -> f64 {
        self.domain
            .boundary()
            .iter()
            .map(|&f| self.values[f as usize])
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// sup over interior of |self - other| (finite entries of both).
    pub fn sup_diff_interior(&self, other: &GridField) -> Result<f64> {
        if !self.domain.same_layout(other.domain()) {
            return domain_err("sup_diff requires identical domains");
        }
        let mut sup: f64 = 0.0;
        for &f in self.domain.interior() {
            let a = self.values[f as usize];
            let b = other.values[f as usize];
            if a.is_finite() && b.is_finite() {
                sup = sup.max((a - b).abs());
            }
        }
        Ok(sup)
    }

    /// (Σ_region |u|^q h^{2n})^{1/q}, midpoint quadrature over the given
    /// flat indices. Non-finite samples are skipped.
    pub fn lq_norm(&self, q: f64, region: &[u32]) -> Result<f64> {
        if !(q >= 1.0) {
            return domain_err("lq_norm needs q >= 1");
        }
        let vol = self.domain.cell_volume();
        let mut acc = 0.0;
        for &f in region {
            let v = self.values[f as usize];
            if v.is_finite() {
                acc += v.abs().powf(q);
            }
        }
        Ok((acc * vol).powf(1.0 / q))
    }

    /// h^{2n} · #{interior points with u < -s}.
    pub fn sublevel_volume(&self, s: f64) -> f64 {
        let count = self
            .domain
            .interior()
            .iter()
            .filter(|&&f| {
                let v = self.values[f as usize];
                v.is_finite() && v < -s
            })
            .count();
        count as f64 * self.domain.cell_volume()
    }

    /// Interior flat indices where u < -s.
    pub fn sublevel_set(&self, s: f64) -> Vec<u32> {
        self.domain
            .interior()
            .iter()
            .copied()
            .filter(|&f| {
                let v = self.values[f as usize];
                v.is_finite() && v < -s
            })
            .collect()
    }
}
