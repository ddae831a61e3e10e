//! Uniform grids over boxes, balls and the flat torus in ℂ^n ≅ ℝ^{2n}.
//!
//! A domain is a full rectangular index array plus a per-point mask.
//! Real axes are interleaved as (x_1, y_1, …, x_n, y_n) with z_j =
//! x_j + i·y_j. Interior points always have their complete 3^{2n} index
//! cube inside interior ∪ boundary, so every second-order stencil can be
//! evaluated without bounds checks (the torus wraps instead).

use std::sync::Arc;

use crate::error::{domain_err, Result};

pub const MAX_AXES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Box,
    Ball,
    Torus,
}

impl DomainKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DomainKind::Box => "box",
            DomainKind::Ball => "ball",
            DomainKind::Torus => "torus",
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridDomain {
    n: usize,
    shape: Vec<usize>,
    h: f64,
    origin: Vec<f64>,
    kind: DomainKind,
    mask: Vec<PointClass>,
    strides: Vec<usize>,
    interior: Vec<u32>,
    boundary: Vec<u32>,
}

fn strides_for(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    strides
}

impl GridDomain {
    fn finish(
        n: usize,
        shape: Vec<usize>,
        h: f64,
        origin: Vec<f64>,
        kind: DomainKind,
        mask: Vec<PointClass>,
    ) -> Arc<Self> {
        let strides = strides_for(&shape);
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for (i, c) in mask.iter().enumerate() {
            match c {
                PointClass::Interior => interior.push(i as u32),
                PointClass::Boundary => boundary.push(i as u32),
                PointClass::Exterior => {}
            }
        }
        Arc::new(GridDomain {
            n,
            shape,
            h,
            origin,
            kind,
            mask,
            strides,
            interior,
            boundary,
        })
    }

    /// Rebuilds a domain from stored geometry and an explicit mask
    /// (file reader path). The interior-cube invariant is revalidated.
    pub(crate) fn from_parts(
        n: usize,
        shape: Vec<usize>,
        h: f64,
        origin: Vec<f64>,
        kind: DomainKind,
        mask: Vec<PointClass>,
    ) -> Result<Arc<Self>> {
        if n < 1 || n > 3 || shape.len() != 2 * n || origin.len() != 2 * n {
            return domain_err("inconsistent domain geometry");
        }
        if !(h > 0.0) || !h.is_finite() {
            return domain_err("spacing must be positive and finite");
        }
        let total: usize = shape.iter().product();
        if mask.len() != total {
            return domain_err("mask length does not match shape");
        }
        let dom = Self::finish(n, shape, h, origin, kind, mask);
        if dom.kind != DomainKind::Torus {
            let axes = dom.axes();
            let mut idx = vec![0usize; axes];
            for &f in dom.interior() {
                dom.indices(f as usize, &mut idx);
                if idx.iter().zip(&dom.shape).any(|(&i, &s)| i == 0 || i == s - 1)
                    || !cube_all(
                        &idx,
                        &dom.shape,
                        |nb| dom.mask[nb] != PointClass::Exterior,
                        &dom.strides,
                    )
                {
                    return domain_err("interior point lacks its full stencil cube");
                }
            }
        }
        Ok(dom)
    }

    fn check_dims(n: usize, points_per_axis: usize, h: f64) -> Result<()> {
        if n < 1 || n > 3 {
            return domain_err(format!("complex dimension {n} outside 1..=3"));
        }
        if points_per_axis < 3 {
            return domain_err("need at least 3 points per axis");
        }
        if !(h > 0.0) || !h.is_finite() {
            return domain_err("spacing must be positive and finite");
        }
        Ok(())
    }

    /// Box with `points_per_axis` points on every one of the 2n axes; the
    /// outermost layer is the boundary.
    pub fn box_domain(
        n: usize,
        points_per_axis: usize,
        h: f64,
        origin: Vec<f64>,
    ) -> Result<Arc<Self>> {
        Self::check_dims(n, points_per_axis, h)?;
        if origin.len() != 2 * n {
            return domain_err("origin must have 2n entries");
        }
        let axes = 2 * n;
        let shape = vec![points_per_axis; axes];
        let total: usize = shape.iter().product();
        let strides = strides_for(&shape);
        let mut mask = vec![PointClass::Interior; total];
        for (flat, class) in mask.iter_mut().enumerate() {
            let mut rem = flat;
            for d in 0..axes {
                let idx = rem / strides[d];
                rem %= strides[d];
                if idx == 0 || idx == shape[d] - 1 {
                    *class = PointClass::Boundary;
                    break;
                }
            }
        }
        Ok(Self::finish(n, shape, h, origin, DomainKind::Box, mask))
    }

    /// Box spanning [lo, hi] on every axis.
    pub fn box_on(n: usize, points_per_axis: usize, lo: f64, hi: f64) -> Result<Arc<Self>> {
        if !(hi > lo) {
            return domain_err("box needs hi > lo");
        }
        let h = (hi - lo) / (points_per_axis - 1) as f64;
        Self::box_domain(n, points_per_axis, h, vec![lo; 2 * n])
    }

    /// Ball of `radius` about the coordinate origin, stored as the masked
    /// box [-radius, radius]^{2n}. A point is inside when |pos| ≤ radius;
    /// interior when its whole index cube is inside.
    pub fn ball(n: usize, points_per_axis: usize, radius: f64) -> Result<Arc<Self>> {
        if !(radius > 0.0) {
            return domain_err("ball radius must be positive");
        }
        let h = 2.0 * radius / (points_per_axis - 1) as f64;
        Self::check_dims(n, points_per_axis, h)?;
        let axes = 2 * n;
        let shape = vec![points_per_axis; axes];
        let origin = vec![-radius; axes];
        let total: usize = shape.iter().product();
        let strides = strides_for(&shape);
        let r2 = radius * radius * (1.0 + 1e-12);
        let inside = |flat: usize| -> bool {
            let mut rem = flat;
            let mut d2 = 0.0;
            for d in 0..axes {
                let idx = rem / strides[d];
                rem %= strides[d];
                let x = origin[d] + idx as f64 * h;
                d2 += x * x;
            }
            d2 <= r2
        };
        let mut mask = vec![PointClass::Exterior; total];
        for (flat, class) in mask.iter_mut().enumerate() {
            if inside(flat) {
                *class = PointClass::Boundary;
            }
        }
        // promote to interior where the full cube is inside
        let mut idx = vec![0usize; axes];
        let promoted: Vec<u32> = (0..total)
            .filter(|&flat| {
                if mask[flat] == PointClass::Exterior {
                    return false;
                }
                let mut rem = flat;
                for d in 0..axes {
                    idx[d] = rem / strides[d];
                    rem %= strides[d];
                }
                if idx.iter().zip(&shape).any(|(&i, &s)| i == 0 || i == s - 1) {
                    return false;
                }
                cube_all(&idx, &shape, |nb_flat| mask[nb_flat] != PointClass::Exterior, &strides)
            })
            .map(|f| f as u32)
            .collect();
        for &f in &promoted {
            mask[f as usize] = PointClass::Interior;
        }
        Ok(Self::finish(n, shape, h, origin, DomainKind::Ball, mask))
    }

    /// Flat torus (ℝ/ℤ)^{2n} sampled at `points_per_axis` points per axis,
    /// spacing 1/points_per_axis, no boundary, periodic indexing.
    pub fn torus(n: usize, points_per_axis: usize) -> Result<Arc<Self>> {
        let h = 1.0 / points_per_axis as f64;
        Self::check_dims(n, points_per_axis, h)?;
        let axes = 2 * n;
        let shape = vec![points_per_axis; axes];
        let total: usize = shape.iter().product();
        let mask = vec![PointClass::Interior; total];
        Ok(Self::finish(n, shape, h, vec![0.0; axes], DomainKind::Torus, mask))
    }

    /// Rebuilds the domain with the given interior points reclassified as
    /// boundary (used to pin obstacle values inside the domain).
    pub fn with_extra_boundary(&self, pts: &[u32]) -> Result<Arc<Self>> {
        if self.kind == DomainKind::Torus {
            return domain_err("cannot add boundary points to a torus");
        }
        let mut mask = self.mask.clone();
        for &p in pts {
            match mask.get(p as usize) {
                Some(PointClass::Interior) => mask[p as usize] = PointClass::Boundary,
                Some(PointClass::Boundary) => {}
                _ => return domain_err("obstacle point outside interior"),
            }
        }
        Ok(Self::finish(
            self.n,
            self.shape.clone(),
            self.h,
            self.origin.clone(),
            self.kind,
            mask,
        ))
    }

    /// Marks every point within `radius` of `center` as exterior and
    /// demotes interior points that now touch the exterior to boundary.
    /// Used to puncture grids around a function singularity.
    pub fn exclude_ball(&self, center: &[f64], radius: f64) -> Result<Arc<Self>> {
        if self.kind == DomainKind::Torus {
            return domain_err("cannot puncture a torus");
        }
        if center.len() != self.axes() {
            return domain_err("center must have 2n entries");
        }
        let mut mask = self.mask.clone();
        let r2 = radius * radius;
        let mut pos = [0.0f64; MAX_AXES];
        for flat in 0..self.points() {
            if mask[flat] == PointClass::Exterior {
                continue;
            }
            self.position(flat, &mut pos);
            let d2: f64 = pos[..self.axes()]
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 <= r2 {
                mask[flat] = PointClass::Exterior;
            }
        }
        // demote interior points whose cube now touches the exterior
        let axes = self.axes();
        let mut idx = vec![0usize; axes];
        let demote: Vec<usize> = (0..self.points())
            .filter(|&flat| {
                if mask[flat] != PointClass::Interior {
                    return false;
                }
                self.indices(flat, &mut idx);
                !cube_all(&idx, &self.shape, |nb| mask[nb] != PointClass::Exterior, &self.strides)
            })
            .collect();
        for flat in demote {
            mask[flat] = PointClass::Boundary;
        }
        Ok(Self::finish(
            self.n,
            self.shape.clone(),
            self.h,
            self.origin.clone(),
            self.kind,
            mask,
        ))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn points(&self) -> usize {
        self.mask.len()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn classify(&self, flat: usize) -> PointClass {
        self.mask[flat]
    }

    pub fn is_interior(&self, flat: usize) -> bool {
        self.mask[flat] == PointClass::Interior
    }

    pub fn interior(&self) -> &[u32] {
        &self.interior
    }

    pub fn boundary(&self) -> &[u32] {
        &self.boundary
    }

    /// h^{2n}, the volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.axes() as i32)
    }

    pub fn indices(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for d in 0..self.axes() {
            out[d] = rem / self.strides[d];
            rem %= self.strides[d];
        }
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i * s)
            .sum()
    }

    pub fn position(&self, flat: usize, out: &mut [f64; MAX_AXES]) {
        let mut rem = flat;
        for d in 0..self.axes() {
            let idx = rem / self.strides[d];
            rem %= self.strides[d];
            out[d] = self.origin[d] + idx as f64 * self.h;
        }
    }

    pub fn position_vec(&self, flat: usize) -> Vec<f64> {
        let mut buf = [0.0; MAX_AXES];
        self.position(flat, &mut buf);
        buf[..self.axes()].to_vec()
    }

    /// Squared Euclidean distance of a grid point from the coordinate origin.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let mut buf = [0.0; MAX_AXES];
        self.position(flat, &mut buf);
        buf[..self.axes()].iter().map(|x| x * x).sum()
    }

    /// Flat index displaced by `step` grid cells along `axis`, wrapping on
    /// the torus. Returns None when the step leaves the array.
    pub fn neighbor(&self, flat: usize, axis: usize, step: isize) -> Option<usize> {
        let idx = (flat / self.strides[axis]) % self.shape[axis];
        let s = self.shape[axis] as isize;
        let moved = idx as isize + step;
        if self.kind == DomainKind::Torus {
            let wrapped = moved.rem_euclid(s) as usize;
            Some((flat as isize + (wrapped as isize - idx as isize) * self.strides[axis] as isize) as usize)
        } else {
            if moved < 0 || moved >= s {
                return None;
            }
            Some((flat as isize + step * self.strides[axis] as isize) as usize)
        }
    }

    /// Interior points selected by a predicate on their positions.
    pub fn interior_where(&self, pred: impl Fn(&[f64]) -> bool) -> Vec<u32> {
        let mut buf = [0.0; MAX_AXES];
        self.interior
            .iter()
            .copied()
            .filter(|&f| {
                self.position(f as usize, &mut buf);
                pred(&buf[..self.axes()])
            })
            .collect()
    }

    /// True when the two domains have identical geometry and masks.
    pub fn same_layout(&self, other: &GridDomain) -> bool {
        self.n == other.n
            && self.shape == other.shape
            && self.h == other.h
            && self.origin == other.origin
            && self.kind == other.kind
            && self.mask == other.mask
    }
}

/// Applies `ok` to every flat index in the 3^axes cube around `idx`
/// (excluding the center); returns false at the first failure. Assumes
/// 0 < idx[d] < shape[d]-1 for all axes.
fn cube_all(
    idx: &[usize],
    shape: &[usize],
    ok: impl Fn(usize) -> bool,
    strides: &[usize],
) -> bool {
    let axes = shape.len();
    let mut offs = vec![-1isize; axes];
    loop {
        if offs.iter().any(|&o| o != 0) {
            let mut flat = 0usize;
            for d in 0..axes {
                flat += ((idx[d] as isize + offs[d]) as usize) * strides[d];
            }
            if !ok(flat) {
                return false;
            }
        }
        // odometer increment over {-1,0,1}^axes
        let mut d = 0;
        loop {
            if d == axes {
                return true;
            }
            offs[d] += 1;
            if offs[d] <= 1 {
                break;
            }
            offs[d] = -1;
            d += 1;
        }
    }
}
