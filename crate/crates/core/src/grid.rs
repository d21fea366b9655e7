//! Masked uniform grids: domains, interior enumeration, boundary ring with
//! normal estimates, and scalar fields over the interior nodes.
//!
//! A node belongs to the interior exactly when its center lies strictly
//! inside the shape. Everything outside carries the value 0, which encodes
//! the H_0^2 extension by zero used by the clamped-plate discretization.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analytic shapes with an inside test and a distance-to-boundary oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk { r: f64 },
    Square { l: f64 },
    Annulus { r_in: f64, r_out: f64 },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disk { r } => x * x + y * y < r * r,
            Shape::Square { l } => x > 0.0 && x < l && y > 0.0 && y < l,
            Shape::Annulus { r_in, r_out } => {
                let rr = (x * x + y * y).sqrt();
                rr > r_in && rr < r_out
            }
        }
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Disk { r } => r - (x * x + y * y).sqrt(),
            Shape::Square { l } => x.min(l - x).min(y).min(l - y),
            Shape::Annulus { r_in, r_out } => {
                let rr = (x * x + y * y).sqrt();
                (rr - r_in).min(r_out - rr)
            }
        }
    }

    fn scaled(&self, t: f64) -> Shape {
        match *self {
            Shape::Disk { r } => Shape::Disk { r: r * t },
            Shape::Square { l } => Shape::Square { l: l * t },
            Shape::Annulus { r_in, r_out } => Shape::Annulus {
                r_in: r_in * t,
                r_out: r_out * t,
            },
        }
    }
}

/// JSON-shaped domain description: {"shape": "...", "params": [...],
/// "resolution": N}. Mask domains list explicit rows of 0/1 characters
/// (bottom row first) with params = [h].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<String>,
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("domain spec: {e}")))
    }
}

/// A boundary-adjacent interior node with its outward normal estimate.
#[derive(Debug, Clone, Copy)]
pub struct RingNode {
    /// Index into the interior enumeration.
    pub interior: usize,
    /// Outward unit normal estimated from the 8-neighbor mask gradient.
    pub normal: (f64, f64),
    /// Distance to the boundary along the normal (shape oracle when
    /// available, h/2 otherwise).
    pub dist: f64,
    /// Boundary component this node belongs to (8-connected ring labeling).
    pub component: usize,
}

/// Boolean interior mask on a uniform grid of spacing h.
#[derive(Debug, Clone)]
pub struct GridDomain {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x0: f64,
    pub y0: f64,
    mask: Vec<bool>,
    interior_index: Vec<u32>,
    interior_nodes: Vec<(usize, usize)>,
    /// Interior graph distance to the ring (ring itself has depth 0).
    depth: Vec<u32>,
    ring: Vec<RingNode>,
    n_components: usize,
    shape: Option<Shape>,
}

pub type Domain = Arc<GridDomain>;

const SENTINEL: u32 = u32::MAX;

impl GridDomain {
    /// Exterior margin around shape bounding boxes, in cells. Wide enough
    /// for the 13-point stencil plus re-masked perturbations of size 4h.
    const MARGIN: usize = 8;

    pub fn disk(r: f64, resolution: usize) -> Result<Domain> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::Domain(format!("disk radius must be > 0, got {r}")));
        }
        let h = 2.0 * r / resolution as f64;
        let m = Self::MARGIN as f64;
        Self::from_shape(Shape::Disk { r }, h, -r - m * h, -r - m * h, resolution + 2 * Self::MARGIN + 1)
    }

    pub fn square(l: f64, resolution: usize) -> Result<Domain> {
        if !l.is_finite() || l <= 0.0 {
            return Err(Error::Domain(format!("square side must be > 0, got {l}")));
        }
        let h = l / resolution as f64;
        let m = Self::MARGIN as f64;
        Self::from_shape(Shape::Square { l }, h, -m * h, -m * h, resolution + 2 * Self::MARGIN + 1)
    }

    pub fn annulus(r_in: f64, r_out: f64, resolution: usize) -> Result<Domain> {
        if !(0.0 <= r_in && r_in < r_out) {
            return Err(Error::Domain(format!(
                "annulus radii must satisfy 0 <= r_in < r_out, got ({r_in}, {r_out})"
            )));
        }
        let h = 2.0 * r_out / resolution as f64;
        let m = Self::MARGIN as f64;
        Self::from_shape(
            Shape::Annulus { r_in, r_out },
            h,
            -r_out - m * h,
            -r_out - m * h,
            resolution + 2 * Self::MARGIN + 1,
        )
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Domain> {
        if spec.shape != "mask" && spec.resolution == 0 {
            return Err(Error::Parse("resolution must be positive".into()));
        }
        match spec.shape.as_str() {
            "disk" => {
                let r = *spec.params.first().unwrap_or(&1.0);
                Self::disk(r, spec.resolution)
            }
            "square" => {
                let l = *spec.params.first().unwrap_or(&1.0);
                Self::square(l, spec.resolution)
            }
            "annulus" => {
                if spec.params.len() < 2 {
                    return Err(Error::Parse("annulus needs params [r_in, r_out]".into()));
                }
                Self::annulus(spec.params[0], spec.params[1], spec.resolution)
            }
            "mask" => {
                let h = *spec
                    .params
                    .first()
                    .ok_or_else(|| Error::Parse("mask domain needs params = [h]".into()))?;
                Self::from_mask_rows(h, &spec.rows)
            }
            other => Err(Error::Parse(format!("unknown shape '{other}'"))),
        }
    }

    /// Mask rows of '0'/'1' characters, bottom row first.
    pub fn from_mask_rows(h: f64, rows: &[String]) -> Result<Domain> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::Domain(format!("spacing must be > 0, got {h}")));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInterior("mask has no rows".into()));
        }
        let width = rows.iter().map(|r| r.len()).max().unwrap();
        let nx = width + 4;
        let ny = rows.len() + 4;
        let mut mask = vec![false; nx * ny];
        for (j, row) in rows.iter().enumerate() {
            for (i, ch) in row.chars().enumerate() {
                if ch == '1' || ch == '#' {
                    mask[(j + 2) * nx + (i + 2)] = true;
                }
            }
        }
        Self::build(nx, ny, h, 0.0, 0.0, mask, None)
    }

    fn from_shape(shape: Shape, h: f64, x0: f64, y0: f64, n: usize) -> Result<Domain> {
        let mut mask = vec![false; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let x = x0 + ix as f64 * h;
                let y = y0 + iy as f64 * h;
                mask[iy * n + ix] = shape.contains(x, y);
            }
        }
        Self::build(n, n, h, x0, y0, mask, Some(shape))
    }

    /// Same mask and geometry, new spacing: a pure homothety of the domain.
    pub fn with_spacing(&self, h: f64) -> Domain {
        let t = h / self.h;
        let shape = self.shape.map(|s| s.scaled(t));
        Arc::new(GridDomain {
            nx: self.nx,
            ny: self.ny,
            h,
            x0: self.x0 * t,
            y0: self.y0 * t,
            mask: self.mask.clone(),
            interior_index: self.interior_index.clone(),
            interior_nodes: self.interior_nodes.clone(),
            depth: self.depth.clone(),
            ring: self
                .ring
                .iter()
                .map(|r| RingNode {
                    dist: r.dist * t,
                    ..*r
                })
                .collect(),
            n_components: self.n_components,
            shape,
        })
    }

    /// New mask on the same lattice from an inside predicate; used for
    /// perturbed-domain solves. No shape oracle is attached.
    pub fn remask(&self, inside: impl Fn(f64, f64) -> bool) -> Result<Domain> {
        let mut mask = vec![false; self.nx * self.ny];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let (x, y) = self.coord(ix, iy);
                mask[iy * self.nx + ix] = inside(x, y);
            }
        }
        Self::build(self.nx, self.ny, self.h, self.x0, self.y0, mask, None)
    }

    /// Sub-domain obtained by dropping interior nodes (extension by zero
    /// keeps the ambient grid). The shape oracle is dropped because the
    /// boundary no longer matches it.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Result<Domain> {
        let mut mask = vec![false; self.nx * self.ny];
        for (idx, &(ix, iy)) in self.interior_nodes.iter().enumerate() {
            if keep(idx) {
                mask[iy * self.nx + ix] = true;
            }
        }
        Self::build(self.nx, self.ny, self.h, self.x0, self.y0, mask, None)
    }

    fn build(
        nx: usize,
        ny: usize,
        h: f64,
        x0: f64,
        y0: f64,
        mask: Vec<bool>,
        shape: Option<Shape>,
    ) -> Result<Domain> {
        let mut interior_index = vec![SENTINEL; nx * ny];
        let mut interior_nodes = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                if mask[iy * nx + ix] {
                    if ix < 2 || iy < 2 || ix + 2 >= nx || iy + 2 >= ny {
                        return Err(Error::Domain(
                            "interior node too close to the grid edge for the 13-point stencil"
                                .into(),
                        ));
                    }
                    interior_index[iy * nx + ix] = interior_nodes.len() as u32;
                    interior_nodes.push((ix, iy));
                }
            }
        }
        if interior_nodes.is_empty() {
            return Err(Error::EmptyInterior("mask selects no interior nodes".into()));
        }

        let is_interior = |ix: isize, iy: isize| -> bool {
            ix >= 0 && iy >= 0 && (ix as usize) < nx && (iy as usize) < ny
                && mask[iy as usize * nx + ix as usize]
        };

        // Depth layers: ring nodes (a 4-neighbor outside) have depth 0.
        let mut depth = vec![u32::MAX; interior_nodes.len()];
        let mut queue = std::collections::VecDeque::new();
        for (idx, &(ix, iy)) in interior_nodes.iter().enumerate() {
            let (ix, iy) = (ix as isize, iy as isize);
            let exposed = !is_interior(ix - 1, iy)
                || !is_interior(ix + 1, iy)
                || !is_interior(ix, iy - 1)
                || !is_interior(ix, iy + 1);
            if exposed {
                depth[idx] = 0;
                queue.push_back(idx);
            }
        }
        while let Some(p) = queue.pop_front() {
            let (ix, iy) = interior_nodes[p];
            for (dx, dy) in [(-1_isize, 0_isize), (1, 0), (0, -1), (0, 1)] {
                let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                if is_interior(jx, jy) {
                    let q = interior_index[jy as usize * nx + jx as usize] as usize;
                    if depth[q] == u32::MAX {
                        depth[q] = depth[p] + 1;
                        queue.push_back(q);
                    }
                }
            }
        }

        // Ring components by 8-connectivity among depth-0 nodes.
        let ring_ids: Vec<usize> = (0..interior_nodes.len()).filter(|&i| depth[i] == 0).collect();
        let mut component = vec![usize::MAX; interior_nodes.len()];
        let mut n_components = 0;
        for &start in &ring_ids {
            if component[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            component[start] = n_components;
            while let Some(p) = stack.pop() {
                let (ix, iy) = interior_nodes[p];
                for dy in -1_isize..=1 {
                    for dx in -1_isize..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                        if is_interior(jx, jy) {
                            let q = interior_index[jy as usize * nx + jx as usize] as usize;
                            if depth[q] == 0 && component[q] == usize::MAX {
                                component[q] = n_components;
                                stack.push(q);
                            }
                        }
                    }
                }
            }
            n_components += 1;
        }

        // Normals from the 8-neighbor exterior indicator, then ring ordering
        // by component and angle around the component centroid.
        let mut ring = Vec::with_capacity(ring_ids.len());
        for &idx in &ring_ids {
            let (ix, iy) = interior_nodes[idx];
            let mut gx = 0.0;
            let mut gy = 0.0;
            for dy in -1_isize..=1 {
                for dx in -1_isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    if !is_interior(ix as isize + dx, iy as isize + dy) {
                        let w = 1.0 / (dx * dx + dy * dy) as f64;
                        gx += w * dx as f64;
                        gy += w * dy as f64;
                    }
                }
            }
            let len = (gx * gx + gy * gy).sqrt();
            let mut normal = if len > 0.0 { (gx / len, gy / len) } else { (1.0, 0.0) };
            let (x, y) = (x0 + ix as f64 * h, y0 + iy as f64 * h);
            // The mask-gradient normal is quantized to eighth turns, which
            // biases profile sampling; radial shapes have the exact one.
            match shape {
                Some(Shape::Disk { .. }) => {
                    let rr = (x * x + y * y).sqrt();
                    if rr > 0.0 {
                        normal = (x / rr, y / rr);
                    }
                }
                Some(Shape::Annulus { r_in, r_out }) => {
                    let rr = (x * x + y * y).sqrt();
                    if rr > 0.0 {
                        // Outward of the domain: radial at the outer rim,
                        // toward the hole at the inner one.
                        let s = if (rr - r_in).abs() < (r_out - rr).abs() { -1.0 } else { 1.0 };
                        normal = (s * x / rr, s * y / rr);
                    }
                }
                _ => {}
            }
            let dist = shape
                .map(|s| s.boundary_distance(x, y).max(0.0))
                .unwrap_or(0.5 * h);
            ring.push(RingNode {
                interior: idx,
                normal,
                dist,
                component: component[idx],
            });
        }
        let centroid: Vec<(f64, f64, f64)> = (0..n_components)
            .map(|c| {
                let mut sx = 0.0;
                let mut sy = 0.0;
                let mut n = 0.0;
                for r in &ring {
                    if r.component == c {
                        let (ix, iy) = interior_nodes[r.interior];
                        sx += ix as f64;
                        sy += iy as f64;
                        n += 1.0;
                    }
                }
                (sx / n, sy / n, n)
            })
            .collect();
        ring.sort_by(|a, b| {
            a.component.cmp(&b.component).then_with(|| {
                let angle = |r: &RingNode| {
                    let (ix, iy) = interior_nodes[r.interior];
                    let (cx, cy, _) = centroid[r.component];
                    (iy as f64 - cy).atan2(ix as f64 - cx)
                };
                angle(a).partial_cmp(&angle(b)).unwrap()
            })
        });

        Ok(Arc::new(GridDomain {
            nx,
            ny,
            h,
            x0,
            y0,
            mask,
            interior_index,
            interior_nodes,
            depth,
            ring,
            n_components,
            shape,
        }))
    }

    pub fn interior_count(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Area of the discrete domain: (#interior) h^2.
    pub fn area(&self) -> f64 {
        self.interior_count() as f64 * self.h * self.h
    }

    pub fn interior_nodes(&self) -> &[(usize, usize)] {
        &self.interior_nodes
    }

    pub fn coord(&self, ix: usize, iy: usize) -> (f64, f64) {
        (self.x0 + ix as f64 * self.h, self.y0 + iy as f64 * self.h)
    }

    pub fn is_interior(&self, ix: isize, iy: isize) -> bool {
        ix >= 0
            && iy >= 0
            && (ix as usize) < self.nx
            && (iy as usize) < self.ny
            && self.mask[iy as usize * self.nx + ix as usize]
    }

    /// Interior index of a node, if the node is interior.
    pub fn index_of(&self, ix: isize, iy: isize) -> Option<usize> {
        if self.is_interior(ix, iy) {
            Some(self.interior_index[iy as usize * self.nx + ix as usize] as usize)
        } else {
            None
        }
    }

    /// 4-neighbor graph distance to the boundary ring (ring = 0).
    pub fn depth(&self, interior: usize) -> u32 {
        self.depth[interior]
    }

    /// Boundary-adjacent interior nodes, ordered by component then angle.
    pub fn ring(&self) -> &[RingNode] {
        &self.ring
    }

    pub fn n_boundary_components(&self) -> usize {
        self.n_components
    }

    pub fn shape(&self) -> Option<Shape> {
        self.shape
    }

    /// True when the discrete boundary is a single 8-connected ring; the
    /// continuum regularity hypotheses have no grid analogue, so only this
    /// connectivity is recorded.
    pub fn boundary_is_connected(&self) -> bool {
        self.n_components == 1
    }
}

/// Real values on the interior nodes of a domain; zero outside by
/// convention.
#[derive(Debug, Clone)]
pub struct ScalarField {
    domain: Domain,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.interior_count() {
            return Err(Error::Domain(format!(
                "field length {} does not match interior count {}",
                values.len(),
                domain.interior_count()
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Domain) -> Self {
        let n = domain.interior_count();
        Self {
            domain,
            values: vec![0.0; n],
        }
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        let n = domain.interior_count();
        Self {
            domain,
            values: vec![c; n],
        }
    }

    /// Sample a function of (x, y) at the interior node centers.
    pub fn sample(domain: Domain, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = domain
            .interior_nodes()
            .iter()
            .map(|&(ix, iy)| {
                let (x, y) = domain.coord(ix, iy);
                f(x, y)
            })
            .collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// h^2 sum of the values: the discrete integral.
    pub fn integral(&self) -> f64 {
        self.domain.h * self.domain.h * self.values.iter().sum::<f64>()
    }

    /// Discrete L2 norm (h^2-weighted).
    pub fn l2_norm(&self) -> f64 {
        (self.domain.h * self.domain.h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    /// Nodewise linear combination self + t * other on the same domain.
    pub fn axpy(&self, t: f64, other: &ScalarField) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + t * b)
                .collect(),
        }
    }
}
