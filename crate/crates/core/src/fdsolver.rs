//! Finite-difference operators on masked grids: the clamped-plate
//! biharmonic eigensolver, Poisson and harmonic-extension solves, discrete
//! Laplacians and the boundary estimators built on them.
//!
//! Discretization of the clamped conditions: exterior nodes carry the value
//! 0 (u = 0), and when a 13-point arm reaches two nodes past the mask the
//! value is mirrored back, u(p + 2e) := u(p), which enforces a vanishing
//! normal derivative at the first exterior layer to second order on
//! straight boundaries. The mirror only ever touches the diagonal, so the
//! assembled operator stays symmetric on any mask.

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::{Domain, ScalarField};

/// 13-point bilaplacian stencil, coefficients in units of 1/h^4.
const BIHARMONIC_STENCIL: [(isize, isize, f64); 13] = [
    (0, 0, 20.0),
    (1, 0, -8.0),
    (-1, 0, -8.0),
    (0, 1, -8.0),
    (0, -1, -8.0),
    (1, 1, 2.0),
    (1, -1, 2.0),
    (-1, 1, 2.0),
    (-1, -1, 2.0),
    (2, 0, 1.0),
    (-2, 0, 1.0),
    (0, 2, 1.0),
    (0, -2, 1.0),
];

/// (Gamma, u): principal eigenvalue and L2-normalized mode.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub mode: ScalarField,
}

/// 5-point discrete Laplacian with zero extension outside the mask.
pub fn laplacian_of(field: &ScalarField) -> ScalarField {
    let domain = field.domain().clone();
    let h2 = domain.h * domain.h;
    let values = domain
        .interior_nodes()
        .iter()
        .enumerate()
        .map(|(idx, &(ix, iy))| {
            let (ix, iy) = (ix as isize, iy as isize);
            let mut s = -4.0 * field.values[idx];
            for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if let Some(q) = domain.index_of(ix + dx, iy + dy) {
                    s += field.values[q];
                }
            }
            s / h2
        })
        .collect();
    ScalarField::new(domain, values).expect("length matches by construction")
}

/// Matrix-free application of the clamped bilaplacian.
pub fn apply_biharmonic(field: &ScalarField) -> ScalarField {
    let domain = field.domain().clone();
    let h4 = domain.h.powi(4);
    let values = domain
        .interior_nodes()
        .iter()
        .map(|&(ix, iy)| {
            let (ix, iy) = (ix as isize, iy as isize);
            let here = domain.index_of(ix, iy).expect("interior node");
            let mut s = 0.0;
            for &(dx, dy, c) in &BIHARMONIC_STENCIL {
                if let Some(q) = domain.index_of(ix + dx, iy + dy) {
                    s += c * field.values[q];
                } else if (dx.abs() == 2 || dy.abs() == 2)
                    && !domain.is_interior(ix + dx / 2, iy + dy / 2)
                {
                    s += c * field.values[here];
                }
            }
            s / h4
        })
        .collect();
    ScalarField::new(domain, values).expect("length matches by construction")
}

fn assemble_biharmonic(domain: &Domain) -> BandMatrix {
    let nodes = domain.interior_nodes();
    let n = nodes.len();
    let mut bw = 0usize;
    for (i, &(ix, iy)) in nodes.iter().enumerate() {
        for &(dx, dy, _) in &BIHARMONIC_STENCIL {
            if let Some(j) = domain.index_of(ix as isize + dx, iy as isize + dy) {
                if j < i {
                    bw = bw.max(i - j);
                }
            }
        }
    }
    let mut a = BandMatrix::zeros(n, bw);
    for (i, &(ix, iy)) in nodes.iter().enumerate() {
        let (ix, iy) = (ix as isize, iy as isize);
        for &(dx, dy, c) in &BIHARMONIC_STENCIL {
            match domain.index_of(ix + dx, iy + dy) {
                Some(j) if j <= i => a.add(i, j, c),
                Some(_) => {}
                None => {
                    if (dx.abs() == 2 || dy.abs() == 2)
                        && !domain.is_interior(ix + dx / 2, iy + dy / 2)
                    {
                        a.add(i, i, c);
                    }
                }
            }
        }
    }
    a
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rayleigh quotient <B u, u> / <u, u> of the clamped bilaplacian.
pub fn rayleigh_quotient(field: &ScalarField) -> f64 {
    let bu = apply_biharmonic(field);
    dot(&bu.values, &field.values) / dot(&field.values, &field.values)
}

/// h^2 sum of (Delta_h u)^2: the zero-extension bending energy. It differs
/// from the clamped quadratic form by boundary-layer terms of order h.
pub fn bending_energy(field: &ScalarField) -> f64 {
    let lap = laplacian_of(field);
    field.domain().h * field.domain().h * dot(&lap.values, &lap.values)
}

/// Forward-difference Dirichlet energy with extension by zero; in 2-D the
/// h factors cancel, leaving a plain sum of squared differences.
pub fn dirichlet_energy(field: &ScalarField) -> f64 {
    let domain = field.domain();
    let mut acc = 0.0;
    for (idx, &(ix, iy)) in domain.interior_nodes().iter().enumerate() {
        let (ix, iy) = (ix as isize, iy as isize);
        let u = field.values[idx];
        for (dx, dy) in [(1, 0), (0, 1)] {
            let v = domain
                .index_of(ix + dx, iy + dy)
                .map_or(0.0, |q| field.values[q]);
            acc += (v - u) * (v - u);
            // Edge reaching this node from an exterior neighbor.
            if domain.index_of(ix - dx, iy - dy).is_none() {
                acc += u * u;
            }
        }
    }
    acc
}

/// Smallest eigenpair of the clamped-plate operator by inverse power
/// iteration on a banded Cholesky factorization. Deterministic all-ones
/// start; the iteration stops when successive Rayleigh estimates differ by
/// less than tol * Gamma. The mode is L2-normalized with nonnegative mean.
pub fn principal_eigenpair(domain: &Domain, tol: f64) -> Result<EigenPair> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
    }
    let chol = assemble_biharmonic(domain).cholesky()?;
    let n = domain.interior_count();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut prev = f64::INFINITY;
    for _ in 0..500 {
        let y = chol.solve(&x);
        let yy = dot(&y, &y);
        let lambda = dot(&y, &x) / yy;
        let norm = yy.sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (lambda - prev).abs() <= tol * lambda.abs() {
            return Ok(finish_pair(domain, x));
        }
        prev = lambda;
    }
    Err(Error::NoConvergence {
        iterations: 500,
        last_change: prev,
    })
}

fn finish_pair(domain: &Domain, mut x: Vec<f64>) -> EigenPair {
    // L2-normalize with the h^2 weight and fix the sign by the mean.
    let h = domain.h;
    let norm = (h * h * dot(&x, &x)).sqrt();
    let mean: f64 = x.iter().sum();
    let sign = if mean < 0.0 { -1.0 } else { 1.0 };
    for v in &mut x {
        *v *= sign / norm;
    }
    let mode = ScalarField::new(domain.clone(), x).expect("length matches");
    let eigenvalue = rayleigh_quotient(&mode);
    EigenPair { eigenvalue, mode }
}

/// Second eigenvalue by inverse iteration deflated against the principal
/// mode; reported so callers can judge the spectral gap.
pub fn second_eigenvalue(domain: &Domain, principal: &EigenPair, tol: f64) -> Result<f64> {
    let chol = assemble_biharmonic(domain).cholesky()?;
    let n = domain.interior_count();
    let u1 = &principal.mode.values;
    let u1_nn = dot(u1, u1);
    let project = |x: &mut Vec<f64>| {
        let c = dot(x, u1) / u1_nn;
        for (xi, ui) in x.iter_mut().zip(u1) {
            *xi -= c * ui;
        }
    };
    let mut x: Vec<f64> = (0..n).map(|i| (0.37 * i as f64).sin() + 0.5).collect();
    project(&mut x);
    let nx = dot(&x, &x).sqrt();
    for v in &mut x {
        *v /= nx;
    }
    let mut prev = f64::INFINITY;
    for _ in 0..1000 {
        let mut y = chol.solve(&x);
        project(&mut y);
        let yy = dot(&y, &y);
        let lambda = dot(&y, &x) / yy;
        let norm = yy.sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (lambda - prev).abs() <= tol * lambda.abs() {
            let mode = ScalarField::new(domain.clone(), x).expect("length matches");
            return Ok(rayleigh_quotient(&mode));
        }
        prev = lambda;
    }
    Err(Error::NoConvergence {
        iterations: 1000,
        last_change: prev,
    })
}

fn assemble_neg_laplacian(domain: &Domain, active: &[bool]) -> (BandMatrix, Vec<usize>) {
    let nodes = domain.interior_nodes();
    let mut compact = vec![u32::MAX; nodes.len()];
    let mut map = Vec::new();
    for (i, &(ix, iy)) in nodes.iter().enumerate() {
        let _ = (ix, iy);
        if active[i] {
            compact[i] = map.len() as u32;
            map.push(i);
        }
    }
    let mut bw = 0usize;
    for &i in &map {
        let (ix, iy) = nodes[i];
        let ci = compact[i] as usize;
        for (dx, dy) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            if let Some(j) = domain.index_of(ix as isize + dx, iy as isize + dy) {
                if active[j] {
                    let cj = compact[j] as usize;
                    if cj < ci {
                        bw = bw.max(ci - cj);
                    }
                }
            }
        }
    }
    let mut a = BandMatrix::zeros(map.len(), bw);
    for &i in &map {
        let (ix, iy) = nodes[i];
        let ci = compact[i] as usize;
        a.add(ci, ci, 4.0);
        for (dx, dy) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            if let Some(j) = domain.index_of(ix as isize + dx, iy as isize + dy) {
                if active[j] {
                    let cj = compact[j] as usize;
                    if cj < ci {
                        a.add(ci, cj, -1.0);
                    }
                }
            }
        }
    }
    (a, map)
}

/// Solve -Delta u = f with zero Dirichlet data encoded by the mask.
pub fn poisson_solve(domain: &Domain, f: &ScalarField) -> Result<ScalarField> {
    let n = domain.interior_count();
    if f.values.len() != n {
        return Err(Error::Domain("source field on a different domain".into()));
    }
    let active = vec![true; n];
    let (a, _map) = assemble_neg_laplacian(domain, &active);
    let chol = a.cholesky()?;
    let h2 = domain.h * domain.h;
    let b: Vec<f64> = f.values.iter().map(|v| v * h2).collect();
    let x = chol.solve(&b);
    // A direct solve leaves the residual at rounding level.
    let u = ScalarField::new(domain.clone(), x)?;
    let lap = laplacian_of(&u);
    let mut res = 0.0;
    let mut scale = 0.0;
    for i in 0..n {
        res += (lap.values[i] + f.values[i]).powi(2);
        scale += f.values[i].powi(2);
    }
    if scale > 0.0 && res.sqrt() > 1e-10 * scale.sqrt() {
        return Err(Error::Solver(format!(
            "Poisson residual {:.3e} exceeds 1e-10 relative",
            (res / scale).sqrt()
        )));
    }
    Ok(u)
}

/// Solve (-Delta_h + shift) w = rhs with zero Dirichlet data on every node
/// of depth < min_depth (and outside the mask), shift >= 0. The returned
/// field carries zeros on the excluded layers.
pub fn helmholtz_solve_on(
    domain: &Domain,
    shift: f64,
    rhs: &ScalarField,
    min_depth: u32,
) -> Result<ScalarField> {
    if shift < 0.0 {
        return Err(Error::Domain(format!("shift must be >= 0, got {shift}")));
    }
    let n = domain.interior_count();
    let active: Vec<bool> = (0..n).map(|i| domain.depth(i) >= min_depth).collect();
    if !active.iter().any(|&a| a) {
        return Ok(ScalarField::zeros(domain.clone()));
    }
    let (mut a, map) = assemble_neg_laplacian(domain, &active);
    let h2 = domain.h * domain.h;
    for i in 0..map.len() {
        a.add(i, i, shift * h2);
    }
    let chol = a.cholesky()?;
    let b: Vec<f64> = map.iter().map(|&i| rhs.values[i] * h2).collect();
    let x = chol.solve(&b);
    let mut values = vec![0.0; n];
    for (&i, &v) in map.iter().zip(&x) {
        values[i] = v;
    }
    ScalarField::new(domain.clone(), values)
}

/// Solve (-Delta_h + shift) w = rhs with zero Dirichlet data encoded by the
/// mask.
pub fn helmholtz_solve(domain: &Domain, shift: f64, rhs: &ScalarField) -> Result<ScalarField> {
    helmholtz_solve_on(domain, shift, rhs, 0)
}

/// Discrete harmonic extension of Dirichlet data prescribed on the
/// boundary ring (ordered as `domain.ring()`); the returned field attains
/// the data on the ring exactly.
pub fn harmonic_extension(domain: &Domain, ring_data: &[f64]) -> Result<ScalarField> {
    let ring = domain.ring();
    if ring_data.len() != ring.len() {
        return Err(Error::Domain(format!(
            "ring data length {} does not match ring size {}",
            ring_data.len(),
            ring.len()
        )));
    }
    if ring_data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("ring data must be finite".into()));
    }
    let n = domain.interior_count();
    let mut values = vec![0.0; n];
    for (r, &v) in ring.iter().zip(ring_data) {
        values[r.interior] = v;
    }
    let active: Vec<bool> = (0..n).map(|i| domain.depth(i) >= 1).collect();
    if active.iter().any(|&a| a) {
        let (a, map) = assemble_neg_laplacian(domain, &active);
        let chol = a.cholesky()?;
        let nodes = domain.interior_nodes();
        let b: Vec<f64> = map
            .iter()
            .map(|&i| {
                let (ix, iy) = nodes[i];
                let mut s = 0.0;
                for (dx, dy) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                    if let Some(j) = domain.index_of(ix as isize + dx, iy as isize + dy) {
                        if domain.depth(j) == 0 {
                            s += values[j];
                        }
                    }
                }
                s
            })
            .collect();
        let x = chol.solve(&b);
        for (&i, &v) in map.iter().zip(&x) {
            values[i] = v;
        }
    }
    ScalarField::new(domain.clone(), values)
}

/// Raw 5-point Laplacian sampled at the ring nodes, in ring order.
pub fn ring_laplacian(field: &ScalarField) -> Vec<f64> {
    let lap = laplacian_of(field);
    field
        .domain()
        .ring()
        .iter()
        .map(|r| lap.values[r.interior])
        .collect()
}

/// Bilinear interpolation that ignores contaminated nodes: only interior
/// nodes of depth >= min_depth enter, with the bilinear weights
/// renormalized over the surviving corners.
fn interp_clean(field: &ScalarField, x: f64, y: f64, min_depth: u32) -> f64 {
    let domain = field.domain();
    let gx = (x - domain.x0) / domain.h;
    let gy = (y - domain.y0) / domain.h;
    let i0 = gx.floor() as isize;
    let j0 = gy.floor() as isize;
    let fx = gx - i0 as f64;
    let fy = gy - j0 as f64;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (di, dj, w) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        if let Some(q) = domain.index_of(i0 + di, j0 + dj) {
            if domain.depth(q) >= min_depth {
                acc += w * field.values[q];
                wsum += w;
            }
        }
    }
    if wsum > 1e-12 {
        acc / wsum
    } else {
        // Fall back to the nearest acceptable node in a 2-cell window.
        let mut best = (f64::INFINITY, 0.0);
        for dj in -2..=2 {
            for di in -2..=2 {
                if let Some(q) = domain.index_of(i0 + di, j0 + dj) {
                    if domain.depth(q) >= min_depth {
                        let (nx, ny) = domain.interior_nodes()[q];
                        let (px, py) = domain.coord(nx, ny);
                        let d2 = (px - x).powi(2) + (py - y).powi(2);
                        if d2 < best.0 {
                            best = (d2, field.values[q]);
                        }
                    }
                }
            }
        }
        best.1
    }
}

/// Boundary values of a field that is smooth inside the domain, estimated
/// at each ring node by sampling one and two mesh widths inward along the
/// estimated normal and extrapolating linearly out to the boundary point.
/// The ring-node value itself is never used: its stencil touches exterior
/// zeros and carries an O(1) masking artifact.
pub fn boundary_values(field: &ScalarField) -> Vec<f64> {
    let domain = field.domain();
    let h = domain.h;
    domain
        .ring()
        .iter()
        .map(|r| {
            let (ix, iy) = domain.interior_nodes()[r.interior];
            let (x, y) = domain.coord(ix, iy);
            let (nx, ny) = r.normal;
            let w1 = interp_clean(field, x - h * nx, y - h * ny, 1);
            let w2 = interp_clean(field, x - 2.0 * h * nx, y - 2.0 * h * ny, 1);
            // Samples sit at -h and -2h along the normal; the boundary is at
            // +dist.
            w1 + (w1 - w2) * (r.dist + h) / h
        })
        .collect()
}

/// Boundary trace of Delta u for an eigenpair, per ring node.
pub fn boundary_trace_of_laplacian(pair: &EigenPair) -> Vec<f64> {
    boundary_values(&laplacian_of(&pair.mode))
}

/// One-sided second-order normal derivative of a smooth-inside field at the
/// boundary. The five samples at -2h..-6h along the normal avoid the noisy
/// first layers; a least-squares quadratic through them is differentiated
/// at the boundary point.
pub fn boundary_normal_derivative(field: &ScalarField) -> Vec<f64> {
    let domain = field.domain();
    let h = domain.h;
    domain
        .ring()
        .iter()
        .map(|r| {
            let (ix, iy) = domain.interior_nodes()[r.interior];
            let (x, y) = domain.coord(ix, iy);
            let (nx, ny) = r.normal;
            let samples: Vec<(f64, f64)> = (2..=6)
                .map(|k| {
                    let s = -(k as f64) * h;
                    (s, interp_clean(field, x + s * nx, y + s * ny, 1))
                })
                .collect();
            quadratic_ls_derivative(&samples, r.dist)
        })
        .collect()
}

/// Least-squares quadratic through (s_i, w_i), differentiated at s = at.
#[allow(clippy::needless_range_loop)]
fn quadratic_ls_derivative(samples: &[(f64, f64)], at: f64) -> f64 {
    let mut m = [[0.0_f64; 3]; 3];
    let mut rhs = [0.0_f64; 3];
    for &(s, w) in samples {
        let basis = [1.0, s, s * s];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * w;
        }
    }
    // 3x3 Gaussian elimination with partial pivoting.
    let mut a = [
        [m[0][0], m[0][1], m[0][2], rhs[0]],
        [m[1][0], m[1][1], m[1][2], rhs[1]],
        [m[2][0], m[2][1], m[2][2], rhs[2]],
    ];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let c2 = a[2][3] / a[2][2];
    let c1 = (a[1][3] - a[1][2] * c2) / a[1][1];
    c1 + 2.0 * c2 * at
}

/// Component-respecting moving average along the ring ordering.
pub fn smooth_along_ring(domain: &Domain, values: &[f64], half_window: usize) -> Vec<f64> {
    let ring = domain.ring();
    let n = ring.len();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut cnt = 0.0;
            for off in -(half_window as i64)..=(half_window as i64) {
                let j = (i as i64 + off).rem_euclid(n as i64) as usize;
                if ring[j].component == ring[i].component {
                    acc += values[j];
                    cnt += 1.0;
                }
            }
            acc / cnt
        })
        .collect()
}

/// Normal derivative of Delta u on the boundary ring for an eigenpair.
pub fn normal_derivative_of_laplacian(pair: &EigenPair) -> Vec<f64> {
    boundary_normal_derivative(&laplacian_of(&pair.mode))
}
