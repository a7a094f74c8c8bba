//! Uniform rectangular lattices in one or two dimensions, nodal scalar
//! fields and the staggered gradient/divergence pair.
//!
//! Gradients live on *samples*. In 1D there is one sample per cell, at its
//! midpoint. In 2D every cell carries four samples at the midpoints of its
//! edges, each holding the full gradient of the bilinear interpolant at that
//! point. The samples of a cell are ordered bottom, top, left, right. All
//! samples carry the same quadrature weight (cell volume / samples per cell)
//! and the rule integrates the gradient of any bilinear function exactly, so
//! `divergence` is the exact negative adjoint of `gradient` on fields that
//! vanish on the boundary.

use std::io::Write;

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a point sits inside the domain.
const INSIDE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    counts: [usize; 2],
    lower: [f64; 2],
    spacing: [f64; 2],
}

/// Nodes touched by one gradient sample together with the coefficients that
/// map nodal values to the sample's gradient vector.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub nodes: [usize; 4],
    pub coef: [[f64; 2]; 4],
    pub len: usize,
}

impl Stencil {
    pub fn iter(&self) -> impl Iterator<Item = (usize, [f64; 2])> + '_ {
        (0..self.len).map(move |k| (self.nodes[k], self.coef[k]))
    }
}

impl Grid {
    /// Builds a grid from per-axis node counts and physical bounds.
    pub fn new(counts: &[usize], lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = counts.len();
        if !(1..=2).contains(&dim) || lower.len() != dim || upper.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2 with matching bounds (got {} counts, {} lower, {} upper)",
                counts.len(),
                lower.len(),
                upper.len()
            )));
        }
        let mut g = Grid {
            dim,
            counts: [1, 1],
            lower: [0.0, 0.0],
            spacing: [1.0, 1.0],
        };
        for a in 0..dim {
            if counts[a] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} nodes, need at least 3",
                    counts[a]
                )));
            }
            let extent = upper[a] - lower[a];
            if !(extent.is_finite() && extent > 0.0 && lower[a].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} bounds [{}, {}] are not an increasing finite interval",
                    lower[a], upper[a]
                )));
            }
            g.counts[a] = counts[a];
            g.lower[a] = lower[a];
            g.spacing[a] = extent / (counts[a] - 1) as f64;
        }
        Ok(g)
    }

    pub fn new_1d(nodes: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(&[nodes], &[lower], &[upper])
    }

    pub fn new_2d(nodes: [usize; 2], lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        Self::new(&nodes, &lower, &upper)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    /// Smallest spacing over all axes.
    pub fn h(&self) -> f64 {
        self.spacing[..self.dim]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.lower[axis] + self.extent(axis)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.spacing[axis] * (self.counts[axis] - 1) as f64
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a)).product()
    }

    pub fn num_nodes(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn node_index(&self, multi: [usize; 2]) -> usize {
        multi[0] + self.counts[0] * multi[1]
    }

    pub fn node_multi(&self, idx: usize) -> [usize; 2] {
        [idx % self.counts[0], idx / self.counts[0]]
    }

    /// Physical coordinates of a node; the second entry is 0 in 1D.
    pub fn node_coords(&self, idx: usize) -> [f64; 2] {
        let m = self.node_multi(idx);
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.lower[a] + m[a] as f64 * self.spacing[a];
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.node_multi(idx);
        (0..self.dim).any(|a| m[a] == 0 || m[a] + 1 == self.counts[a])
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(move |&i| self.is_boundary(i))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(move |&i| !self.is_boundary(i))
    }

    /// Volume of one cell (`h` in 1D, `hx*hy` in 2D).
    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    /// Trapezoid quadrature weight of a node.
    pub fn node_weight(&self, idx: usize) -> f64 {
        let m = self.node_multi(idx);
        let mut w = self.cell_volume();
        for a in 0..self.dim {
            if m[a] == 0 || m[a] + 1 == self.counts[a] {
                w *= 0.5;
            }
        }
        w
    }

    pub fn num_cells(&self) -> usize {
        (0..self.dim).map(|a| self.counts[a] - 1).product()
    }

    pub fn samples_per_cell(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            4
        }
    }

    pub fn num_samples(&self) -> usize {
        self.num_cells() * self.samples_per_cell()
    }

    pub fn sample_weight(&self) -> f64 {
        self.cell_volume() / self.samples_per_cell() as f64
    }

    fn cell_corners(&self, cell: usize) -> (usize, usize, [usize; 4]) {
        let cx = self.counts[0] - 1;
        let (i, j) = (cell % cx, cell / cx);
        let nx = self.counts[0];
        let a = i + nx * j;
        (i, j, [a, a + 1, a + nx, a + nx + 1])
    }

    pub fn sample_position(&self, s: usize) -> [f64; 2] {
        if self.dim == 1 {
            return [self.lower[0] + (s as f64 + 0.5) * self.spacing[0], 0.0];
        }
        let (i, j, _) = self.cell_corners(s / 4);
        let x = |t: f64| self.lower[0] + t * self.spacing[0];
        let y = |t: f64| self.lower[1] + t * self.spacing[1];
        let (i, j) = (i as f64, j as f64);
        match s % 4 {
            0 => [x(i + 0.5), y(j)],
            1 => [x(i + 0.5), y(j + 1.0)],
            2 => [x(i), y(j + 0.5)],
            _ => [x(i + 1.0), y(j + 0.5)],
        }
    }

    /// The two nodes spanning the edge a sample sits on.
    pub fn sample_edge(&self, s: usize) -> [usize; 2] {
        if self.dim == 1 {
            return [s, s + 1];
        }
        let (_, _, [a, b, c, d]) = self.cell_corners(s / 4);
        match s % 4 {
            0 => [a, b],
            1 => [c, d],
            2 => [a, c],
            _ => [b, d],
        }
    }

    pub fn stencil(&self, s: usize) -> Stencil {
        if self.dim == 1 {
            let ih = 1.0 / self.spacing[0];
            return Stencil {
                nodes: [s, s + 1, 0, 0],
                coef: [[-ih, 0.0], [ih, 0.0], [0.0; 2], [0.0; 2]],
                len: 2,
            };
        }
        let (_, _, nodes) = self.cell_corners(s / 4);
        let ix = 1.0 / self.spacing[0];
        let iy = 1.0 / self.spacing[1];
        let (hx, hy) = (0.5 * ix, 0.5 * iy);
        // Corner order a=(i,j) b=(i+1,j) c=(i,j+1) d=(i+1,j+1).
        let coef = match s % 4 {
            0 => [[-ix, -hy], [ix, -hy], [0.0, hy], [0.0, hy]],
            1 => [[0.0, -hy], [0.0, -hy], [-ix, hy], [ix, hy]],
            2 => [[-hx, -iy], [hx, 0.0], [-hx, iy], [hx, 0.0]],
            _ => [[-hx, 0.0], [hx, -iy], [-hx, 0.0], [hx, iy]],
        };
        Stencil {
            nodes,
            coef,
            len: 4,
        }
    }

    /// True when `point` lies in the closed domain.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim
            && (0..self.dim).all(|a| {
                let slack = INSIDE_SLACK * self.extent(a);
                point[a] >= self.lower[a] - slack && point[a] <= self.upper(a) + slack
            })
    }

    /// Distance from `point` to the domain boundary (negative outside).
    pub fn distance_to_boundary(&self, point: &[f64]) -> f64 {
        (0..self.dim)
            .map(|a| (point[a] - self.lower[a]).min(self.upper(a) - point[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Cell multi-index containing `point` and the local coordinates in [0, 1].
    fn locate(&self, point: &[f64]) -> Result<([usize; 2], [f64; 2])> {
        if !self.contains(point) {
            return Err(Error::OutsideDomain(point.to_vec()));
        }
        let mut cell = [0usize; 2];
        let mut xi = [0.0; 2];
        for a in 0..self.dim {
            let t = ((point[a] - self.lower[a]) / self.spacing[a]).max(0.0);
            let i = (t.floor() as usize).min(self.counts[a] - 2);
            cell[a] = i;
            xi[a] = (t - i as f64).clamp(0.0, 1.0);
        }
        Ok((cell, xi))
    }

    /// Node indices within Euclidean distance `radius` of `center`.
    pub fn nodes_in_ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut lo = [0usize; 2];
        let mut hi = [0usize; 2];
        for a in 0..self.dim {
            let last = (self.counts[a] - 1) as f64;
            let t0 = ((center[a] - radius - self.lower[a]) / self.spacing[a]).ceil();
            let t1 = ((center[a] + radius - self.lower[a]) / self.spacing[a]).floor();
            if t1 < 0.0 || t0 > last || t0 > t1 {
                return Vec::new();
            }
            lo[a] = t0.max(0.0) as usize;
            hi[a] = t1.min(last) as usize;
        }
        let r2 = radius * radius;
        let mut out = Vec::new();
        let jr = if self.dim == 1 { 0..=0 } else { lo[1]..=hi[1] };
        for j in jr {
            for i in lo[0]..=hi[0] {
                let idx = self.node_index([i, j]);
                let x = self.node_coords(idx);
                let d2: f64 = (0..self.dim).map(|a| (x[a] - center[a]).powi(2)).sum();
                if d2 <= r2 {
                    out.push(idx);
                }
            }
        }
        out
    }
}

/// One real value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.num_nodes(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at node {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.num_nodes()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.num_nodes()],
        }
    }

    /// Samples `f` at every node. `f` receives the coordinate slice of length `dim`.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.num_nodes())
            .map(|i| f(&grid.node_coords(i)[..grid.dim()]))
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Trapezoid integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.node_weight(i))
            .sum()
    }

    /// Writes `node,x[,y],value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if self.grid.dim() == 1 {
            writeln!(w, "node,x,value")?;
        } else {
            writeln!(w, "node,x,y,value")?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let x = self.grid.node_coords(i);
            if self.grid.dim() == 1 {
                writeln!(w, "{i},{},{}", x[0], v)?;
            } else {
                writeln!(w, "{i},{},{},{}", x[0], x[1], v)?;
            }
        }
        Ok(())
    }
}

/// A `dim`-vector per gradient sample.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            values: vec![0.0; grid.num_samples() * grid.dim()],
        }
    }

    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_samples() * grid.dim() {
            return Err(Error::InvalidField(format!(
                "expected {} vector entries, got {}",
                grid.num_samples() * grid.dim(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite vector entry".into()));
        }
        Ok(VectorField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> [f64; 2]) -> Self {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.num_samples() * d);
        for s in 0..grid.num_samples() {
            let v = f(&grid.sample_position(s)[..d]);
            values.extend_from_slice(&v[..d]);
        }
        VectorField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, s: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.values[s * d..(s + 1) * d]
    }

    pub fn get_mut(&mut self, s: usize) -> &mut [f64] {
        let d = self.grid.dim();
        &mut self.values[s * d..(s + 1) * d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Euclidean length of the vector at sample `s`.
    pub fn norm_at(&self, s: usize) -> f64 {
        self.get(s).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Quadrature inner product over all samples.
    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let w = self.grid.sample_weight();
        Ok(w * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>())
    }
}

pub(crate) fn ensure_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Gradient at every sample. Exact for affine fields.
pub fn gradient(u: &ScalarField) -> VectorField {
    let grid = *u.grid();
    let d = grid.dim();
    let mut out = VectorField::zeros(grid);
    for s in 0..grid.num_samples() {
        let st = grid.stencil(s);
        let g = out.get_mut(s);
        for (n, c) in st.iter() {
            for a in 0..d {
                g[a] += c[a] * u.values[n];
            }
        }
    }
    out
}

/// Discrete divergence at interior nodes, defined as the negative adjoint of
/// [`gradient`] under the sample and nodal quadratures. Boundary entries are 0.
pub fn divergence(field: &VectorField) -> ScalarField {
    let grid = *field.grid();
    let d = grid.dim();
    let w = grid.sample_weight();
    let mut acc = vec![0.0; grid.num_nodes()];
    for s in 0..grid.num_samples() {
        let st = grid.stencil(s);
        let f = field.get(s);
        for (n, c) in st.iter() {
            let mut dot = 0.0;
            for a in 0..d {
                dot += c[a] * f[a];
            }
            acc[n] -= w * dot;
        }
    }
    let vol = grid.cell_volume();
    for (i, v) in acc.iter_mut().enumerate() {
        if grid.is_boundary(i) {
            *v = 0.0;
        } else {
            *v /= vol;
        }
    }
    ScalarField { grid, values: acc }
}

/// Multilinear interpolation of nodal values.
pub fn interpolate(u: &ScalarField, point: &[f64]) -> Result<f64> {
    interpolate_values(u.grid(), u.values(), point)
}

pub(crate) fn interpolate_values(grid: &Grid, values: &[f64], point: &[f64]) -> Result<f64> {
    let (cell, xi) = grid.locate(point)?;
    if grid.dim() == 1 {
        let i = cell[0];
        return Ok((1.0 - xi[0]) * values[i] + xi[0] * values[i + 1]);
    }
    let a = grid.node_index(cell);
    let nx = grid.counts()[0];
    let (ua, ub, uc, ud) = (values[a], values[a + 1], values[a + nx], values[a + nx + 1]);
    let (s, t) = (xi[0], xi[1]);
    Ok((1.0 - s) * (1.0 - t) * ua + s * (1.0 - t) * ub + (1.0 - s) * t * uc + s * t * ud)
}

/// Nodal gradient by central differences (one-sided at the boundary).
pub fn nodal_gradient(u: &ScalarField) -> Vec<[f64; 2]> {
    let grid = u.grid();
    let v = u.values();
    (0..grid.num_nodes())
        .map(|idx| {
            let m = grid.node_multi(idx);
            let mut g = [0.0; 2];
            for a in 0..grid.dim() {
                let stride = if a == 0 { 1 } else { grid.counts()[0] };
                let h = grid.spacing(a);
                let n = grid.counts()[a];
                g[a] = if m[a] == 0 {
                    (v[idx + stride] - v[idx]) / h
                } else if m[a] + 1 == n {
                    (v[idx] - v[idx - stride]) / h
                } else {
                    (v[idx + stride] - v[idx - stride]) / (2.0 * h)
                };
            }
            g
        })
        .collect()
}

/// Interpolated gradient at an arbitrary point, built from [`nodal_gradient`].
pub fn interpolate_gradient(grid: &Grid, nodal: &[[f64; 2]], point: &[f64]) -> Result<[f64; 2]> {
    let gx: Vec<f64> = nodal.iter().map(|g| g[0]).collect();
    let mut out = [interpolate_values(grid, &gx, point)?, 0.0];
    if grid.dim() == 2 {
        let gy: Vec<f64> = nodal.iter().map(|g| g[1]).collect();
        out[1] = interpolate_values(grid, &gy, point)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid2() -> Grid {
        Grid::new_2d([7, 5], [0.0, -1.0], [1.2, 0.0]).unwrap()
    }

    #[test]
    fn rejects_small_or_inverted_grids() {
        assert!(Grid::new_1d(2, 0.0, 1.0).is_err());
        assert!(Grid::new_1d(5, 1.0, 0.0).is_err());
        assert!(Grid::new(&[3, 3, 3], &[0.0; 3], &[1.0; 3]).is_err());
        let g = Grid::new_1d(11, 0.0, 1.0).unwrap();
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
        assert!((g.extent(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_exact_on_affine() {
        for grid in [Grid::new_1d(9, 0.0, 2.0).unwrap(), grid2()] {
            let u = ScalarField::from_fn(grid, |x| 3.0 * x[0] + 1.0);
            let g = gradient(&u);
            for s in 0..grid.num_samples() {
                assert!((g.get(s)[0] - 3.0).abs() < 1e-12);
                if grid.dim() == 2 {
                    assert!(g.get(s)[1].abs() < 1e-12);
                }
            }
            let c = gradient(&ScalarField::constant(grid, 5.0));
            assert!(c.values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn gradient_of_square_hits_face_midpoints() {
        let grid = Grid::new_2d([11, 11], [0.0, 0.0], [1.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0] * x[0]);
        let g = gradient(&u);
        // x-differences are exact at the cell's x-midpoint on every edge
        for s in 0..grid.num_samples() {
            let xm = 0.1 * ((s / 4) % 10) as f64 + 0.05;
            assert!((g.get(s)[0] - 2.0 * xm).abs() < 1e-12, "sample {s}");
            assert!(g.get(s)[1].abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_constant_and_of_square() {
        for grid in [Grid::new_1d(9, 0.0, 1.0).unwrap(), grid2()] {
            let f = VectorField::from_fn(grid, |_| [0.7, -1.3]);
            let div = divergence(&f);
            assert!(div.values().iter().all(|v| v.abs() < 1e-10));
            let sq = gradient(&ScalarField::from_fn(grid, |x| x[0] * x[0]));
            let lap = divergence(&sq);
            for i in grid.interior_nodes() {
                assert!((lap.values()[i] - 2.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn summation_by_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for grid in [
            Grid::new_1d(17, 0.0, 1.0).unwrap(),
            grid2(),
            Grid::new_2d([12, 9], [0.0, 0.0], [1.0, 0.5]).unwrap(),
        ] {
            let fvals: Vec<f64> = (0..grid.num_samples() * grid.dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let f = VectorField::new(grid, fvals).unwrap();
            let phi = ScalarField::from_fn(grid, |_| 0.0);
            let mut phi = phi;
            for i in grid.interior_nodes() {
                phi.values_mut()[i] = rng.random_range(-1.0..1.0);
            }
            let div = divergence(&f);
            let lhs: f64 = (0..grid.num_nodes())
                .map(|i| grid.cell_volume() * div.values()[i] * phi.values()[i])
                .sum();
            let rhs = f.dot(&gradient(&phi)).unwrap();
            let scale =
                f.dot(&f).unwrap().sqrt() * phi.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((lhs + rhs).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn interpolation_reproduces_affine_and_bilinear() {
        let grid = grid2();
        let u = ScalarField::from_fn(grid, |x| 2.0 * x[0] - 0.5 * x[1] + 0.25);
        for p in [[0.33, -0.41], [1.2, 0.0], [0.0, -1.0], [0.6, -0.5]] {
            let v = interpolate(&u, &p).unwrap();
            assert!((v - (2.0 * p[0] - 0.5 * p[1] + 0.25)).abs() < 1e-12);
        }
        let w = ScalarField::from_fn(grid, |x| x[0] * x[1]);
        let (hx, hy) = (grid.spacing(0), grid.spacing(1));
        let c = [2.5 * hx, -1.0 + 1.5 * hy];
        assert!((interpolate(&w, &c).unwrap() - c[0] * c[1]).abs() < 1e-12);
        let node = grid.node_index([3, 2]);
        let x = grid.node_coords(node);
        assert_eq!(interpolate(&w, &x).unwrap(), w.values()[node]);
        assert!(matches!(
            interpolate(&w, &[2.0, 0.0]),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn gradient_then_interpolate_affine_is_exact() {
        let grid = grid2();
        let u = ScalarField::from_fn(grid, |x| -x[0] + 4.0 * x[1]);
        let ng = nodal_gradient(&u);
        let g = interpolate_gradient(&grid, &ng, &[0.77, -0.31]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12 && (g[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_weights_sum_to_measure() {
        let grid = grid2();
        let total: f64 = (0..grid.num_nodes()).map(|i| grid.node_weight(i)).sum();
        assert!((total - grid.measure()).abs() < 1e-12);
        let w: f64 = grid.sample_weight() * grid.num_samples() as f64;
        assert!((w - grid.measure()).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let grid = Grid::new_1d(3, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0]);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "node,x,value\n0,0,0\n1,0.5,0.5\n2,1,1\n");
    }
}
