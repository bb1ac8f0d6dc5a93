//! Discretized conformal coordinate charts and finite-difference primitives.
//!
//! Two chart kinds are supported: a rectangular torus with periods 1 and
//! i*rho (periodic wrap in both directions) and a square patch [-L,L]^2
//! carrying a circular interior mask of radius L (Dirichlet data lives on
//! the boundary ring). All fields are stored row-major, y-outer, x-inner;
//! this is also the canonical serialization order.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartKind {
    Torus { rho: f64 },
    Disk { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Outside the disk mask; never read or written by operators.
    Exterior,
    /// Boundary ring: domain node with at least one 4-neighbor off-domain.
    Ring,
    Interior,
}

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("node count must be at least 16 per axis, got {0}x{1}")]
    TooCoarse(usize, usize),
    #[error("chart parameter must be positive, got {0}")]
    NonPositiveParam(f64),
    #[error("disk interior mask is not connected")]
    DisconnectedMask,
}

#[derive(Debug)]
pub struct Chart {
    pub kind: ChartKind,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    class: Vec<NodeClass>,
}

impl Chart {
    pub fn torus(nx: usize, ny: usize, rho: f64) -> Result<Arc<Chart>, ChartError> {
        if nx < 16 || ny < 16 {
            return Err(ChartError::TooCoarse(nx, ny));
        }
        if rho <= 0.0 {
            return Err(ChartError::NonPositiveParam(rho));
        }
        Ok(Arc::new(Chart {
            kind: ChartKind::Torus { rho },
            nx,
            ny,
            hx: 1.0 / nx as f64,
            hy: rho / ny as f64,
            class: vec![NodeClass::Interior; nx * ny],
        }))
    }

    pub fn disk(nx: usize, ny: usize, half_width: f64) -> Result<Arc<Chart>, ChartError> {
        if nx < 16 || ny < 16 {
            return Err(ChartError::TooCoarse(nx, ny));
        }
        if half_width <= 0.0 {
            return Err(ChartError::NonPositiveParam(half_width));
        }
        let hx = 2.0 * half_width / (nx - 1) as f64;
        let hy = 2.0 * half_width / (ny - 1) as f64;
        let coord = |i: usize, h: f64| -half_width + i as f64 * h;
        let in_disk = |i: usize, j: usize| -> bool {
            let x = coord(i, hx);
            let y = coord(j, hy);
            x * x + y * y < half_width * half_width
        };
        let mut class = vec![NodeClass::Exterior; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if !in_disk(i, j) {
                    continue;
                }
                let interior = i > 0
                    && i + 1 < nx
                    && j > 0
                    && j + 1 < ny
                    && in_disk(i - 1, j)
                    && in_disk(i + 1, j)
                    && in_disk(i, j - 1)
                    && in_disk(i, j + 1);
                class[j * nx + i] = if interior {
                    NodeClass::Interior
                } else {
                    NodeClass::Ring
                };
            }
        }
        let chart = Chart {
            kind: ChartKind::Disk { half_width },
            nx,
            ny,
            hx,
            hy,
            class,
        };
        if !chart.domain_connected() {
            return Err(ChartError::DisconnectedMask);
        }
        Ok(Arc::new(chart))
    }

    fn domain_connected(&self) -> bool {
        let n = self.nx * self.ny;
        let start = match (0..n).find(|&k| self.class[k] != NodeClass::Exterior) {
            Some(k) => k,
            None => return false,
        };
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1usize;
        while let Some(k) = stack.pop() {
            let (i, j) = (k % self.nx, k / self.nx);
            let mut push = |ni: usize, nj: usize| {
                let nk = nj * self.nx + ni;
                if !seen[nk] && self.class[nk] != NodeClass::Exterior {
                    seen[nk] = true;
                    stack.push(nk);
                    count += 1;
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < self.nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < self.ny {
                push(i, j + 1);
            }
        }
        count
            == self
                .class
                .iter()
                .filter(|c| **c != NodeClass::Exterior)
                .count()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        match self.kind {
            ChartKind::Torus { .. } => i as f64 * self.hx,
            ChartKind::Disk { half_width } => -half_width + i as f64 * self.hx,
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        match self.kind {
            ChartKind::Torus { .. } => j as f64 * self.hy,
            ChartKind::Disk { half_width } => -half_width + j as f64 * self.hy,
        }
    }

    #[inline]
    pub fn class(&self, k: usize) -> NodeClass {
        self.class[k]
    }

    #[inline]
    pub fn is_domain(&self, k: usize) -> bool {
        self.class[k] != NodeClass::Exterior
    }

    #[inline]
    pub fn is_interior(&self, k: usize) -> bool {
        self.class[k] == NodeClass::Interior
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, ChartKind::Torus { .. })
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Stencil neighbor indices (left, right, down, up) of an interior node.
    /// Periodic wrap on the torus; disk interior nodes never wrap.
    #[inline]
    pub fn neighbors(&self, k: usize) -> [usize; 4] {
        let (i, j) = (k % self.nx, k / self.nx);
        match self.kind {
            ChartKind::Torus { .. } => {
                let im = if i == 0 { self.nx - 1 } else { i - 1 };
                let ip = if i + 1 == self.nx { 0 } else { i + 1 };
                let jm = if j == 0 { self.ny - 1 } else { j - 1 };
                let jp = if j + 1 == self.ny { 0 } else { j + 1 };
                [
                    self.idx(im, j),
                    self.idx(ip, j),
                    self.idx(i, jm),
                    self.idx(i, jp),
                ]
            }
            ChartKind::Disk { .. } => [
                self.idx(i - 1, j),
                self.idx(i + 1, j),
                self.idx(i, j - 1),
                self.idx(i, j + 1),
            ],
        }
    }
}

pub fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> bool {
    Arc::ptr_eq(a, b)
}

fn assert_same_chart(a: &Arc<Chart>, b: &Arc<Chart>) {
    assert!(same_chart(a, b), "fields defined on different charts");
}

/// Numeric sample type a field can hold. Implemented for f64 and Complex64.
pub trait Sample:
    Copy
    + Default
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
    fn abs_value(self) -> f64;
}

impl Sample for f64 {
    fn abs_value(self) -> f64 {
        self.abs()
    }
}

impl Sample for Complex64 {
    fn abs_value(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone)]
pub struct Field<T: Sample> {
    chart: Arc<Chart>,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Sample> Field<T> {
    pub fn zeros(chart: &Arc<Chart>) -> Self {
        Field {
            chart: chart.clone(),
            values: vec![T::default(); chart.len()],
        }
    }

    pub fn constant(chart: &Arc<Chart>, c: T) -> Self {
        let mut f = Self::zeros(chart);
        for k in 0..chart.len() {
            if chart.is_domain(k) {
                f.values[k] = c;
            }
        }
        f
    }

    /// Sample a closure of the chart coordinates at every domain node.
    pub fn from_fn(chart: &Arc<Chart>, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut out = Self::zeros(chart);
        for j in 0..chart.ny {
            for i in 0..chart.nx {
                let k = chart.idx(i, j);
                if chart.is_domain(k) {
                    out.values[k] = f(chart.x(i), chart.y(j));
                }
            }
        }
        out
    }

    pub fn from_values(chart: &Arc<Chart>, values: Vec<T>) -> Self {
        assert_eq!(values.len(), chart.len(), "value buffer length mismatch");
        Field {
            chart: chart.clone(),
            values,
        }
    }

    #[inline]
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, k: usize) -> T {
        self.values[k]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.chart.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.chart.idx(i, j);
        self.values[k] = v;
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut out = Self::zeros(&self.chart);
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                out.values[k] = f(self.values[k]);
            }
        }
        out
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_same_chart(&self.chart, &other.chart);
        let mut out = Self::zeros(&self.chart);
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                out.values[k] = f(self.values[k], other.values[k]);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Centered x-difference; valid at interior nodes, zero elsewhere.
    pub fn dx(&self) -> Self {
        let c = &self.chart;
        let mut out = Self::zeros(c);
        let w = 0.5 / c.hx;
        for k in 0..self.values.len() {
            if c.is_interior(k) {
                let [l, r, _, _] = c.neighbors(k);
                out.values[k] = (self.values[r] - self.values[l]) * w;
            }
        }
        out
    }

    /// Centered y-difference; valid at interior nodes, zero elsewhere.
    pub fn dy(&self) -> Self {
        let c = &self.chart;
        let mut out = Self::zeros(c);
        let w = 0.5 / c.hy;
        for k in 0..self.values.len() {
            if c.is_interior(k) {
                let [_, _, d, u] = c.neighbors(k);
                out.values[k] = (self.values[u] - self.values[d]) * w;
            }
        }
        out
    }

    /// Standard 5-point Laplacian; valid at interior nodes, zero elsewhere.
    pub fn laplacian(&self) -> Self {
        let c = &self.chart;
        let mut out = Self::zeros(c);
        let wx = 1.0 / (c.hx * c.hx);
        let wy = 1.0 / (c.hy * c.hy);
        for k in 0..self.values.len() {
            if c.is_interior(k) {
                let [l, r, d, u] = c.neighbors(k);
                let v = self.values[k];
                out.values[k] = (self.values[l] + self.values[r] - v * 2.0) * wx
                    + (self.values[d] + self.values[u] - v * 2.0) * wy;
            }
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                m = m.max(self.values[k].abs_value());
            }
        }
        m
    }

    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                let a = self.values[k].abs_value();
                s += a * a;
            }
        }
        (s * self.chart.cell_area()).sqrt()
    }

    pub fn assert_finite(&self) {
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                assert!(
                    self.values[k].abs_value().is_finite(),
                    "non-finite field value at node {k}"
                );
            }
        }
    }
}

impl ScalarField {
    pub fn integrate(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                s += self.values[k];
            }
        }
        s * self.chart.cell_area()
    }

    /// Mean over domain nodes (unweighted; uniform cells).
    pub fn mean(&self) -> f64 {
        let mut s = 0.0;
        let mut n = 0usize;
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                s += self.values[k];
                n += 1;
            }
        }
        s / n as f64
    }

    pub fn exp(&self) -> Self {
        self.map(f64::exp)
    }

    /// Dot product over interior nodes (used by the inner linear solver).
    pub fn dot_interior(&self, other: &Self) -> f64 {
        assert_same_chart(&self.chart, &other.chart);
        let mut s = 0.0;
        for k in 0..self.values.len() {
            if self.chart.is_interior(k) {
                s += self.values[k] * other.values[k];
            }
        }
        s
    }

    pub fn sup_norm_interior(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 0..self.values.len() {
            if self.chart.is_interior(k) {
                m = m.max(self.values[k].abs());
            }
        }
        m
    }
}

impl ComplexField {
    pub fn re(&self) -> ScalarField {
        let mut out = ScalarField::zeros(&self.chart);
        for k in 0..self.values.len() {
            out.values_mut()[k] = self.values[k].re;
        }
        out
    }

    pub fn im(&self) -> ScalarField {
        let mut out = ScalarField::zeros(&self.chart);
        for k in 0..self.values.len() {
            out.values_mut()[k] = self.values[k].im;
        }
        out
    }

    pub fn from_parts(re: &ScalarField, im: &ScalarField) -> Self {
        assert_same_chart(re.chart(), im.chart());
        let values = re
            .values()
            .iter()
            .zip(im.values())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        ComplexField::from_values(re.chart(), values)
    }

    pub fn norm_sqr_field(&self) -> ScalarField {
        let mut out = ScalarField::zeros(&self.chart);
        for k in 0..self.values.len() {
            if self.chart.is_domain(k) {
                out.values_mut()[k] = self.values[k].norm_sqr();
            }
        }
        out
    }

    /// Discrete Wirtinger derivatives (del f, del-bar f) via centered
    /// differences: del = (dx - i dy)/2, del-bar = (dx + i dy)/2.
    pub fn wirtinger(&self) -> (ComplexField, ComplexField) {
        let fx = self.dx();
        let fy = self.dy();
        let i = Complex64::new(0.0, 1.0);
        let del = fx.zip_map(&fy, |a, b| (a - i * b) * 0.5);
        let dbar = fx.zip_map(&fy, |a, b| (a + i * b) * 0.5);
        (del, dbar)
    }
}

/// Real 1-form with components (tau_x, tau_y) on a shared chart.
#[derive(Debug, Clone)]
pub struct OneFormField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl OneFormField {
    pub fn new(x: ScalarField, y: ScalarField) -> Self {
        assert_same_chart(x.chart(), y.chart());
        OneFormField { x, y }
    }

    pub fn zeros(chart: &Arc<Chart>) -> Self {
        OneFormField {
            x: ScalarField::zeros(chart),
            y: ScalarField::zeros(chart),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.x.chart()
    }

    /// Exterior derivative coefficient: (d tau)_xy = dx tau_y - dy tau_x.
    pub fn d(&self) -> ScalarField {
        self.y.dx().sub(&self.x.dy())
    }

    pub fn sup_norm(&self) -> f64 {
        self.x.sup_norm().max(self.y.sup_norm())
    }
}
