//! Symmetric tensor algebra and Riemannian differential operators in 2D
//! conformal coordinates: trace decompositions, divergences, curvature and
//! the residuals that certify a statistical structure.
//!
//! Conventions (fixed once, everything downstream depends on them):
//!   - metric g = e^u (dx^2 + dy^2), Hermitian coefficient h = e^u;
//!   - curvature S_g = 2K = -e^{-u} * laplacian(u);
//!   - |C|^2 is the full g^{-1} contraction over all three slots;
//!   - trace3 contracts the last two slots.

use std::sync::Arc;

use thiserror::Error;

use crate::grid::{Chart, ComplexField, OneFormField, ScalarField};

#[derive(Debug, Error)]
pub enum TensorError {
    #[error(
        "cubic extraction on a non-traceless tensor: relative trace norm {0:.3e} exceeds {1:.0e}"
    )]
    NotTraceless(f64, f64),
}

/// Relative tolerance for the tracelessness precondition of [`extract_cubic`].
pub const TRACELESS_TOL: f64 = 1e-10;

/// Conformal metric g = e^u (dx^2 + dy^2) stored through its log-factor u.
#[derive(Debug, Clone)]
pub struct ConformalMetric {
    pub u: ScalarField,
}

impl ConformalMetric {
    pub fn new(u: ScalarField) -> Self {
        ConformalMetric { u }
    }

    pub fn flat(chart: &Arc<Chart>) -> Self {
        ConformalMetric {
            u: ScalarField::zeros(chart),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.u.chart()
    }

    /// Hermitian coefficient h = e^u.
    pub fn h(&self) -> ScalarField {
        self.u.exp()
    }

    /// Inverse metric coefficient e^{-u}.
    pub fn h_inv(&self) -> ScalarField {
        self.u.map(|v| (-v).exp())
    }
}

/// Totally symmetric (0,3) tensor; 4 independent components in 2D.
#[derive(Debug, Clone)]
pub struct Sym3Tensor {
    pub xxx: ScalarField,
    pub xxy: ScalarField,
    pub xyy: ScalarField,
    pub yyy: ScalarField,
}

impl Sym3Tensor {
    pub fn zeros(chart: &Arc<Chart>) -> Self {
        Sym3Tensor {
            xxx: ScalarField::zeros(chart),
            xxy: ScalarField::zeros(chart),
            xyy: ScalarField::zeros(chart),
            yyy: ScalarField::zeros(chart),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.xxx.chart()
    }

    pub fn components(&self) -> [&ScalarField; 4] {
        [&self.xxx, &self.xxy, &self.xyy, &self.yyy]
    }

    /// Component value at node k for indices i,j,k in {0,1} (0 = x, 1 = y);
    /// total symmetry means only the number of y-indices matters.
    #[inline]
    pub fn comp_at(&self, node: usize, i: usize, j: usize, l: usize) -> f64 {
        match i + j + l {
            0 => self.xxx.at(node),
            1 => self.xxy.at(node),
            2 => self.xyy.at(node),
            _ => self.yyy.at(node),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Sym3Tensor {
            xxx: self.xxx.add(&other.xxx),
            xxy: self.xxy.add(&other.xxy),
            xyy: self.xyy.add(&other.xyy),
            yyy: self.yyy.add(&other.yyy),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Sym3Tensor {
            xxx: self.xxx.sub(&other.xxx),
            xxy: self.xxy.sub(&other.xxy),
            xyy: self.xyy.sub(&other.xyy),
            yyy: self.yyy.sub(&other.yyy),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym3Tensor {
            xxx: self.xxx.scale(s),
            xxy: self.xxy.scale(s),
            xyy: self.xyy.scale(s),
            yyy: self.yyy.scale(s),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.components()
            .iter()
            .map(|f| f.sup_norm())
            .fold(0.0, f64::max)
    }
}

/// Symmetric (0,2) tensor; holds covariant derivatives of 1-forms and
/// tensor divergences.
#[derive(Debug, Clone)]
pub struct Sym2Tensor {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl Sym2Tensor {
    pub fn zeros(chart: &Arc<Chart>) -> Self {
        Sym2Tensor {
            xx: ScalarField::zeros(chart),
            xy: ScalarField::zeros(chart),
            yy: ScalarField::zeros(chart),
        }
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.xx, &self.xy, &self.yy]
    }

    #[inline]
    pub fn comp_at(&self, node: usize, i: usize, j: usize) -> f64 {
        match i + j {
            0 => self.xx.at(node),
            1 => self.xy.at(node),
            _ => self.yy.at(node),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Sym2Tensor {
            xx: self.xx.sub(&other.xx),
            xy: self.xy.sub(&other.xy),
            yy: self.yy.sub(&other.yy),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym2Tensor {
            xx: self.xx.scale(s),
            xy: self.xy.scale(s),
            yy: self.yy.scale(s),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.components()
            .iter()
            .map(|f| f.sup_norm())
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.components()
            .iter()
            .map(|f| f.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Coefficient field q of the cubic differential Q = q dz^3.
#[derive(Debug, Clone)]
pub struct CubicDifferential {
    pub q: ComplexField,
}

/// Coefficient field w of the Abelian differential omega = w dz.
#[derive(Debug, Clone)]
pub struct AbelianDifferential {
    pub w: ComplexField,
}

/// Levi-Civita Christoffel symbols of a conformal metric. Derivative-based;
/// valid at interior nodes, zero on the boundary ring.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub x_xx: ScalarField,
    pub x_xy: ScalarField,
    pub x_yy: ScalarField,
    pub y_xx: ScalarField,
    pub y_xy: ScalarField,
    pub y_yy: ScalarField,
}

impl Christoffel {
    /// Symbol Gamma^k_{ij} at a node, indices in {0,1}.
    #[inline]
    pub fn at(&self, node: usize, k: usize, i: usize, j: usize) -> f64 {
        match (k, i + j) {
            (0, 0) => self.x_xx.at(node),
            (0, 1) => self.x_xy.at(node),
            (0, _) => self.x_yy.at(node),
            (_, 0) => self.y_xx.at(node),
            (_, 1) => self.y_xy.at(node),
            _ => self.y_yy.at(node),
        }
    }
}

/// Christoffel symbols of g = e^u delta: all six are +/- half a gradient
/// component of u.
pub fn christoffel(g: &ConformalMetric) -> Christoffel {
    let ux = g.u.dx();
    let uy = g.u.dy();
    Christoffel {
        x_xx: ux.scale(0.5),
        x_xy: uy.scale(0.5),
        x_yy: ux.scale(-0.5),
        y_xx: uy.scale(-0.5),
        y_xy: ux.scale(0.5),
        y_yy: uy.scale(0.5),
    }
}

/// Metric trace over the last two slots: tau_i = e^{-u} (c_ixx + c_iyy).
pub fn trace3(c: &Sym3Tensor, g: &ConformalMetric) -> OneFormField {
    let hi = g.h_inv();
    let tx = c.xxx.add(&c.xyy).zip_map(&hi, |a, b| a * b);
    let ty = c.xxy.add(&c.yyy).zip_map(&hi, |a, b| a * b);
    OneFormField::new(tx, ty)
}

/// Pure-trace symmetric tensor sym(tau (x) g)(u,v,w) =
/// tau(u)g(v,w) + tau(v)g(w,u) + tau(w)g(u,v).
pub fn sym_trace_tensor(tau: &OneFormField, g: &ConformalMetric) -> Sym3Tensor {
    let h = g.h();
    Sym3Tensor {
        xxx: tau.x.zip_map(&h, |t, e| 3.0 * t * e),
        xxy: tau.y.zip_map(&h, |t, e| t * e),
        xyy: tau.x.zip_map(&h, |t, e| t * e),
        yyy: tau.y.zip_map(&h, |t, e| 3.0 * t * e),
    }
}

/// Trace decomposition C = C0 + (1/4) sym(tau (x) g) at n = 2.
pub fn decompose3(c: &Sym3Tensor, g: &ConformalMetric) -> (Sym3Tensor, OneFormField) {
    let tau = trace3(c, g);
    let pure = sym_trace_tensor(&tau, g).scale(0.25);
    (c.sub(&pure), tau)
}

/// Divergence (div C)_{jk} = g^{il} (nabla_l C)_{ijk} with respect to the
/// Levi-Civita connection. Valid at interior nodes.
pub fn divergence3(c: &Sym3Tensor, g: &ConformalMetric) -> Sym2Tensor {
    let gamma = christoffel(g);
    let hi = g.h_inv();
    let chart = c.chart().clone();

    let d = [
        [c.xxx.dx(), c.xxy.dx(), c.xyy.dx(), c.yyy.dx()],
        [c.xxx.dy(), c.xxy.dy(), c.xyy.dy(), c.yyy.dy()],
    ];
    let partial =
        |l: usize, i: usize, j: usize, k: usize, node: usize| -> f64 { d[l][i + j + k].at(node) };

    let mut out = Sym2Tensor::zeros(&chart);
    for node in 0..chart.len() {
        if !chart.is_interior(node) {
            continue;
        }
        let e = hi.at(node);
        for (jk, (j, k)) in [(0, 0), (0, 1), (1, 1)].iter().enumerate() {
            let (j, k) = (*j, *k);
            let mut s = 0.0;
            for i in 0..2 {
                // (nabla_i C)_{ijk}, then contract with g^{ii} = e^{-u}
                let mut t = partial(i, i, j, k, node);
                for m in 0..2 {
                    t -= gamma.at(node, m, i, i) * c.comp_at(node, m, j, k);
                    t -= gamma.at(node, m, i, j) * c.comp_at(node, i, m, k);
                    t -= gamma.at(node, m, i, k) * c.comp_at(node, i, j, m);
                }
                s += e * t;
            }
            match jk {
                0 => out.xx.values_mut()[node] = s,
                1 => out.xy.values_mut()[node] = s,
                _ => out.yy.values_mut()[node] = s,
            }
        }
    }
    out
}

/// Covariant derivative of a 1-form, split into its symmetric part and the
/// antisymmetric residual (which equals half the exterior derivative).
pub fn covariant_derivative_oneform(
    tau: &OneFormField,
    g: &ConformalMetric,
) -> (Sym2Tensor, ScalarField) {
    let gamma = christoffel(g);
    let txx = tau.x.dx();
    let txy = tau.y.dx();
    let tyx = tau.x.dy();
    let tyy = tau.y.dy();
    let chart = tau.chart().clone();

    let mut sym = Sym2Tensor::zeros(&chart);
    let mut asym = ScalarField::zeros(&chart);
    for node in 0..chart.len() {
        if !chart.is_interior(node) {
            continue;
        }
        let contract = |i: usize, j: usize| {
            gamma.at(node, 0, i, j) * tau.x.at(node) + gamma.at(node, 1, i, j) * tau.y.at(node)
        };
        let nxx = txx.at(node) - contract(0, 0);
        let nxy = txy.at(node) - contract(0, 1);
        let nyx = tyx.at(node) - contract(1, 0);
        let nyy = tyy.at(node) - contract(1, 1);
        sym.xx.values_mut()[node] = nxx;
        sym.xy.values_mut()[node] = 0.5 * (nxy + nyx);
        sym.yy.values_mut()[node] = nyy;
        asym.values_mut()[node] = 0.5 * (nxy - nyx);
    }
    (sym, asym)
}

/// Ricci scalar S_g = -e^{-u} laplacian(u) (convention S = 2K).
pub fn scalar_curvature(g: &ConformalMetric) -> ScalarField {
    let lap = g.u.laplacian();
    let hi = g.h_inv();
    lap.zip_map(&hi, |l, e| -l * e)
}

/// Pointwise squared norm |C|^2 = e^{-3u} sum over all index triples; the
/// 8-term sum collapses to multiplicities (1,3,3,1) on the stored components.
pub fn norm_sym3(c: &Sym3Tensor, g: &ConformalMetric) -> ScalarField {
    let hi3 = g.u.map(|v| (-3.0 * v).exp());
    let mut out = ScalarField::zeros(c.chart());
    for node in 0..c.chart().len() {
        if !c.chart().is_domain(node) {
            continue;
        }
        let s = c.xxx.at(node).powi(2)
            + 3.0 * c.xxy.at(node).powi(2)
            + 3.0 * c.xyy.at(node).powi(2)
            + c.yyy.at(node).powi(2);
        out.values_mut()[node] = hi3.at(node) * s;
    }
    out
}

/// (3,0)-component of a traceless tensor: the evaluation of C0 on the
/// complex frame dz (x) dz (x) dz gives q = (c_xxx - 3c_xyy)/8 +
/// i (c_yyy - 3c_xxy)/8.
pub fn extract_cubic(
    c0: &Sym3Tensor,
    g: Option<&ConformalMetric>,
) -> Result<CubicDifferential, TensorError> {
    if let Some(g) = g {
        let tau = trace3(c0, g);
        let hi = g.h_inv();
        let scale = c0
            .components()
            .iter()
            .map(|f| f.zip_map(&hi, |a, b| a.abs() * b).sup_norm())
            .fold(0.0, f64::max);
        let rel = if scale > 0.0 {
            tau.sup_norm() / scale
        } else {
            tau.sup_norm()
        };
        if rel > TRACELESS_TOL {
            return Err(TensorError::NotTraceless(rel, TRACELESS_TOL));
        }
    }
    let re = c0.xxx.zip_map(&c0.xyy, |a, b| (a - 3.0 * b) / 8.0);
    let im = c0.yyy.zip_map(&c0.xxy, |a, b| (a - 3.0 * b) / 8.0);
    Ok(CubicDifferential {
        q: ComplexField::from_parts(&re, &im),
    })
}

/// Inverse of [`extract_cubic`]: C0 = Q + conj(Q) as a real symmetric tensor.
pub fn embed_cubic(q: &CubicDifferential) -> Sym3Tensor {
    let re = q.q.re();
    let im = q.q.im();
    Sym3Tensor {
        xxx: re.scale(2.0),
        xxy: im.scale(-2.0),
        xyy: re.scale(-2.0),
        yyy: im.scale(2.0),
    }
}

/// Abelian coefficient from a (harmonic) 1-form: tau = 16 Re(w dz) solved
/// pointwise, w = (tau_x - i tau_y)/16.
pub fn extract_abelian(tau: &OneFormField) -> AbelianDifferential {
    let re = tau.x.scale(1.0 / 16.0);
    let im = tau.y.scale(-1.0 / 16.0);
    AbelianDifferential {
        w: ComplexField::from_parts(&re, &im),
    }
}

/// Contracted Bianchi residual R = nabla^g(tr_g C) - 2 div_g(C); vanishes
/// iff (C, g) is discretely conservative.
pub fn field_equation_residual(c: &Sym3Tensor, g: &ConformalMetric) -> Sym2Tensor {
    let tau = trace3(c, g);
    let (grad_tau, _) = covariant_derivative_oneform(&tau, g);
    let div = divergence3(c, g);
    grad_tau.sub(&div.scale(2.0))
}

/// Closedness and coclosedness residuals of a 1-form: (d tau, div_g tau).
pub fn harmonicity_residual(tau: &OneFormField, g: &ConformalMetric) -> (ScalarField, ScalarField) {
    let dtau = tau.d();
    let gamma = christoffel(g);
    let hi = g.h_inv();
    let txx = tau.x.dx();
    let tyy = tau.y.dy();
    let chart = tau.chart().clone();
    let mut div = ScalarField::zeros(&chart);
    for node in 0..chart.len() {
        if !chart.is_interior(node) {
            continue;
        }
        let mut s = txx.at(node) + tyy.at(node);
        for i in 0..2 {
            s -= gamma.at(node, 0, i, i) * tau.x.at(node);
            s -= gamma.at(node, 1, i, i) * tau.y.at(node);
        }
        div.values_mut()[node] = hi.at(node) * s;
    }
    (dtau, div)
}

/// Normalization residual N = |C0|^2 - 4 S_g - 16; valid at interior nodes.
pub fn normalization_residual(c0: &Sym3Tensor, g: &ConformalMetric) -> ScalarField {
    let n = norm_sym3(c0, g);
    let s = scalar_curvature(g);
    let chart = c0.chart().clone();
    let mut out = ScalarField::zeros(&chart);
    for node in 0..chart.len() {
        if chart.is_interior(node) {
            out.values_mut()[node] = n.at(node) - 4.0 * s.at(node) - 16.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Chart, ComplexField, ScalarField};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn torus(n: usize) -> Arc<Chart> {
        Chart::torus(n, n, 1.0).unwrap()
    }

    fn disk(n: usize) -> Arc<Chart> {
        Chart::disk(n, n, 1.0).unwrap()
    }

    fn cubic_const(chart: &Arc<Chart>, q: Complex64) -> CubicDifferential {
        CubicDifferential {
            q: ComplexField::constant(chart, q),
        }
    }

    /// Brute-force trace over the full 2x2x2 component array.
    #[allow(clippy::needless_range_loop)]
    fn brute_trace(c: &Sym3Tensor, g: &ConformalMetric, node: usize) -> [f64; 2] {
        let e = (-g.u.at(node)).exp();
        let mut tau = [0.0; 2];
        for i in 0..2 {
            for j in 0..2 {
                tau[i] += e * c.comp_at(node, i, j, j);
            }
        }
        tau
    }

    /// Brute-force 8-term contraction of |C|^2.
    fn brute_norm(c: &Sym3Tensor, g: &ConformalMetric, node: usize) -> f64 {
        let e = (-3.0 * g.u.at(node)).exp();
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    s += c.comp_at(node, i, j, k).powi(2);
                }
            }
        }
        e * s
    }

    /// Evaluation of q dz^3 + conj on coordinate triples.
    fn brute_embed(q: Complex64, i: usize, j: usize, k: usize) -> f64 {
        let dz = |m: usize| {
            if m == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0)
            }
        };
        let v = q * dz(i) * dz(j) * dz(k);
        2.0 * v.re
    }

    #[test]
    fn christoffel_flat_is_zero() {
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        let gamma = christoffel(&g);
        assert_eq!(gamma.x_xx.sup_norm(), 0.0);
        assert_eq!(gamma.y_yy.sup_norm(), 0.0);
    }

    #[test]
    fn christoffel_linear_u() {
        let c = disk(33);
        let g = ConformalMetric::new(ScalarField::from_fn(&c, |x, _| 2.0 * x));
        let gamma = christoffel(&g);
        for node in 0..c.len() {
            if !c.is_interior(node) {
                continue;
            }
            assert!((gamma.x_xx.at(node) - 1.0).abs() <= 1e-12);
            assert!((gamma.x_yy.at(node) + 1.0).abs() <= 1e-12);
            assert!((gamma.y_xy.at(node) - 1.0).abs() <= 1e-12);
            assert!(gamma.x_xy.at(node).abs() <= 1e-12);
            assert!(gamma.y_xx.at(node).abs() <= 1e-12);
            assert!(gamma.y_yy.at(node).abs() <= 1e-12);
        }
        // u = x + y: all six are +/- 1/2
        let g2 = ConformalMetric::new(ScalarField::from_fn(&c, |x, y| x + y));
        let gm = christoffel(&g2);
        for node in 0..c.len() {
            if !c.is_interior(node) {
                continue;
            }
            for (f, sign) in [
                (&gm.x_xx, 1.0),
                (&gm.x_xy, 1.0),
                (&gm.x_yy, -1.0),
                (&gm.y_xx, -1.0),
                (&gm.y_xy, 1.0),
                (&gm.y_yy, 1.0),
            ] {
                assert!((f.at(node) - sign * 0.5).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn trace_of_cubic_embedding_vanishes() {
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        let q = cubic_const(&c, Complex64::new(1.5, -0.7));
        let t = embed_cubic(&q);
        let tau = trace3(&t, &g);
        assert!(tau.sup_norm() <= 1e-13);
        // cross-check against the brute-force contraction
        for node in [0usize, 17, 555] {
            let b = brute_trace(&t, &g, node);
            assert!((tau.x.at(node) - b[0]).abs() <= 1e-14);
            assert!((tau.y.at(node) - b[1]).abs() <= 1e-14);
        }
    }

    #[test]
    fn trace_of_zero_is_zero() {
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        let tau = trace3(&Sym3Tensor::zeros(&c), &g);
        assert_eq!(tau.sup_norm(), 0.0);
    }

    #[test]
    fn decompose_pure_trace_tensor() {
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        let tau = OneFormField::new(ScalarField::constant(&c, 4.0), ScalarField::zeros(&c));
        let pure = sym_trace_tensor(&tau, &g).scale(0.25);
        // sym(tau (x) g) for tau=(4,0), u=0 has components (12, 0, 4, 0)
        assert!((pure.xxx.at(0) - 3.0).abs() <= 1e-14);
        assert!((pure.xyy.at(0) - 1.0).abs() <= 1e-14);
        let (c0, tau_out) = decompose3(&pure, &g);
        assert!(c0.sup_norm() <= 1e-13);
        assert!((tau_out.x.at(0) - 4.0).abs() <= 1e-13);
    }

    #[test]
    fn decompose_reassembles_and_is_traceless() {
        let c = torus(32);
        let tau2 = 2.0 * PI;
        let g = ConformalMetric::new(ScalarField::from_fn(&c, |x, y| {
            0.3 * (tau2 * x).sin() + 0.2 * (tau2 * y).cos()
        }));
        let t = Sym3Tensor {
            xxx: ScalarField::from_fn(&c, |x, y| (tau2 * x).cos() + y),
            xxy: ScalarField::from_fn(&c, |x, y| (tau2 * (x + y)).sin()),
            xyy: ScalarField::from_fn(&c, |x, _| 1.0 - x),
            yyy: ScalarField::from_fn(&c, |_, y| (tau2 * y).sin() * 2.0),
        };
        let (c0, tau) = decompose3(&t, &g);
        let back = c0.add(&sym_trace_tensor(&tau, &g).scale(0.25));
        let scale = t.sup_norm().max(1.0);
        assert!(back.sub(&t).sup_norm() / scale <= 1e-12);
        let tau0 = trace3(&c0, &g);
        assert!(tau0.sup_norm() / tau.sup_norm().max(1.0) <= 1e-12);
    }

    #[test]
    fn divergence_of_constants_is_zero() {
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        let t = Sym3Tensor {
            xxx: ScalarField::constant(&c, 1.0),
            xxy: ScalarField::constant(&c, -2.0),
            xyy: ScalarField::constant(&c, 0.5),
            yyy: ScalarField::constant(&c, 3.0),
        };
        assert_eq!(divergence3(&t, &g).sup_norm(), 0.0);
    }

    #[test]
    fn holomorphic_cubic_is_divergence_free() {
        let c = disk(33);
        let g = ConformalMetric::flat(&c);
        let q = CubicDifferential {
            q: ComplexField::from_fn(&c, Complex64::new),
        };
        let div = divergence3(&embed_cubic(&q), &g);
        assert!(div.sup_norm() <= 1e-12, "sup {}", div.sup_norm());
    }

    #[test]
    fn antiholomorphic_cubic_has_large_divergence() {
        let c = disk(33);
        let g = ConformalMetric::flat(&c);
        let q = CubicDifferential {
            q: ComplexField::from_fn(&c, |x, y| Complex64::new(x, -y)),
        };
        let div = divergence3(&embed_cubic(&q), &g);
        assert!(div.sup_norm() >= 1.0, "sup {}", div.sup_norm());
    }

    #[test]
    fn covariant_derivative_oneform_cases() {
        let c = disk(33);
        let g = ConformalMetric::flat(&c);
        let zero = OneFormField::zeros(&c);
        let (s, a) = covariant_derivative_oneform(&zero, &g);
        assert_eq!(s.sup_norm(), 0.0);
        assert_eq!(a.sup_norm(), 0.0);

        let lin = OneFormField::new(ScalarField::from_fn(&c, |x, _| x), ScalarField::zeros(&c));
        let (s, a) = covariant_derivative_oneform(&lin, &g);
        for node in 0..c.len() {
            if c.is_interior(node) {
                assert!((s.xx.at(node) - 1.0).abs() <= 1e-12);
                assert!(s.xy.at(node).abs() <= 1e-12);
                assert!(s.yy.at(node).abs() <= 1e-12);
                assert!(a.at(node).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sphere_patch_curvature() {
        // u = 2 log(2/(1+x^2+y^2)) is the stereographic round metric, K = 1,
        // so S = 2 under the S = 2K convention.
        let mut errs = Vec::new();
        for n in [33usize, 65] {
            let c = disk(n);
            let g = ConformalMetric::new(ScalarField::from_fn(&c, |x, y| {
                2.0 * (2.0 / (1.0 + x * x + y * y)).ln()
            }));
            let s = scalar_curvature(&g);
            let mut err = 0.0f64;
            for node in 0..c.len() {
                if c.is_interior(node) {
                    err = err.max((s.at(node) - 2.0).abs());
                }
            }
            errs.push(err);
        }
        assert!(errs[0] <= 0.05, "coarse error {}", errs[0]);
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() <= 0.4, "order {order}");
    }

    #[test]
    fn scalar_curvature_rescaling() {
        let c = torus(32);
        let tau2 = 2.0 * PI;
        let u = ScalarField::from_fn(&c, |x, y| 0.2 * (tau2 * x).sin() * (tau2 * y).sin());
        let g = ConformalMetric::new(u.clone());
        let gc = ConformalMetric::new(u.map(|v| v + 0.7));
        let s = scalar_curvature(&g);
        let sc = scalar_curvature(&gc);
        let expected = s.scale((-0.7f64).exp());
        assert!(sc.sub(&expected).sup_norm() <= 1e-12 * s.sup_norm().max(1.0));
    }

    #[test]
    fn norm_of_cubic_embedding() {
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        assert_eq!(norm_sym3(&Sym3Tensor::zeros(&c), &g).sup_norm(), 0.0);
        let qv = Complex64::new(1.2, -0.9);
        let t = embed_cubic(&cubic_const(&c, qv));
        let n = norm_sym3(&t, &g);
        for node in [0usize, 41, 900] {
            assert!((n.at(node) - 16.0 * qv.norm_sqr()).abs() <= 1e-12);
            assert!((n.at(node) - brute_norm(&t, &g, node)).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalization_holds_at_constant_solution() {
        // q = 1, u = 0: |C0|^2 = 16 = 4*0 + 16 on the flat torus.
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        let t = embed_cubic(&cubic_const(&c, Complex64::new(1.0, 0.0)));
        assert!(normalization_residual(&t, &g).sup_norm() <= 1e-12);
        // q = 2, u = (1/3) log 4
        let g2 = ConformalMetric::new(ScalarField::constant(&c, (4.0f64).ln() / 3.0));
        let t2 = embed_cubic(&cubic_const(&c, Complex64::new(2.0, 0.0)));
        assert!(normalization_residual(&t2, &g2).sup_norm() <= 1e-12);
        // C0 = 0, u = 0 is not normalized: residual is -16
        let r = normalization_residual(&Sym3Tensor::zeros(&c), &g);
        assert!((r.at(0) + 16.0).abs() <= 1e-14);
    }

    #[test]
    fn extract_embed_cubic_roundtrip() {
        let c = torus(32);
        for (comps, expect) in [
            ([2.0, 0.0, -2.0, 0.0], Complex64::new(1.0, 0.0)),
            ([6.0, -8.0, -6.0, 8.0], Complex64::new(3.0, 4.0)),
            ([0.0, 0.0, 0.0, 0.0], Complex64::new(0.0, 0.0)),
        ] {
            let t = Sym3Tensor {
                xxx: ScalarField::constant(&c, comps[0]),
                xxy: ScalarField::constant(&c, comps[1]),
                xyy: ScalarField::constant(&c, comps[2]),
                yyy: ScalarField::constant(&c, comps[3]),
            };
            let g = ConformalMetric::flat(&c);
            let q = extract_cubic(&t, Some(&g)).unwrap();
            assert!((q.q.at(0) - expect).norm() <= 1e-14);
        }
        // exact inverse, no differencing involved
        let qv = Complex64::new(-0.3, 2.1);
        let q = cubic_const(&c, qv);
        let back = extract_cubic(&embed_cubic(&q), None).unwrap();
        assert_eq!(back.q.at(5), qv);
        // embed components agree with evaluating q dz^3 + conj on triples
        let t = embed_cubic(&q);
        assert_eq!(t.xxx.at(0), brute_embed(qv, 0, 0, 0));
        assert_eq!(t.xxy.at(0), brute_embed(qv, 0, 0, 1));
        assert_eq!(t.xyy.at(0), brute_embed(qv, 0, 1, 1));
        assert_eq!(t.yyy.at(0), brute_embed(qv, 1, 1, 1));
    }

    #[test]
    fn extract_cubic_rejects_non_traceless() {
        let c = torus(32);
        let g = ConformalMetric::flat(&c);
        let tau = OneFormField::new(ScalarField::constant(&c, 4.0), ScalarField::zeros(&c));
        let pure = sym_trace_tensor(&tau, &g);
        match extract_cubic(&pure, Some(&g)) {
            Err(TensorError::NotTraceless(rel, _)) => assert!(rel > 1e-2),
            other => panic!("expected trace rejection, got {other:?}"),
        }
    }

    #[test]
    fn extract_abelian_cases() {
        let c = torus(32);
        for (tx, ty, expect) in [
            (16.0, 0.0, Complex64::new(1.0, 0.0)),
            (0.0, 0.0, Complex64::new(0.0, 0.0)),
            (0.0, 16.0, Complex64::new(0.0, -1.0)),
        ] {
            let tau =
                OneFormField::new(ScalarField::constant(&c, tx), ScalarField::constant(&c, ty));
            let w = extract_abelian(&tau);
            assert!((w.w.at(0) - expect).norm() <= 1e-15);
        }
    }

    #[test]
    fn harmonicity_residual_cases() {
        let c = disk(33);
        let g = ConformalMetric::flat(&c);
        let constant = OneFormField::new(
            ScalarField::constant(&c, 3.0),
            ScalarField::constant(&c, -1.0),
        );
        let (d, div) = harmonicity_residual(&constant, &g);
        assert!(d.sup_norm() <= 1e-12);
        assert!(div.sup_norm() <= 1e-12);

        let lin = OneFormField::new(ScalarField::from_fn(&c, |x, _| x), ScalarField::zeros(&c));
        let (d, div) = harmonicity_residual(&lin, &g);
        for node in 0..c.len() {
            if c.is_interior(node) {
                assert!(d.at(node).abs() <= 1e-12);
                assert!((div.at(node) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn field_equation_flags_antiholomorphic_cubic() {
        let c = disk(33);
        let g = ConformalMetric::flat(&c);
        let q = CubicDifferential {
            q: ComplexField::from_fn(&c, |x, y| Complex64::new(x, -y)),
        };
        let r = field_equation_residual(&embed_cubic(&q), &g);
        assert!(r.sup_norm() >= 1.0);
    }
}
