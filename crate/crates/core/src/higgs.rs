//! Pointwise matrix algebra of the cyclic Higgs bundle K^{-1} + O + K and
//! synthesis of the statistical structure (C, g, nabla) from moduli data
//! (an Abelian differential omega = w dz and a cubic differential Q = q dz^3).

// index-driven loops mirror the tensor contraction formulas
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{OneFormField, ScalarField};
use crate::tensor::{
    christoffel, embed_cubic, AbelianDifferential, ConformalMetric, CubicDifferential, Sym3Tensor,
};

#[derive(Debug, Error)]
pub enum HiggsError {
    #[error("Hermitian coefficient must be positive, got {0}")]
    NonPositiveMetric(f64),
}

/// Dense complex 3x3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix3(pub [[Complex64; 3]; 3]);

impl Matrix3 {
    pub fn zeros() -> Self {
        Matrix3([[Complex64::new(0.0, 0.0); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn scaled_identity(s: Complex64) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = s;
        }
        m
    }

    pub fn mul(&self, rhs: &Matrix3) -> Matrix3 {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..3 {
                    s += self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = s;
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix3) -> Matrix3 {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix3) -> Matrix3 {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Matrix3 {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for row in &self.0 {
            for v in row {
                m = m.max(v.norm());
            }
        }
        m
    }
}

/// Pointwise slice of the moduli and metric data entering the Hitchin system.
#[derive(Debug, Clone, Copy)]
pub struct HiggsPointData {
    /// Coefficient of the Abelian differential omega = w dz.
    pub w: Complex64,
    /// Coefficient of the cubic differential Q = q dz^3.
    pub q: Complex64,
    /// Hermitian coefficient h = e^u.
    pub h: f64,
}

/// Higgs field Phi = w I + A with the two-step shift A carrying q at (3,1).
pub fn build_higgs(p: HiggsPointData) -> (Matrix3, Matrix3) {
    let mut a = Matrix3::zeros();
    a.0[0][1] = Complex64::new(1.0, 0.0);
    a.0[1][2] = Complex64::new(1.0, 0.0);
    a.0[2][0] = p.q;
    let phi = Matrix3::scaled_identity(p.w).add(&a);
    (phi, a)
}

/// Metric adjoint A* = H^{-1} A^dagger H with H = diag(h, 1, h^{-1}).
pub fn adjoint_a(p: HiggsPointData) -> Result<Matrix3, HiggsError> {
    if p.h <= 0.0 {
        return Err(HiggsError::NonPositiveMetric(p.h));
    }
    let mut m = Matrix3::zeros();
    m.0[0][2] = p.q.conj() / (p.h * p.h);
    m.0[1][0] = Complex64::new(p.h, 0.0);
    m.0[2][1] = Complex64::new(p.h, 0.0);
    Ok(m)
}

/// Matrix commutator [A, A*] = A A* - A* A.
pub fn commutator(a: &Matrix3, astar: &Matrix3) -> Matrix3 {
    a.mul(astar).sub(&astar.mul(a))
}

/// Amari-Chentsov tensor from moduli data:
/// C(u,v,w) = 2 Omega(u)g(v,w) + 2 Omega(v)g(u,w) + 2 Omega(w)g(u,v)
///            + 2 Re(conj(Q)(u,v,w)), with Omega = omega + conj(omega).
pub fn build_c_from_moduli(
    omega: &AbelianDifferential,
    q: &CubicDifferential,
    g: &ConformalMetric,
) -> Sym3Tensor {
    let ox = omega.w.re().scale(2.0);
    let oy = omega.w.im().scale(-2.0);
    let omega_form = OneFormField::new(ox, oy);
    let pure = crate::tensor::sym_trace_tensor(&omega_form, g).scale(2.0);
    pure.add(&embed_cubic(q))
}

/// Connection coefficients of a torsion-free connection, stored once per
/// symmetric index pair.
#[derive(Debug, Clone)]
pub struct ConnectionCoefficients {
    pub x_xx: ScalarField,
    pub x_xy: ScalarField,
    pub x_yy: ScalarField,
    pub y_xx: ScalarField,
    pub y_xy: ScalarField,
    pub y_yy: ScalarField,
}

impl ConnectionCoefficients {
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

    /// Contraction Gamma^._{ij} v^i w^j at a node.
    pub fn contract(&self, node: usize, v: [f64; 2], w: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[k] += self.at(node, k, i, j) * v[i] * w[j];
                }
            }
        }
        out
    }
}

/// Statistical connection nabla = nabla^g + B with the difference tensor
/// B = C/2, last slot raised: Gamma~^k_{ij} = Gamma^k_{ij} + e^{-u} c_{ijk}/2.
pub fn build_nabla(c: &Sym3Tensor, g: &ConformalMetric) -> ConnectionCoefficients {
    let gamma = christoffel(g);
    let hi = g.h_inv();
    let half =
        |lc: &ScalarField, comp: &ScalarField| lc.add(&comp.zip_map(&hi, |a, b| 0.5 * a * b));
    ConnectionCoefficients {
        x_xx: half(&gamma.x_xx, &c.xxx),
        x_xy: half(&gamma.x_xy, &c.xxy),
        x_yy: half(&gamma.x_yy, &c.xyy),
        y_xx: half(&gamma.y_xx, &c.xxy),
        y_xy: half(&gamma.y_xy, &c.xyy),
        y_yy: half(&gamma.y_yy, &c.yyy),
    }
}

/// Residuals certifying that a connection is the statistical connection of
/// (C, g): torsion (exactly zero by symmetric storage), the metric residual
/// sup |nabla g + C|, and the total-symmetry defect of -nabla g.
pub fn check_statistical_connection(
    nabla: &ConnectionCoefficients,
    c: &Sym3Tensor,
    g: &ConformalMetric,
) -> (f64, f64, f64) {
    let chart = c.chart().clone();
    let h = g.h();
    let dh = [h.dx(), h.dy()];
    let mut metric_sup = 0.0f64;
    let mut sym_sup = 0.0f64;
    for node in 0..chart.len() {
        if !chart.is_interior(node) {
            continue;
        }
        let hv = h.at(node);
        // T_{ijk} = -(nabla_i g)_{jk}
        let mut t = [[[0.0f64; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    // (nabla_i g)_{jk} = d_i g_{jk} - Gamma~^m_{ij} g_{mk}
                    //                  - Gamma~^m_{ik} g_{jm}, g diagonal e^u
                    let mut v = if j == k { dh[i].at(node) } else { 0.0 };
                    v -= nabla.at(node, k, i, j) * hv;
                    v -= nabla.at(node, j, i, k) * hv;
                    t[i][j][k] = -v;
                    metric_sup = metric_sup.max((v + c.comp_at(node, i, j, k)).abs());
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    sym_sup = sym_sup.max((t[i][j][k] - t[j][i][k]).abs());
                    sym_sup = sym_sup.max((t[i][j][k] - t[k][j][i]).abs());
                }
            }
        }
    }
    (0.0, metric_sup, sym_sup)
}

/// Direct evaluation of the Higgs-route connection at one point:
/// nabla_v w = nabla^h_v w + Omega(v) w + Omega(w) v + g(v,w) Omega^sharp
///             + h^{-1} conj(Q)(v, w)^sharp.
/// `du` carries the metric log-gradient (u_x, u_y) at the point.
pub fn higgs_route_nabla(p: HiggsPointData, du: (f64, f64), v: [f64; 2], w: [f64; 2]) -> [f64; 2] {
    let (ux, uy) = du;
    // Levi-Civita term of the conformal metric.
    let gamma = |k: usize, i: usize, j: usize| -> f64 {
        match (k, i + j, i) {
            (0, 0, _) => ux / 2.0,
            (0, 1, _) => uy / 2.0,
            (0, 2, _) => -ux / 2.0,
            (1, 0, _) => -uy / 2.0,
            (1, 1, _) => ux / 2.0,
            _ => uy / 2.0,
        }
    };
    let mut out = [0.0f64; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[k] += gamma(k, i, j) * v[i] * w[j];
            }
        }
    }
    let omega = [2.0 * p.w.re, -2.0 * p.w.im];
    let omega_v = omega[0] * v[0] + omega[1] * v[1];
    let omega_w = omega[0] * w[0] + omega[1] * w[1];
    let g_vw = p.h * (v[0] * w[0] + v[1] * w[1]);
    for k in 0..2 {
        out[k] += omega_v * w[k] + omega_w * v[k] + g_vw * omega[k] / p.h;
    }
    // conj(Q)(v, w, e_k) with dzbar(v) = v_x - i v_y; raise with g^{-1}.
    let m = |t: [f64; 2]| Complex64::new(t[0], -t[1]);
    let frame = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)];
    let qb = p.q.conj() * m(v) * m(w);
    for k in 0..2 {
        out[k] += (qb * frame[k]).re / p.h;
    }
    out
}
