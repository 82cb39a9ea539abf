//! Support functions of convex bodies, the inverse-Hessian operator A, graph
//! sections of vertical cylinders, parity decompositions, and the ε-budget
//! arithmetic.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::domain::TWO_PI;
use crate::error::{Error, Result};
use crate::jet::Jet2;

/// Absolute ceiling on any perturbation amplitude; the O(ε²) estimates behind
/// the constructions presume small ε.
pub const EPS_CAP: f64 = 0.1;

pub type ScalarJetFn = Arc<dyn Fn(&DVector<f64>) -> Jet2 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A convex hypersurface in ℝ^m given by its support function h on S^{m−1},
/// extended 1-homogeneously (so the Euler relations x·h_x = h, h_xx·x = 0
/// hold).
#[derive(Clone)]
pub struct SupportSurface {
    pub m: usize,
    /// Perturbation amplitude when h = 1 + ε·g; 0 for the round sphere.
    pub eps: f64,
    h: ScalarJetFn,
}

impl SupportSurface {
    pub fn new(m: usize, eps: f64, h: ScalarJetFn) -> Self {
        SupportSurface { m, eps, h }
    }

    /// The round unit sphere: h ≡ 1, extended as |x|.
    pub fn unit_sphere(m: usize) -> Self {
        SupportSurface::new(m, 0.0, Arc::new(|x: &DVector<f64>| Jet2::norm(x)))
    }

    /// Sphere translated by v: h(x) = 1 + v·x on S^{m−1}.
    pub fn translated_sphere(m: usize, v: DVector<f64>) -> Self {
        SupportSurface::new(
            m,
            0.0,
            Arc::new(move |x: &DVector<f64>| {
                let mut lin = Jet2::constant(x.len(), v.dot(x));
                lin.g = v.clone();
                Jet2::norm(x).add(&lin)
            }),
        )
    }

    /// h = 1 + eps·g with g an odd 1-homogeneous perturbation.
    pub fn perturbed_sphere(m: usize, eps: f64, g: ScalarJetFn) -> Self {
        SupportSurface::new(
            m,
            eps,
            Arc::new(move |x: &DVector<f64>| Jet2::norm(x).add(&g(x).scale(eps))),
        )
    }

    pub fn jet(&self, x: &DVector<f64>) -> Jet2 {
        (self.h)(x)
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.h)(x).v
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.h)(x).g
    }

    pub fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.h)(x).h
    }

    /// Euler-relation residuals (|x·h_x − h|, |h_xx·x|) at a point.
    pub fn euler_residuals(&self, x: &DVector<f64>) -> (f64, f64) {
        let jet = (self.h)(x);
        ((x.dot(&jet.g) - jet.v).abs(), (&jet.h * x).norm())
    }

    /// The surface point with outward normal x: y = h_x(x).
    pub fn parameterize(&self, x: &DVector<f64>) -> DVector<f64> {
        self.grad(x)
    }

    /// A(x): inverse of the Hessian restricted to T_x S^{m−1}, extended by
    /// zero along x. Returned as the full m×m matrix T·(TᵀHT)⁻¹·Tᵀ.
    pub fn operator_a(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let t = tangent_basis(x);
        let h = self.hess(x);
        let restricted = t.transpose() * &h * &t;
        let svd = restricted.clone().svd(false, false);
        let smin = svd.singular_values.min();
        let smax = svd.singular_values.max();
        if smin <= 1e-9 * smax.max(1.0) {
            return Err(Error::ConvexityLoss(format!(
                "restricted Hessian singular values [{smin:.3e}, {smax:.3e}]"
            )));
        }
        let inv = restricted
            .try_inverse()
            .ok_or_else(|| Error::ConvexityLoss("restricted Hessian not invertible".into()))?;
        Ok(&t * inv * t.transpose())
    }

    /// A(x)·w for tangent-or-not w (the radial part of w is annihilated).
    pub fn apply_a(&self, x: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.operator_a(x)? * w)
    }
}

/// Deterministic orthonormal basis of x^⊥ (projected coordinate axes,
/// Gram–Schmidt in index order).
pub fn tangent_basis(x: &DVector<f64>) -> DMatrix<f64> {
    let m = x.len();
    let xn = x / x.norm();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for i in 0..m {
        let mut u = DVector::zeros(m);
        u[i] = 1.0;
        u -= &xn * xn[i];
        for b in &cols {
            let d = b.dot(&u);
            u -= b * d;
        }
        let n = u.norm();
        if n > 1e-8 {
            cols.push(u / n);
            if cols.len() == m - 1 {
                break;
            }
        }
    }
    DMatrix::from_columns(&cols)
}

/// Graph section N = {(h_x(x), f(x))} ⊂ ℝ^{m+1} of the vertical cylinder over
/// a support surface.
#[derive(Clone)]
pub struct CylinderSection {
    pub base: SupportSurface,
    /// Section function, extended 0-homogeneously.
    pub f: ScalarJetFn,
}

impl CylinderSection {
    pub fn new(base: SupportSurface, f: ScalarJetFn) -> Self {
        CylinderSection { base, f }
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.m + 1
    }

    /// N(x) = (h_x(x), f(x)).
    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.base.m;
        let mut out = DVector::zeros(m + 1);
        out.rows_mut(0, m).copy_from(&self.base.grad(x));
        out[m] = (self.f)(x).v;
        out
    }

    /// Tangent frame of N at x along an orthonormal tangent basis T of x^⊥:
    /// columns (h_xx·tᵢ, f_x·tᵢ).
    pub fn tangent_frame(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.base.m;
        let t = tangent_basis(x);
        let hxx = self.base.hess(x);
        let fx = (self.f)(x).g;
        let mut jac = DMatrix::zeros(m + 1, m - 1);
        for c in 0..m - 1 {
            let tc = t.column(c);
            let top = &hxx * tc;
            for r in 0..m {
                jac[(r, c)] = top[r];
            }
            jac[(m, c)] = fx.dot(&tc);
        }
        jac
    }

    /// The skewness residual A(−x)·f_x(−x) − A(x)·f_x(x) ∈ T_x S^{m−1}.
    ///
    /// The section is free of parallel tangent pairs iff this never vanishes.
    pub fn parallel_residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let neg = -x;
        let fx = (self.f)(x).g;
        let fx_neg = (self.f)(&neg).g;
        Ok(self.base.apply_a(&neg, &fx_neg)? - self.base.apply_a(x, &fx)?)
    }

    /// Residual of Lemma-param tangency x·dy along a tangent direction v,
    /// via the exact Hessian: x·(h_xx·v).
    pub fn tangency_residual(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let hxx = self.base.hess(x);
        x.dot(&(&hxx * v))
    }
}

/// Parity components of a function under the antipodal map (sphere domains)
/// or the ℤ₂² half-period action (torus domains).
#[derive(Clone)]
pub enum ParityParts {
    Sphere {
        f_ev: ScalarFn,
        f_odd: ScalarFn,
    },
    /// Components indexed by (i, j): parity (−1)^i under S₁: α ↦ α+π and
    /// (−1)^j under S₂: β ↦ β+π.
    Torus { parts: [ScalarFn; 4] },
}

impl ParityParts {
    /// Sum the components back at a point.
    pub fn reconstruct(&self, p: &[f64]) -> f64 {
        match self {
            ParityParts::Sphere { f_ev, f_odd } => f_ev(p) + f_odd(p),
            ParityParts::Torus { parts } => parts.iter().map(|f| f(p)).sum(),
        }
    }
}

/// Kind tag for [`parity_decompose`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityDomain {
    Sphere,
    Torus,
}

/// Group-averaging parity decomposition.
///
/// Sphere: f_ev(x) = (f(x) + f(−x))/2. Torus: f^{i,j}(p) = ¼ Σ_g χ_{i,j}(g)
/// f(g·p) over the four half-period shifts.
pub fn parity_decompose(f: ScalarFn, kind: ParityDomain) -> ParityParts {
    match kind {
        ParityDomain::Sphere => {
            let fe = f.clone();
            let fo = f.clone();
            ParityParts::Sphere {
                f_ev: Arc::new(move |p: &[f64]| {
                    let neg: Vec<f64> = p.iter().map(|v| -v).collect();
                    0.5 * (fe(p) + fe(&neg))
                }),
                f_odd: Arc::new(move |p: &[f64]| {
                    let neg: Vec<f64> = p.iter().map(|v| -v).collect();
                    0.5 * (fo(p) - fo(&neg))
                }),
            }
        }
        ParityDomain::Torus => {
            let part = |i: i32, j: i32| -> ScalarFn {
                let f = f.clone();
                Arc::new(move |p: &[f64]| {
                    let mut acc = 0.0;
                    for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let chi = if (i * a + j * b) % 2 == 0 { 1.0 } else { -1.0 };
                        let shifted = [
                            p[0] + a as f64 * std::f64::consts::PI,
                            p[1] + b as f64 * std::f64::consts::PI,
                        ];
                        acc += chi * f(&shifted);
                    }
                    0.25 * acc
                })
            };
            ParityParts::Torus {
                parts: [part(0, 0), part(1, 0), part(0, 1), part(1, 1)],
            }
        }
    }
}

/// Constants extracted from sampled functions for the perturbation bound
/// ε_max = min(a, C)/b sufficient for f + εg + ε²h > 0.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct EpsilonBudget {
    /// Half the minimum of g on the approximate zero locus of f.
    pub a: f64,
    /// max |g|.
    pub c: f64,
    /// max |h|.
    pub b: f64,
    pub eps_max: f64,
    pub zero_locus_size: usize,
    /// Set when the zero locus was empty and a defaulted to C.
    pub empty_zero_locus: bool,
}

impl EpsilonBudget {
    /// Budget with the absolute ε ceiling applied.
    pub fn effective_max(&self) -> f64 {
        self.eps_max.min(EPS_CAP)
    }
}

/// Lemma-style budget arithmetic on sampled values of f, g, h with zero-locus
/// threshold η.
pub fn epsilon_bound(
    f_vals: &[f64],
    g_vals: &[f64],
    h_vals: &[f64],
    eta: f64,
) -> Result<EpsilonBudget> {
    if f_vals.len() != g_vals.len() || f_vals.len() != h_vals.len() || f_vals.is_empty() {
        return Err(Error::Contract("sample arrays must match and be nonempty".into()));
    }
    if let Some(bad) = f_vals.iter().find(|v| **v < 0.0) {
        return Err(Error::HypothesisViolation(format!(
            "f must be nonnegative on the grid, found {bad}"
        )));
    }
    let c = g_vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let b = h_vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let locus: Vec<usize> = (0..f_vals.len()).filter(|&i| f_vals[i] <= eta).collect();
    let (a, empty) = if locus.is_empty() {
        (c, true)
    } else {
        let gmin = locus.iter().map(|&i| g_vals[i]).fold(f64::INFINITY, f64::min);
        if gmin <= 0.0 {
            return Err(Error::HypothesisViolation(format!(
                "g must be positive on the zero locus of f; min g there = {gmin}"
            )));
        }
        (0.5 * gmin, false)
    };
    let eps_max = if b == 0.0 { EPS_CAP } else { a.min(c) / b };
    Ok(EpsilonBudget {
        a,
        c,
        b,
        eps_max,
        zero_locus_size: locus.len(),
        empty_zero_locus: empty,
    })
}

/// Default zero-locus threshold: twice the grid-scaled Lipschitz estimate of f.
pub fn default_eta(f_vals: &[f64], grid_step: f64) -> f64 {
    let mut lip: f64 = 0.0;
    for w in f_vals.windows(2) {
        lip = lip.max((w[1] - w[0]).abs() / grid_step);
    }
    2.0 * lip * grid_step
}

/// Uniform angle grid [0, 2π), endpoint excluded.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_sphere_parameterizes_to_itself() {
        let s = SupportSurface::unit_sphere(4);
        let x = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
        let y = s.parameterize(&x);
        assert_abs_diff_eq!((y - &x).norm(), 0.0, epsilon = 1e-12);
        let (e1, e2) = s.euler_residuals(&x);
        assert!(e1 < 1e-12 && e2 < 1e-12);
    }

    #[test]
    fn translated_sphere_shifts_points() {
        let v = DVector::from_vec(vec![0.1, -0.2, 0.05]);
        let s = SupportSurface::translated_sphere(3, v.clone());
        let x = DVector::from_vec(vec![0.0, 0.6, 0.8]);
        let y = s.parameterize(&x);
        assert_abs_diff_eq!((y - (&x + &v)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn operator_a_is_identity_on_round_sphere() {
        let s = SupportSurface::unit_sphere(4);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let a = s.operator_a(&x).unwrap();
        // A x = 0
        assert_abs_diff_eq!((&a * &x).norm(), 0.0, epsilon = 1e-12);
        // A acts as identity on tangent vectors
        let t = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        assert_abs_diff_eq!((&a * &t - &t).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn parity_decompose_sphere() {
        let f: ScalarFn = Arc::new(|p: &[f64]| 1.0 + p[1]);
        let parts = parity_decompose(f, ParityDomain::Sphere);
        if let ParityParts::Sphere { f_ev, f_odd } = &parts {
            let p = [0.6, 0.8];
            assert_abs_diff_eq!(f_ev(&p), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(f_odd(&p), 0.8, epsilon = 1e-15);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn parity_decompose_torus_picks_out_components() {
        // cos(2a+2b) is even-even; cos(a+2b) is odd under S1, even under S2
        let f: ScalarFn =
            Arc::new(|p: &[f64]| (2.0 * p[0] + 2.0 * p[1]).cos() + (p[0] + 2.0 * p[1]).cos());
        let parts = parity_decompose(f, ParityDomain::Torus);
        if let ParityParts::Torus { parts } = &parts {
            let p = [0.7, 1.3];
            assert_abs_diff_eq!(parts[0](&p), (2.0 * p[0] + 2.0 * p[1]).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(parts[1](&p), (p[0] + 2.0 * p[1]).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(parts[2](&p), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(parts[3](&p), 0.0, epsilon = 1e-12);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn budget_matches_hand_constants() {
        // f = sin^2 theta, g = 1, h = 1 on a fine grid -> a=1/2, C=1, b=1
        let n = 4001;
        let f: Vec<f64> = (0..n)
            .map(|i| (TWO_PI * i as f64 / n as f64).sin().powi(2))
            .collect();
        let g = vec![1.0; n];
        let h = vec![1.0; n];
        let budget = epsilon_bound(&f, &g, &h, 1e-5).unwrap();
        assert_abs_diff_eq!(budget.a, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(budget.c, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(budget.eps_max, 0.5, epsilon = 1e-6);
        assert!(!budget.empty_zero_locus);
    }

    #[test]
    fn budget_degenerate_branches() {
        // empty zero locus: a defaults to C; b = 0 clamps to the cap
        let budget = epsilon_bound(&[1.0, 1.0], &[-1.0, -1.0], &[0.0, 0.0], 1e-3).unwrap();
        assert!(budget.empty_zero_locus);
        assert_abs_diff_eq!(budget.a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(budget.eps_max, EPS_CAP, epsilon = 1e-15);

        // g <= 0 on the zero locus is a hypothesis violation
        assert!(matches!(
            epsilon_bound(&[0.0, 1.0], &[-1.0, 1.0], &[1.0, 1.0], 1e-3),
            Err(Error::HypothesisViolation(_))
        ));
    }
}
