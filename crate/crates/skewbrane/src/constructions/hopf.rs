//! The odd-dimensional skew sphere: a perturbed S^{2n−1} ⊂ ℝ^{2n+1} realized
//! as a cylinder section over the support surface h = 1 + ε·g, with the
//! section f = f_ev + f_odd assembled from explicit local functions around
//! the critical Hopf circles of f_ev.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::ParamDomain;
use crate::error::{Error, Result};
use crate::immersion::Immersion;
use crate::jet::{smoothstep_jet, Jet2};
use crate::support::{CylinderSection, EpsilonBudget, SupportSurface, EPS_CAP};

/// Bump support in tubular distance: χ ≡ 1 for d ≤ 0.2 and χ ≡ 0 for d ≥ 0.4,
/// expressed in q = rᵢ/|x| via d = √(2 − 2q).
const BUMP_Q_OUTER: f64 = 0.92; // d = 0.4
const BUMP_Q_INNER: f64 = 0.98; // d = 0.2

/// The unit Hopf field ξ = Σᵢ (−y_i ∂x_i + x_i ∂y_i) on S^{2n−1}.
pub fn hopf_field(x: &[f64]) -> Vec<f64> {
    let mut xi = vec![0.0; x.len()];
    for i in 0..x.len() / 2 {
        xi[2 * i] = -x[2 * i + 1];
        xi[2 * i + 1] = x[2 * i];
    }
    xi
}

/// The explicit local pair (f_odd, g) of the ℂ² model near the circle
/// {x₂ = y₂ = 0, r = 1}, together with the Hopf field at the point.
///
/// In polar coordinates x₁ = r cos α, y₁ = r sin α the pair is
/// f = x₂ cos 2α + y₂ sin 2α, g = x₂ sin 2α − y₂ cos 2α.
pub fn hopf_functions(p: [f64; 4]) -> (f64, f64, [f64; 4]) {
    let [x1, y1, x2, y2] = p;
    let r2 = x1 * x1 + y1 * y1;
    let (uc, us) = ((x1 * x1 - y1 * y1) / r2, 2.0 * x1 * y1 / r2);
    let f = x2 * uc + y2 * us;
    let g = x2 * us - y2 * uc;
    (f, g, [-y1, x1, -y2, x2])
}

/// The one-dimensional reduction b v′ + d w′ + (u + u″) a′ of
/// g_xx(f_x)·ξ on the critical circle, for the chosen functions
/// a = u = 0, b = cos 2α, d = sin 2α, v = sin 2α, w = −cos 2α.
pub fn circle_reduction(alpha: f64) -> f64 {
    let b = (2.0 * alpha).cos();
    let d = (2.0 * alpha).sin();
    let vp = 2.0 * (2.0 * alpha).cos(); // v' where v = sin 2α
    let wp = 2.0 * (2.0 * alpha).sin(); // w' where w = −cos 2α
    b * vp + d * wp
}

/// The perturbed odd-dimensional sphere construction.
#[derive(Clone, Debug)]
pub struct SkewSphere {
    /// Half the ambient dimension of the base sphere: S^{2n−1} ⊂ ℝ^{2n}.
    pub n: usize,
    pub eps: f64,
    /// Morse–Bott coefficients of f_ev = Σ aᵢ |zᵢ|².
    pub coeffs: Vec<f64>,
}

impl SkewSphere {
    /// Build with budget validation; `eps` must not exceed the certified
    /// bound (see [`SkewSphere::epsilon_budget`]).
    pub fn build(n: usize, eps: f64, coeffs: Option<Vec<f64>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract("need n >= 2".into()));
        }
        let coeffs = coeffs.unwrap_or_else(|| (1..=n).map(|i| i as f64).collect());
        if coeffs.len() != n {
            return Err(Error::Contract(format!(
                "need {n} Morse-Bott coefficients, got {}",
                coeffs.len()
            )));
        }
        let mut sorted = coeffs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-9) || sorted[0] <= 0.0 {
            return Err(Error::Contract(
                "Morse-Bott coefficients must be distinct positive reals".into(),
            ));
        }
        let surf = SkewSphere { n, eps, coeffs };
        if eps < 0.0 {
            return Err(Error::Contract("eps must be nonnegative".into()));
        }
        if eps > 0.0 {
            let budget = surf.epsilon_budget(13)?;
            if eps > budget.effective_max() {
                return Err(Error::BudgetExceeded {
                    requested: eps,
                    eps_max: budget.effective_max(),
                });
            }
        }
        Ok(surf)
    }

    pub fn ambient_base_dim(&self) -> usize {
        2 * self.n
    }

    /// f_ev = Σ aᵢ |zᵢ|² extended 0-homogeneously.
    pub fn f_ev_jet(&self, x: &DVector<f64>) -> Jet2 {
        let m = x.len();
        let mut num = Jet2::constant(m, 0.0);
        for i in 0..self.n {
            let a = Jet2::var(x, 2 * i);
            let b = Jet2::var(x, 2 * i + 1);
            num = num.add(&a.mul(&a).add(&b.mul(&b)).scale(self.coeffs[i]));
        }
        num.div(&Jet2::norm_sq(x))
    }

    fn bump_jet(&self, x: &DVector<f64>, i: usize) -> Option<Jet2> {
        let (a1, b1) = (x[2 * i], x[2 * i + 1]);
        let q_val = (a1 * a1 + b1 * b1).sqrt() / x.norm();
        if q_val <= BUMP_Q_OUTER {
            return None;
        }
        let r = Jet2::var(x, 2 * i)
            .mul(&Jet2::var(x, 2 * i))
            .add(&Jet2::var(x, 2 * i + 1).mul(&Jet2::var(x, 2 * i + 1)))
            .sqrt();
        let q = r.div(&Jet2::norm(x));
        let t = q
            .add_scalar(-BUMP_Q_OUTER)
            .scale(1.0 / (BUMP_Q_INNER - BUMP_Q_OUTER));
        Some(smoothstep_jet(&t))
    }

    /// The local (f, g) pair of circle i in its ℂ² = (zᵢ, z_{i+1 mod n}),
    /// both 1-homogeneous.
    fn local_pair_jets(&self, x: &DVector<f64>, i: usize) -> (Jet2, Jet2) {
        let j = (i + 1) % self.n;
        let a1 = Jet2::var(x, 2 * i);
        let b1 = Jet2::var(x, 2 * i + 1);
        let a2 = Jet2::var(x, 2 * j);
        let b2 = Jet2::var(x, 2 * j + 1);
        let r2 = a1.mul(&a1).add(&b1.mul(&b1));
        let uc = a1.mul(&a1).sub(&b1.mul(&b1)).div(&r2);
        let us = a1.mul(&b1).scale(2.0).div(&r2);
        let f = a2.mul(&uc).add(&b2.mul(&us));
        let g = a2.mul(&us).sub(&b2.mul(&uc));
        (f, g)
    }

    /// The odd support perturbation g = Σᵢ χᵢ·g_locᵢ, 1-homogeneous.
    pub fn g_jet(&self, x: &DVector<f64>) -> Jet2 {
        let m = x.len();
        let mut acc = Jet2::constant(m, 0.0);
        for i in 0..self.n {
            if let Some(chi) = self.bump_jet(x, i) {
                let (_, g) = self.local_pair_jets(x, i);
                acc = acc.add(&chi.mul(&g));
            }
        }
        acc
    }

    /// f_odd = Σᵢ χᵢ·f_locᵢ/|x|, 0-homogeneous.
    pub fn f_odd_jet(&self, x: &DVector<f64>) -> Jet2 {
        let m = x.len();
        let mut acc = Jet2::constant(m, 0.0);
        for i in 0..self.n {
            if let Some(chi) = self.bump_jet(x, i) {
                let (f, _) = self.local_pair_jets(x, i);
                acc = acc.add(&chi.mul(&f));
            }
        }
        acc.div(&Jet2::norm(x))
    }

    /// v = g_xx((f_odd)_x) at a unit point.
    pub fn v_field(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = self.g_jet(x);
        let fo = self.f_odd_jet(x);
        &g.h * &fo.g
    }

    /// v·ξ; equals 2 on each critical circle.
    pub fn v_dot_xi(&self, x: &DVector<f64>) -> f64 {
        let xi = DVector::from_vec(hopf_field(x.as_slice()));
        self.v_field(x).dot(&xi)
    }

    pub fn support(&self) -> SupportSurface {
        let me = self.clone();
        SupportSurface::perturbed_sphere(
            2 * self.n,
            self.eps,
            Arc::new(move |x: &DVector<f64>| me.g_jet(x)),
        )
    }

    pub fn section(&self) -> CylinderSection {
        let me = self.clone();
        CylinderSection::new(
            self.support(),
            Arc::new(move |x: &DVector<f64>| me.f_ev_jet(x).add(&me.f_odd_jet(x))),
        )
    }

    /// The section as an Immersion of S^{2n−1} into ℝ^{2n+1}.
    pub fn immersion(&self) -> Immersion {
        let section = self.section();
        let section2 = section.clone();
        let mut params = BTreeMap::new();
        params.insert("eps".to_string(), self.eps);
        params.insert("n".to_string(), self.n as f64);
        Immersion::new(
            "skew-sphere3",
            ParamDomain::sphere(2 * self.n),
            2 * self.n + 1,
            Arc::new(move |p: &[f64]| section.eval(&DVector::from_column_slice(p))),
        )
        .with_jacobian(Arc::new(move |p: &[f64]| {
            section2.tangent_frame(&DVector::from_column_slice(p))
        }))
        .with_params(params)
    }

    /// Margin of the linearized skewness condition over a sphere lattice grid.
    pub fn grad5_margin(&self, grid_per_axis: usize) -> Result<Grad5Report> {
        let dom = ParamDomain::sphere(2 * self.n);
        let pts = dom.sphere_grid(grid_per_axis)?;
        let eps = self.eps;
        let (margin, max_v) = pts
            .par_iter()
            .map(|x| {
                let fe = self.f_ev_jet(x);
                let v = self.v_field(x);
                let m = (&fe.g - &v * eps).norm();
                (m, v.norm())
            })
            .reduce(
                || (f64::INFINITY, 0.0_f64),
                |a, b| (a.0.min(b.0), a.1.max(b.1)),
            );
        // c from the construction: v·ξ on the critical circles
        let c_est = 2.0;
        Ok(Grad5Report {
            margin,
            eps,
            bound: c_est * eps,
            c_est,
            max_v,
            samples: pts.len(),
            pass: margin > eps,
        })
    }

    /// ε-budget: certifies |(f_ev)_x − εv| > ε pointwise on the grid by the
    /// smallest positive root of |W₀ − εv|² = ε², reported in the Lemma-style
    /// (a, C, b) form with a = ½·min v·ξ on the zero locus of |(f_ev)_x|.
    pub fn epsilon_budget(&self, grid_per_axis: usize) -> Result<EpsilonBudget> {
        let dom = ParamDomain::sphere(2 * self.n);
        let pts = dom.sphere_grid(grid_per_axis)?;
        let data: Vec<(f64, f64, f64, f64)> = pts
            .par_iter()
            .map(|x| {
                let w0 = self.f_ev_jet(x).g;
                let v = self.v_field(x);
                let xi = DVector::from_vec(hopf_field(x.as_slice()));
                let vxi = v.dot(&xi);
                // smallest positive eps with |w0|^2 - 2 eps w0·v + eps^2(|v|^2 - 1) <= 0
                let aq = v.norm_squared() - 1.0;
                let bq = -2.0 * w0.dot(&v);
                let cq = w0.norm_squared();
                let disc = bq * bq - 4.0 * aq * cq;
                // on the critical circles w0 = 0 up to roundoff and the
                // discriminant sign is noise; there |v| > 1 decides
                let crit = if cq < 1e-24 {
                    if aq > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else if disc < 0.0 {
                    f64::INFINITY
                } else {
                    let s = disc.sqrt();
                    let (r1, r2) = ((-bq - s) / (2.0 * aq), (-bq + s) / (2.0 * aq));
                    let mut c = f64::INFINITY;
                    for r in [r1, r2] {
                        if r > 0.0 {
                            c = c.min(r);
                        }
                    }
                    // exact-arithmetic floor: no failure below |w0|/(1+|v|)
                    c.max(w0.norm() / (1.0 + v.norm()))
                };
                (w0.norm(), vxi, v.norm(), crit)
            })
            .collect();
        let eta = 0.1;
        let locus: Vec<&(f64, f64, f64, f64)> = data.iter().filter(|d| d.0 <= eta).collect();
        if locus.is_empty() {
            return Err(Error::HypothesisViolation(
                "grid too coarse: no samples near the critical circles".into(),
            ));
        }
        let min_vxi = locus.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        if min_vxi <= 0.0 {
            return Err(Error::HypothesisViolation(format!(
                "v·ξ must be positive near the critical circles, min {min_vxi}"
            )));
        }
        let a = 0.5 * min_vxi;
        let c = data.iter().map(|d| d.1.abs()).fold(0.0_f64, f64::max);
        let eps_max = data
            .iter()
            .map(|d| d.3)
            .fold(f64::INFINITY, f64::min)
            .min(EPS_CAP);
        let b = a.min(c) / eps_max;
        Ok(EpsilonBudget {
            a,
            c,
            b,
            eps_max,
            zero_locus_size: locus.len(),
            empty_zero_locus: false,
        })
    }

    /// Points of the i-th critical Hopf circle (|zᵢ| = 1).
    pub fn critical_circle_point(&self, i: usize, alpha: f64) -> DVector<f64> {
        let mut x = DVector::zeros(2 * self.n);
        x[2 * i] = alpha.cos();
        x[2 * i + 1] = alpha.sin();
        x
    }
}

/// Outcome of the linearized-margin scan.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Grad5Report {
    pub margin: f64,
    pub eps: f64,
    /// c·ε with c from the construction (v·ξ = 2 on the circles).
    pub bound: f64,
    pub c_est: f64,
    pub max_v: f64,
    pub samples: usize,
    pub pass: bool,
}
