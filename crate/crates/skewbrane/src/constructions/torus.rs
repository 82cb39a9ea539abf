//! The standard torus T₀² ⊂ ℝ⁴ and its skew perturbation
//! (u cos α, u sin α, v cos β, v sin β) with u = 1 + εf, v = 1 + εg,
//! f = cos(2α+2β) + δ·cos(α+2β), g = sin(2α+2β) + 2δ·sin(α+2β).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::domain::{ParamDomain, TWO_PI};
use crate::error::{Error, Result};
use crate::immersion::Immersion;
use crate::support::{epsilon_bound, EpsilonBudget};

/// Torus perturbation parameters.
#[derive(Clone, Copy, Debug)]
pub struct SkewTorus {
    pub eps: f64,
    pub delta: f64,
}

/// Partner shifts generating the ℤ₂² action on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrbitShift {
    S1,
    S2,
    S1S2,
}

impl OrbitShift {
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        use std::f64::consts::PI;
        match self {
            OrbitShift::S1 => [p[0] + PI, p[1]],
            OrbitShift::S2 => [p[0], p[1] + PI],
            OrbitShift::S1S2 => [p[0] + PI, p[1] + PI],
        }
    }

    pub fn all() -> [OrbitShift; 3] {
        [OrbitShift::S1, OrbitShift::S2, OrbitShift::S1S2]
    }

    /// Whether the unperturbed partner is negatively parallel (one frame
    /// vector negated) or positively (both negated).
    pub fn unperturbed_sign_is_negative(&self) -> bool {
        !matches!(self, OrbitShift::S1S2)
    }

    fn index(&self) -> usize {
        match self {
            OrbitShift::S1 => 0,
            OrbitShift::S2 => 1,
            OrbitShift::S1S2 => 2,
        }
    }
}

impl SkewTorus {
    /// Validated construction: δ ∈ (0, 1) and ε within the ε-budget computed
    /// from the three linearized systems (ε = 0 is the unperturbed baseline).
    pub fn build(eps: Option<f64>, delta: f64) -> Result<(Self, TorusBudget)> {
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(Error::Contract(format!("delta must be in (0,1), got {delta}")));
        }
        let budget = TorusBudget::compute(delta, 24)?;
        let eps = eps.unwrap_or(budget.eps_max / 2.0);
        if eps < 0.0 {
            return Err(Error::Contract("eps must be nonnegative".into()));
        }
        if eps > budget.eps_max {
            return Err(Error::BudgetExceeded {
                requested: eps,
                eps_max: budget.eps_max,
            });
        }
        Ok((SkewTorus { eps, delta }, budget))
    }

    /// The unperturbed product of unit circles.
    pub fn standard() -> Self {
        SkewTorus {
            eps: 0.0,
            delta: 0.0,
        }
    }

    pub fn f(&self, a: f64, b: f64) -> f64 {
        (2.0 * a + 2.0 * b).cos() + self.delta * (a + 2.0 * b).cos()
    }

    pub fn g(&self, a: f64, b: f64) -> f64 {
        (2.0 * a + 2.0 * b).sin() + 2.0 * self.delta * (a + 2.0 * b).sin()
    }

    fn f_a(&self, a: f64, b: f64) -> f64 {
        -2.0 * (2.0 * a + 2.0 * b).sin() - self.delta * (a + 2.0 * b).sin()
    }

    pub fn f_b(&self, a: f64, b: f64) -> f64 {
        -2.0 * (2.0 * a + 2.0 * b).sin() - 2.0 * self.delta * (a + 2.0 * b).sin()
    }

    pub fn g_a(&self, a: f64, b: f64) -> f64 {
        2.0 * (2.0 * a + 2.0 * b).cos() + 2.0 * self.delta * (a + 2.0 * b).cos()
    }

    fn g_b(&self, a: f64, b: f64) -> f64 {
        2.0 * (2.0 * a + 2.0 * b).cos() + 4.0 * self.delta * (a + 2.0 * b).cos()
    }

    fn eval_at(&self, a: f64, b: f64, eps: f64) -> DVector<f64> {
        let u = 1.0 + eps * self.f(a, b);
        let v = 1.0 + eps * self.g(a, b);
        DVector::from_vec(vec![u * a.cos(), u * a.sin(), v * b.cos(), v * b.sin()])
    }

    fn jacobian_at(&self, a: f64, b: f64, eps: f64) -> DMatrix<f64> {
        let u = 1.0 + eps * self.f(a, b);
        let v = 1.0 + eps * self.g(a, b);
        let (ua, ub) = (eps * self.f_a(a, b), eps * self.f_b(a, b));
        let (va, vb) = (eps * self.g_a(a, b), eps * self.g_b(a, b));
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        DMatrix::from_column_slice(
            4,
            2,
            &[
                // column 0: d/d alpha
                ua * ca - u * sa,
                ua * sa + u * ca,
                va * cb,
                va * sb,
                // column 1: d/d beta
                ub * ca,
                ub * sa,
                vb * cb - v * sb,
                vb * sb + v * cb,
            ],
        )
    }

    /// Unit Plücker vector of the tangent plane, optionally at an ε other
    /// than the stored one (used by the budget's remainder estimate).
    pub fn unit_plucker_at(&self, p: [f64; 2], eps: f64) -> [f64; 6] {
        let j = self.jacobian_at(p[0], p[1], eps);
        let (u, v) = (j.column(0), j.column(1));
        let mut w = [
            u[0] * v[1] - u[1] * v[0],
            u[0] * v[2] - u[2] * v[0],
            u[0] * v[3] - u[3] * v[0],
            u[1] * v[2] - u[2] * v[1],
            u[1] * v[3] - u[3] * v[1],
            u[2] * v[3] - u[3] * v[2],
        ];
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut w {
            *x /= n;
        }
        w
    }

    pub fn immersion(&self) -> Immersion {
        let me = *self;
        let me2 = *self;
        let name = if self.eps == 0.0 { "torus0" } else { "skew-torus" };
        let mut params = BTreeMap::new();
        params.insert("eps".to_string(), self.eps);
        params.insert("delta".to_string(), self.delta);
        Immersion::new(
            name,
            ParamDomain::torus2(),
            4,
            Arc::new(move |p: &[f64]| me.eval_at(p[0], p[1], me.eps)),
        )
        .with_jacobian(Arc::new(move |p: &[f64]| {
            me2.jacobian_at(p[0], p[1], me2.eps)
        }))
        .with_params(params)
    }

    /// The two equations of the k-th linearized system at a point, in parity
    /// components: system 1 is (f_β^{0,0}+f_β^{0,1}, g_α^{0,0}+g_α^{0,1}),
    /// and cyclically. Computed by group-averaging the partial derivatives,
    /// i.e. half the partner sum/difference.
    pub fn system_residuals(&self, k: OrbitShift, p: [f64; 2]) -> [f64; 2] {
        let q = k.apply(p);
        let sign = if matches!(k, OrbitShift::S1S2) { -1.0 } else { 1.0 };
        [
            0.5 * (self.f_b(q[0], q[1]) + sign * self.f_b(p[0], p[1])),
            0.5 * (self.g_a(q[0], q[1]) + sign * self.g_a(p[0], p[1])),
        ]
    }

    /// min over the grid of max(|eq1|, |eq2|) for each of the three systems.
    /// All three positive certifies linearized skewness.
    pub fn linearized_residuals(&self, grid: usize) -> [f64; 3] {
        let mut mins = [f64::INFINITY; 3];
        for i in 0..grid {
            for j in 0..grid {
                let p = [
                    TWO_PI * i as f64 / grid as f64,
                    TWO_PI * j as f64 / grid as f64,
                ];
                for k in OrbitShift::all() {
                    let [r1, r2] = self.system_residuals(k, p);
                    let m = r1.abs().max(r2.abs());
                    if m < mins[k.index()] {
                        mins[k.index()] = m;
                    }
                }
            }
        }
        mins
    }

    /// First-order rate of the branch-k pair defect: 2·‖(eq1, eq2)‖₂.
    pub fn first_order_rate(&self, k: OrbitShift, p: [f64; 2]) -> f64 {
        let [r1, r2] = self.system_residuals(k, p);
        2.0 * (r1 * r1 + r2 * r2).sqrt()
    }

    /// The true pair defect along branch k at perturbation `eps`, minimized
    /// over the partner displacement with a small Gauss–Newton iteration.
    /// Negative defect for the S₁/S₂ branches, positive for S₁S₂.
    pub fn refined_branch_defect(&self, p: [f64; 2], k: OrbitShift, eps: f64) -> f64 {
        let base = self.unit_plucker_at(p, eps);
        let sign = if k.unperturbed_sign_is_negative() {
            1.0
        } else {
            -1.0
        };
        let mut q = k.apply(p);
        let residual = |q: [f64; 2]| -> [f64; 6] {
            let w = self.unit_plucker_at(q, eps);
            let mut r = [0.0; 6];
            for i in 0..6 {
                r[i] = base[i] + sign * w[i];
            }
            r
        };
        let norm = |r: &[f64; 6]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut r = residual(q);
        let fd = 1e-6;
        for _ in 0..50 {
            // finite-difference 6x2 Jacobian wrt the partner point
            let mut jt_j = [[0.0; 2]; 2];
            let mut jt_r = [0.0; 2];
            let mut cols = [[0.0; 6]; 2];
            for c in 0..2 {
                let mut qp = q;
                let mut qm = q;
                qp[c] += fd;
                qm[c] -= fd;
                let (rp, rm) = (residual(qp), residual(qm));
                for i in 0..6 {
                    cols[c][i] = (rp[i] - rm[i]) / (2.0 * fd);
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    jt_j[a][b] = (0..6).map(|i| cols[a][i] * cols[b][i]).sum();
                }
                jt_r[a] = (0..6).map(|i| cols[a][i] * r[i]).sum();
                jt_j[a][a] += 1e-12;
            }
            let det = jt_j[0][0] * jt_j[1][1] - jt_j[0][1] * jt_j[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let mut step = [
                -(jt_j[1][1] * jt_r[0] - jt_j[0][1] * jt_r[1]) / det,
                -(jt_j[0][0] * jt_r[1] - jt_j[1][0] * jt_r[0]) / det,
            ];
            // damped acceptance
            let mut improved = false;
            for _ in 0..12 {
                let qn = [q[0] + step[0], q[1] + step[1]];
                let rn = residual(qn);
                if norm(&rn) < norm(&r) {
                    q = qn;
                    r = rn;
                    improved = true;
                    break;
                }
                step[0] *= 0.5;
                step[1] *= 0.5;
            }
            if !improved {
                break;
            }
        }
        norm(&r)
    }
}

/// Per-system and overall ε-budget for the torus.
#[derive(Clone, Debug, Serialize)]
pub struct TorusBudget {
    pub delta: f64,
    pub systems: Vec<SystemBudget>,
    /// Overall bound: min over the contributing systems, capped at ε_cap.
    pub eps_max: f64,
    /// Set when δ = 0 and the S₁S₂ system is identically degenerate (the
    /// surface is centrally symmetric, so that branch is excluded).
    pub s1s2_degenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemBudget {
    pub shift: OrbitShift,
    pub budget: EpsilonBudget,
    pub min_rate: f64,
}

impl TorusBudget {
    /// Budget from the three linearized systems on an n×n grid; the
    /// second-order remainder of the branch defect is sampled numerically at
    /// a probe ε.
    pub fn compute(delta: f64, grid: usize) -> Result<TorusBudget> {
        let torus = SkewTorus { eps: 0.0, delta };
        let eps0 = 1e-4;
        let eps1 = 2e-2;
        let mut systems = Vec::new();
        let mut s1s2_degenerate = false;
        for k in OrbitShift::all() {
            let mut rates = Vec::with_capacity(grid * grid);
            let mut remainders = Vec::with_capacity(grid * grid);
            let mut min_rate = f64::INFINITY;
            for i in 0..grid {
                for j in 0..grid {
                    let p = [
                        TWO_PI * i as f64 / grid as f64,
                        TWO_PI * j as f64 / grid as f64,
                    ];
                    let rate = torus.refined_branch_defect(p, k, eps0) / eps0;
                    let d1 = torus.refined_branch_defect(p, k, eps1);
                    rates.push(rate);
                    remainders.push((d1 - eps1 * rate).abs() / (eps1 * eps1));
                    min_rate = min_rate.min(rate);
                }
            }
            if min_rate < 1e-6 {
                if matches!(k, OrbitShift::S1S2) && delta == 0.0 {
                    // centrally symmetric: positively parallel pairs persist
                    s1s2_degenerate = true;
                    continue;
                }
                return Err(Error::HypothesisViolation(format!(
                    "linearized system {k:?} has solutions (min rate {min_rate:.2e}); \
                     the branch defect has no first-order margin"
                )));
            }
            let zeros = vec![0.0; rates.len()];
            let budget = epsilon_bound(&zeros, &rates, &remainders, 0.0)?;
            systems.push(SystemBudget {
                shift: k,
                budget,
                min_rate,
            });
        }
        if systems.is_empty() {
            return Err(Error::HypothesisViolation(
                "no nondegenerate linearized system".into(),
            ));
        }
        let eps_max = systems
            .iter()
            .map(|s| s.budget.effective_max())
            .fold(f64::INFINITY, f64::min);
        Ok(TorusBudget {
            delta,
            systems,
            eps_max,
            s1s2_degenerate,
        })
    }
}

/// The (iden) quantity (f_β^{0,0})² + (g_α^{0,0})², identically 4.
pub fn iden_value(a: f64, b: f64) -> f64 {
    let fb = -2.0 * (2.0 * a + 2.0 * b).sin();
    let ga = 2.0 * (2.0 * a + 2.0 * b).cos();
    fb * fb + ga * ga
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn iden_is_four_at_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = rng.gen::<f64>() * TWO_PI;
            let b = rng.gen::<f64>() * TWO_PI;
            assert_abs_diff_eq!(iden_value(a, b), 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn delta_one_identity_on_second_component() {
        // (f_β^{1,0})² + (g_α^{1,0})² = 4 identically when the component is unscaled
        let t = SkewTorus {
            eps: 0.0,
            delta: 1.0,
        };
        for i in 0..40 {
            let p = [i as f64 * 0.7, i as f64 * 0.3];
            let fb10 = t.f_b(p[0], p[1]) - (-2.0 * (2.0 * p[0] + 2.0 * p[1]).sin());
            let ga10 = t.g_a(p[0], p[1]) - 2.0 * (2.0 * p[0] + 2.0 * p[1]).cos();
            assert_abs_diff_eq!(fb10 * fb10 + ga10 * ga10, 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn linearized_minmax_values() {
        // grid multiple of 16 so the 2α+2β lattice contains π/4, where the
        // min-max √2 of the (iden)-governed systems is attained
        let grid = 1600;
        // delta = 1: the S1S2 system min-max equals sqrt(2) (dense-grid oracle)
        let t = SkewTorus {
            eps: 0.0,
            delta: 1.0,
        };
        let mins = t.linearized_residuals(grid);
        assert_abs_diff_eq!(mins[2], std::f64::consts::SQRT_2, epsilon = 1e-9);
        // delta = 0.1: S1 system governed by (iden); S1S2 scales with delta
        let t = SkewTorus {
            eps: 0.0,
            delta: 0.1,
        };
        let mins = t.linearized_residuals(grid);
        assert_abs_diff_eq!(mins[0], std::f64::consts::SQRT_2, epsilon = 1e-9);
        assert_abs_diff_eq!(mins[2], 0.1 * std::f64::consts::SQRT_2, epsilon = 1e-9);
        assert!(mins[1] > 1.2);
        // zero functions: all three systems vanish
        let t = SkewTorus {
            eps: 0.0,
            delta: 0.0,
        };
        let zero_f = t.linearized_residuals(100);
        assert!(zero_f[2] < 1e-12, "S1S2 system degenerate at delta=0");
    }

    #[test]
    fn first_order_rate_matches_refined_defect() {
        let t = SkewTorus {
            eps: 0.0,
            delta: 0.1,
        };
        let eps0 = 1e-5;
        for (i, k) in OrbitShift::all().into_iter().enumerate() {
            let p = [0.9 + i as f64, 1.7 - i as f64 * 0.4];
            let numeric = t.refined_branch_defect(p, k, eps0) / eps0;
            let closed = t.first_order_rate(k, p);
            assert_abs_diff_eq!(numeric, closed, epsilon = 1e-3 * closed.max(0.1));
        }
    }

    #[test]
    fn budget_is_positive_and_bounds_scan_eps() {
        let (torus, budget) = SkewTorus::build(None, 0.1).unwrap();
        assert!(budget.eps_max > 0.01, "eps_max = {}", budget.eps_max);
        assert!(torus.eps > 0.0 && torus.eps <= budget.eps_max / 2.0 + 1e-15);
        assert!(!budget.s1s2_degenerate);
    }

    #[test]
    fn build_rejects_bad_parameters() {
        assert!(SkewTorus::build(None, 0.0).is_err());
        assert!(SkewTorus::build(None, 1.0).is_err());
        assert!(matches!(
            SkewTorus::build(Some(10.0), 0.1),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
