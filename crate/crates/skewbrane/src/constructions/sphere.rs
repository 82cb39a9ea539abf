//! Immersed 2-spheres in ℝ⁴ on the cylindrical-coordinate domain
//! (α, h) ∈ [0, 2π) × [−1, 1]:
//!
//! * the one-double-point family
//!   (α, h) ↦ (1−h²)(cos α, sin α, h cos α − εg(α) sin α, h sin α + εg(α) cos α),
//! * a seeded random graph embedding over the round sphere (no double points).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ParamDomain, TWO_PI};
use crate::error::{Error, Result};
use crate::grassmann::PluckerXY;
use crate::immersion::Immersion;

/// Sine-harmonic profile g(α) = Σ aₖ·sin(kα).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GProfile {
    pub harmonics: Vec<(u32, f64)>,
}

impl GProfile {
    /// The default profile sin 2α + sin 4α.
    pub fn default_two_four() -> Self {
        GProfile {
            harmonics: vec![(2, 1.0), (4, 1.0)],
        }
    }

    pub fn zero() -> Self {
        GProfile { harmonics: vec![] }
    }

    pub fn value(&self, alpha: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|(k, a)| a * (*k as f64 * alpha).sin())
            .sum()
    }

    pub fn deriv(&self, alpha: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|(k, a)| a * *k as f64 * (*k as f64 * alpha).cos())
            .sum()
    }
}

/// The immersed-sphere family M (M₀ at ε = 0).
#[derive(Clone, Debug)]
pub struct ImmSphere {
    pub eps: f64,
    pub profile: GProfile,
}

impl ImmSphere {
    pub fn new(eps: f64, profile: GProfile) -> Result<Self> {
        if eps < 0.0 {
            return Err(Error::Contract("eps must be nonnegative".into()));
        }
        Ok(ImmSphere { eps, profile })
    }

    pub fn m0() -> Self {
        ImmSphere {
            eps: 0.0,
            profile: GProfile::default_two_four(),
        }
    }

    /// The reduced map u(α, h) = F(α, h)/(1−h²), smooth across the poles.
    fn reduced(&self, a: f64, h: f64) -> [f64; 4] {
        let (c, s) = (a.cos(), a.sin());
        let g = self.eps * self.profile.value(a);
        [c, s, h * c - g * s, h * s + g * c]
    }

    fn reduced_da(&self, a: f64, h: f64) -> [f64; 4] {
        let (c, s) = (a.cos(), a.sin());
        let g = self.eps * self.profile.value(a);
        let gp = self.eps * self.profile.deriv(a);
        [-s, c, -h * s - gp * s - g * c, h * c + gp * c - g * s]
    }

    pub fn eval(&self, a: f64, h: f64) -> DVector<f64> {
        let p = 1.0 - h * h;
        let u = self.reduced(a, h);
        DVector::from_vec(vec![p * u[0], p * u[1], p * u[2], p * u[3]])
    }

    pub fn jacobian(&self, a: f64, h: f64) -> DMatrix<f64> {
        let p = 1.0 - h * h;
        let (c, s) = (a.cos(), a.sin());
        let u = self.reduced(a, h);
        let ua = self.reduced_da(a, h);
        // dF/dh = -2h·u + (1-h²)·du/dh with du/dh = (0, 0, c, s)
        DMatrix::from_column_slice(
            4,
            2,
            &[
                p * ua[0],
                p * ua[1],
                p * ua[2],
                p * ua[3],
                -2.0 * h * u[0],
                -2.0 * h * u[1],
                -2.0 * h * u[2] + p * c,
                -2.0 * h * u[3] + p * s,
            ],
        )
    }

    /// Limit tangent frame at h = ±1: columns (∂_α F/(1−h²), ∂_h F) in the
    /// pole limit, i.e. (∂_α u, ∓2u).
    pub fn pole_frame(&self, a: f64, sign: f64) -> DMatrix<f64> {
        let u = self.reduced(a, sign);
        let ua = self.reduced_da(a, sign);
        let mut m = DMatrix::zeros(4, 2);
        for r in 0..4 {
            m[(r, 0)] = ua[r];
            m[(r, 1)] = -2.0 * sign * u[r];
        }
        m
    }

    pub fn immersion(&self) -> Immersion {
        let me = self.clone();
        let me2 = self.clone();
        let me3 = self.clone();
        let name = if self.eps == 0.0 {
            "sphere-m0"
        } else {
            "skew-imm-sphere"
        };
        let mut params = BTreeMap::new();
        params.insert("eps".to_string(), self.eps);
        Immersion::new(
            name,
            ParamDomain::cylinder_sphere2(),
            4,
            Arc::new(move |p: &[f64]| me.eval(p[0], p[1])),
        )
        .with_jacobian(Arc::new(move |p: &[f64]| me2.jacobian(p[0], p[1])))
        .with_pole_frames(
            Arc::new(move |a: f64, sign: f64| me3.pole_frame(a, sign)),
            Arc::new(|h: f64| 1.0 / (1.0 - h * h)),
        )
        .with_params(params)
    }

    /// The linearized Plücker coordinates of T_{(α,h)}M in rotated form,
    /// valid up to O(ε²) after dividing the frame wedge by (1−h²).
    pub fn plcoord_xy(&self, a: f64, h: f64) -> PluckerXY {
        let e = self.eps;
        let g = self.profile.value(a);
        let gp = self.profile.deriv(a);
        let (c2, s2) = ((2.0 * a).cos(), (2.0 * a).sin());
        PluckerXY {
            x: [
                h * (1.0 + 3.0 * h * h) - e * (1.0 - 3.0 * h * h) * gp,
                c2 * ((1.0 - h * h) + 2.0 * e * h * gp),
                s2 * ((1.0 - h * h) + 2.0 * e * h * gp),
            ],
            y: [
                3.0 * h * (1.0 - h * h) + e * (1.0 - 3.0 * h * h) * gp,
                (1.0 - 5.0 * h * h) - 2.0 * e * h * gp,
                4.0 * e * h * g,
            ],
        }
    }

    /// The frame-wedge Plücker coordinates divided by (1−h²), in rotated
    /// form — the exact counterpart of [`ImmSphere::plcoord_xy`].
    pub fn wedge_xy_scaled(&self, a: f64, h: f64) -> PluckerXY {
        let j = self.jacobian(a, h);
        let (u, v) = (j.column(0), j.column(1));
        let p = [
            u[0] * v[1] - u[1] * v[0],
            u[0] * v[2] - u[2] * v[0],
            u[0] * v[3] - u[3] * v[0],
            u[1] * v[2] - u[2] * v[1],
            u[1] * v[3] - u[3] * v[1],
            u[2] * v[3] - u[3] * v[2],
        ];
        let scale = 1.0 / (1.0 - h * h);
        let scaled: Vec<f64> = p.iter().map(|x| x * scale).collect();
        PluckerXY::from_plucker6(&scaled)
    }

    /// min over α of max(|g(β)−g(α)|, |g′(β)+g′(α)|) with 2β = 2α + π;
    /// positive value certifies the linearized collision system is
    /// inconsistent.
    pub fn linearized_residual(&self, grid: usize) -> f64 {
        linearized_residual_of(&self.profile, grid)
    }
}

/// Free-standing version for arbitrary profiles.
pub fn linearized_residual_of(profile: &GProfile, grid: usize) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..grid {
        let a = TWO_PI * i as f64 / grid as f64;
        let b = a + std::f64::consts::FRAC_PI_2;
        let r1 = (profile.value(b) - profile.value(a)).abs();
        let r2 = (profile.deriv(b) + profile.deriv(a)).abs();
        min = min.min(r1.max(r2));
    }
    min
}

/// A seeded random graph embedding of S² in ℝ⁴: the round sphere with a small
/// polynomial fourth coordinate φ(x, y, z) (trigonometric in (α, h)).
#[derive(Clone, Debug)]
pub struct GraphSphere {
    pub seed: u64,
    pub amp: f64,
    coeffs: [f64; 9],
}

impl GraphSphere {
    pub fn new(seed: u64, amp: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = [0.0; 9];
        for c in &mut coeffs {
            *c = rng.gen_range(-1.0..1.0);
        }
        GraphSphere { seed, amp, coeffs }
    }

    fn phi(&self, x: f64, y: f64, z: f64) -> f64 {
        let c = &self.coeffs;
        self.amp
            * (c[0] * x
                + c[1] * y
                + c[2] * z
                + c[3] * x * y
                + c[4] * y * z
                + c[5] * z * x
                + c[6] * (x * x - y * y)
                + c[7] * (2.0 * z * z - x * x - y * y)
                + c[8] * x * y * z)
    }

    fn grad_phi(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let c = &self.coeffs;
        [
            self.amp
                * (c[0] + c[3] * y + c[5] * z + 2.0 * c[6] * x - 2.0 * c[7] * x + c[8] * y * z),
            self.amp
                * (c[1] + c[3] * x + c[4] * z - 2.0 * c[6] * y - 2.0 * c[7] * y + c[8] * x * z),
            self.amp * (c[2] + c[4] * y + c[5] * x + 4.0 * c[7] * z + c[8] * x * y),
        ]
    }

    pub fn eval(&self, a: f64, h: f64) -> DVector<f64> {
        let r = (1.0 - h * h).max(0.0).sqrt();
        let (x, y, z) = (r * a.cos(), r * a.sin(), h);
        DVector::from_vec(vec![x, y, z, self.phi(x, y, z)])
    }

    pub fn jacobian(&self, a: f64, h: f64) -> DMatrix<f64> {
        let r = (1.0 - h * h).max(1e-300).sqrt();
        let (c, s) = (a.cos(), a.sin());
        let (x, y, z) = (r * c, r * s, h);
        let gp = self.grad_phi(x, y, z);
        let da = [-r * s, r * c, 0.0];
        let dh = [-h * c / r, -h * s / r, 1.0];
        let dot = |u: &[f64; 3]| gp[0] * u[0] + gp[1] * u[1] + gp[2] * u[2];
        DMatrix::from_column_slice(
            4,
            2,
            &[da[0], da[1], da[2], dot(&da), dh[0], dh[1], dh[2], dot(&dh)],
        )
    }

    /// Limit frames at the poles: lim ∂_α/√(1−h²) and lim √(1−h²)·∂_h.
    pub fn pole_frame(&self, a: f64, sign: f64) -> DMatrix<f64> {
        let (c, s) = (a.cos(), a.sin());
        let gp = self.grad_phi(0.0, 0.0, sign);
        let v1 = [-s, c, 0.0];
        let v2 = [-sign * c, -sign * s, 0.0];
        let dot = |u: &[f64; 3]| gp[0] * u[0] + gp[1] * u[1] + gp[2] * u[2];
        DMatrix::from_column_slice(
            4,
            2,
            &[v1[0], v1[1], v1[2], dot(&v1), v2[0], v2[1], v2[2], dot(&v2)],
        )
    }

    pub fn immersion(&self) -> Immersion {
        let me = self.clone();
        let me2 = self.clone();
        let me3 = self.clone();
        let mut params = BTreeMap::new();
        params.insert("seed".to_string(), self.seed as f64);
        params.insert("amp".to_string(), self.amp);
        Immersion::new(
            "graph-sphere",
            ParamDomain::cylinder_sphere2(),
            4,
            Arc::new(move |p: &[f64]| me.eval(p[0], p[1])),
        )
        .with_jacobian(Arc::new(move |p: &[f64]| me2.jacobian(p[0], p[1])))
        .with_pole_frames(
            Arc::new(move |a: f64, sign: f64| me3.pole_frame(a, sign)),
            Arc::new(|h: f64| 1.0 / (1.0 - h * h)),
        )
        .with_params(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{parallel_defect, OrientedPlane};
    use approx::assert_abs_diff_eq;

    #[test]
    fn m0_reference_points() {
        let m0 = ImmSphere::m0();
        let p = m0.eval(0.0, 0.0);
        assert_abs_diff_eq!(
            (p - DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])).norm(),
            0.0,
            epsilon = 1e-15
        );
        // both poles map to the origin
        for a in [0.0, 1.0, 2.5] {
            assert!(m0.eval(a, 1.0).norm() < 1e-15);
            assert!(m0.eval(a, -1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn pole_planes_match_limits() {
        let m0 = ImmSphere::m0();
        let im = m0.immersion();
        let north = OrientedPlane::from_columns(&im.tangent_frame(&[0.7, 1.0]).unwrap().vectors)
            .unwrap();
        // alpha independence of the oriented pole plane
        let north2 = OrientedPlane::from_columns(&im.tangent_frame(&[2.9, 1.0]).unwrap().vectors)
            .unwrap();
        assert_abs_diff_eq!(
            parallel_defect(&north, &north2).unwrap().positive,
            0.0,
            epsilon = 1e-12
        );
        // stated spans
        let span_n =
            OrientedPlane::from_columns(&DMatrix::from_column_slice(4, 2, &[
                1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0,
            ]))
            .unwrap();
        let d = parallel_defect(&north, &span_n).unwrap();
        assert!(d.min() < 1e-12);
        let south = OrientedPlane::from_columns(&im.tangent_frame(&[0.3, -1.0]).unwrap().vectors)
            .unwrap();
        let span_s =
            OrientedPlane::from_columns(&DMatrix::from_column_slice(4, 2, &[
                1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0,
            ]))
            .unwrap();
        assert!(parallel_defect(&south, &span_s).unwrap().min() < 1e-12);
    }

    #[test]
    fn near_pole_planes_converge_to_limit() {
        let m0 = ImmSphere::m0();
        let im = m0.immersion();
        let limit = OrientedPlane::from_columns(&im.tangent_frame(&[0.4, 1.0]).unwrap().vectors)
            .unwrap();
        let mut prev = f64::INFINITY;
        for j in 3..=6 {
            let h = 1.0 - 10f64.powi(-j);
            let p = OrientedPlane::from_columns(&im.tangent_frame(&[0.4, h]).unwrap().vectors)
                .unwrap();
            let d = parallel_defect(&p, &limit).unwrap().positive;
            assert!(d < 2.0 * 10f64.powi(-j), "j={j}: defect {d}");
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn plcoord_formulas_match_wedge_to_second_order() {
        let m = ImmSphere::new(1e-3, GProfile::default_two_four()).unwrap();
        let (a, h) = (0.0, 1.0 / 5.0_f64.sqrt());
        let stated = m.plcoord_xy(a, h);
        let wedge = m.wedge_xy_scaled(a, h);
        assert!((stated.x[0] - wedge.x[0]).abs() < 1e-5);
        for i in 0..3 {
            assert!((stated.x[i] - wedge.x[i]).abs() < 1e-5);
            assert!((stated.y[i] - wedge.y[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn linearized_residual_default_profile() {
        // dense-grid oracle value (sqrt(129) - 1)/8
        let m = ImmSphere::new(0.02, GProfile::default_two_four()).unwrap();
        let oracle = (129.0_f64.sqrt() - 1.0) / 8.0;
        assert_abs_diff_eq!(m.linearized_residual(200_000), oracle, epsilon = 1e-4);
        // the closed-form reduction: residuals are (2|sin 2α|, 8|cos 4α|)
        let g = &m.profile;
        for k in 0..64 {
            let a = k as f64 * 0.1;
            let b = a + std::f64::consts::FRAC_PI_2;
            assert_abs_diff_eq!(
                (g.value(b) - g.value(a)).abs(),
                2.0 * (2.0 * a).sin().abs(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                (g.deriv(b) + g.deriv(a)).abs(),
                8.0 * (4.0 * a).cos().abs(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn second_harmonic_alone_fails() {
        let p = GProfile {
            harmonics: vec![(2, 1.0)],
        };
        assert!(linearized_residual_of(&p, 10_000) < 1e-3);
        assert_eq!(linearized_residual_of(&GProfile::zero(), 100), 0.0);
    }

    #[test]
    fn graph_sphere_is_seed_deterministic() {
        let a = GraphSphere::new(7, 0.1);
        let b = GraphSphere::new(7, 0.1);
        let c = GraphSphere::new(8, 0.1);
        let p = [1.2, 0.4];
        assert_eq!(a.eval(p[0], p[1]), b.eval(p[0], p[1]));
        assert_ne!(a.eval(p[0], p[1]), c.eval(p[0], p[1]));
    }

    #[test]
    fn graph_sphere_pole_frames_are_limits() {
        // the graph plane approaches its pole limit at rate sqrt(1-h^2)
        let g = GraphSphere::new(42, 0.1);
        let im = g.immersion();
        let limit = OrientedPlane::from_columns(&im.tangent_frame(&[1.1, -1.0]).unwrap().vectors)
            .unwrap();
        let defect_at = |h: f64| {
            let p = OrientedPlane::from_columns(&im.tangent_frame(&[1.1, h]).unwrap().vectors)
                .unwrap();
            parallel_defect(&p, &limit).unwrap().positive
        };
        let d7 = defect_at(-(1.0 - 1e-7));
        let d9 = defect_at(-(1.0 - 1e-9));
        assert!(d7 < 1e-3, "d7 = {d7}");
        assert!(d9 < d7 / 5.0, "d9 = {d9} vs d7 = {d7}");
    }
}
