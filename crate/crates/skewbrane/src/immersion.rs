//! Parameterized immersions with Jacobian access, tangent frames, and the
//! immersion rank scan.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::domain::{DomainKind, ParamDomain};
use crate::error::{Error, Result};
use crate::grassmann::SIGMA_MIN;

/// Central finite-difference step for Jacobians of surfaces without an
/// analytic one, and for defect-field Jacobians during refinement.
pub const ETA_FD: f64 = 1e-5;

/// |h| above 1 − POLE_BAND uses the rescaled α-column; |h| = 1 uses the
/// closed-form limit frame.
pub const POLE_BAND: f64 = 1e-3;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type JacFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
/// Closed-form tangent frame at a cylinder-sphere pole: arguments (α, ±1).
pub type PoleFrameFn = Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>;

/// A base point together with k ordered tangent vectors.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    pub base: DVector<f64>,
    /// N×k, columns ordered by domain coordinate order.
    pub vectors: DMatrix<f64>,
    /// Positive unless an odd number of column swaps has been applied.
    pub positive: bool,
}

impl TangentFrame {
    pub fn new(base: DVector<f64>, vectors: DMatrix<f64>) -> Self {
        TangentFrame {
            base,
            vectors,
            positive: true,
        }
    }

    /// Swap two frame vectors, flipping the orientation flag.
    pub fn swap(&mut self, i: usize, j: usize) {
        if i != j {
            self.vectors.swap_columns(i, j);
            self.positive = !self.positive;
        }
    }

    /// The frame matrix with orientation folded in (last column negated for
    /// negative frames).
    pub fn oriented_matrix(&self) -> DMatrix<f64> {
        let mut m = self.vectors.clone();
        if !self.positive {
            let last = m.ncols() - 1;
            let c = -m.column(last).clone_owned();
            m.set_column(last, &c);
        }
        m
    }
}

/// A parameterized immersion of a 2-torus, a cylindrical 2-sphere, or a round
/// S^{m−1} into ℝ^N.
#[derive(Clone)]
pub struct Immersion {
    pub name: String,
    pub domain: ParamDomain,
    pub ambient_dim: usize,
    pub params: BTreeMap<String, f64>,
    eval_fn: EvalFn,
    jac_fn: Option<JacFn>,
    pole_frame_fn: Option<PoleFrameFn>,
    /// Positive rescale applied to the α-column of the Jacobian near poles;
    /// scale-invariant downstream, it only keeps the column representable.
    alpha_rescale: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl Immersion {
    pub fn new(
        name: impl Into<String>,
        domain: ParamDomain,
        ambient_dim: usize,
        eval_fn: EvalFn,
    ) -> Self {
        Immersion {
            name: name.into(),
            domain,
            ambient_dim,
            params: BTreeMap::new(),
            eval_fn,
            jac_fn: None,
            pole_frame_fn: None,
            alpha_rescale: None,
        }
    }

    pub fn with_jacobian(mut self, jac: JacFn) -> Self {
        self.jac_fn = Some(jac);
        self
    }

    pub fn with_pole_frames(
        mut self,
        pole: PoleFrameFn,
        alpha_rescale: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    ) -> Self {
        self.pole_frame_fn = Some(pole);
        self.alpha_rescale = Some(alpha_rescale);
        self
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac_fn.is_some()
    }

    /// Evaluate F(p) with periodic wrap applied.
    pub fn eval(&self, p: &[f64]) -> Result<DVector<f64>> {
        self.domain.check_point(p)?;
        let mut q = p.to_vec();
        self.domain.canonicalize(&mut q);
        Ok((self.eval_fn)(&q))
    }

    /// Jacobian (N×k): analytic when available, otherwise central differences
    /// with step [`ETA_FD`]. For sphere domains, derivatives are taken along
    /// the deterministic tangent basis with spherical retraction.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.domain.check_point(p)?;
        let mut q = p.to_vec();
        self.domain.canonicalize(&mut q);
        if let Some(j) = &self.jac_fn {
            return Ok(j(&q));
        }
        Ok(self.jacobian_fd(&q))
    }

    pub fn jacobian_fd(&self, q: &[f64]) -> DMatrix<f64> {
        match self.domain.kind {
            DomainKind::Torus2 | DomainKind::CylinderSphere2 => {
                let k = 2;
                let mut jac = DMatrix::zeros(self.ambient_dim, k);
                for c in 0..k {
                    let mut qp = q.to_vec();
                    let mut qm = q.to_vec();
                    qp[c] += ETA_FD;
                    qm[c] -= ETA_FD;
                    // one-sided fallback at the h-boundary
                    if let DomainKind::CylinderSphere2 = self.domain.kind {
                        if c == 1 {
                            qp[1] = qp[1].min(1.0);
                            qm[1] = qm[1].max(-1.0);
                        }
                    }
                    let step = qp[c] - qm[c];
                    let col = ((self.eval_fn)(&qp) - (self.eval_fn)(&qm)) / step;
                    jac.set_column(c, &col);
                }
                jac
            }
            DomainKind::Sphere { .. } => {
                let x = DVector::from_column_slice(q);
                let basis = self.domain.sphere_tangent_basis(&x);
                let mut jac = DMatrix::zeros(self.ambient_dim, basis.ncols());
                for c in 0..basis.ncols() {
                    let xp = (&x + basis.column(c) * ETA_FD).normalize();
                    let xm = (&x - basis.column(c) * ETA_FD).normalize();
                    let col = ((self.eval_fn)(xp.as_slice()) - (self.eval_fn)(xm.as_slice()))
                        / (2.0 * ETA_FD);
                    jac.set_column(c, &col);
                }
                jac
            }
        }
    }

    /// Tangent frame at p: Jacobian columns in domain coordinate order, with
    /// pole handling on cylinder-sphere domains.
    pub fn tangent_frame(&self, p: &[f64]) -> Result<TangentFrame> {
        self.domain.check_point(p)?;
        let mut q = p.to_vec();
        self.domain.canonicalize(&mut q);

        let raw = if let DomainKind::CylinderSphere2 = self.domain.kind {
            let h = q[1];
            if h.abs() >= 1.0 {
                let pole = self.pole_frame_fn.as_ref().ok_or(Error::DegeneratePoint {
                    locus: format!("pole h = {h} (no closed-form limit frame)"),
                    sigma: 0.0,
                })?;
                pole(q[0], h.signum())
            } else if h.abs() > 1.0 - POLE_BAND {
                let mut jac = self.jacobian(&q)?;
                let scale = self
                    .alpha_rescale
                    .as_ref()
                    .map(|f| f(h))
                    .unwrap_or(1.0 / (1.0 - h * h));
                let col = jac.column(0) * scale;
                jac.set_column(0, &col);
                jac
            } else {
                self.jacobian(&q)?
            }
        } else {
            self.jacobian(&q)?
        };

        let svd = raw.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= SIGMA_MIN * smax {
            return Err(Error::DegeneratePoint {
                locus: format!("{:?}", q),
                sigma: smin,
            });
        }
        Ok(TangentFrame::new((self.eval_fn)(&q), raw))
    }
}

/// Outcome of scanning the Jacobian rank over a coarse grid.
#[derive(Clone, Debug, Serialize)]
pub struct RankScanReport {
    pub min_singular_value: f64,
    pub max_singular_value: f64,
    pub worst_point: Vec<f64>,
    /// Points whose relative smallest singular value fell below the threshold.
    pub flagged: Vec<Vec<f64>>,
}

impl RankScanReport {
    pub fn passes(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Minimum singular value of the (chart-aware) Jacobian over a grid.
pub fn immersion_rank_scan(surface: &Immersion, grid: usize) -> Result<RankScanReport> {
    if grid < 2 {
        return Err(Error::Contract("grid must be >= 2 per coordinate".into()));
    }
    let points: Vec<Vec<f64>> = match surface.domain.kind {
        DomainKind::Sphere { .. } => surface
            .domain
            .sphere_grid(grid)?
            .into_iter()
            .map(|x| x.as_slice().to_vec())
            .collect(),
        _ => surface
            .domain
            .grid2(grid)?
            .into_iter()
            .map(|p| p.to_vec())
            .collect(),
    };
    let mut min_sv = f64::INFINITY;
    let mut max_sv: f64 = 0.0;
    let mut worst = points[0].clone();
    let mut flagged = Vec::new();
    for p in &points {
        match surface.tangent_frame(p) {
            Ok(frame) => {
                let svd = frame.vectors.svd(false, false);
                let smin = svd.singular_values.min();
                let smax = svd.singular_values.max();
                max_sv = max_sv.max(smax);
                if smin < min_sv {
                    min_sv = smin;
                    worst = p.clone();
                }
                if smin <= SIGMA_MIN * smax {
                    flagged.push(p.clone());
                }
            }
            Err(_) => flagged.push(p.clone()),
        }
    }
    Ok(RankScanReport {
        min_singular_value: min_sv,
        max_singular_value: max_sv,
        worst_point: worst,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Unit circle in R^2 as the identity immersion of S^1.
    fn circle() -> Immersion {
        Immersion::new(
            "circle",
            ParamDomain::sphere(2),
            2,
            Arc::new(|p: &[f64]| DVector::from_column_slice(p)),
        )
    }

    #[test]
    fn circle_rank_scan_is_one() {
        let r = immersion_rank_scan(&circle(), 64).unwrap();
        assert_abs_diff_eq!(r.min_singular_value, 1.0, epsilon = 1e-9);
        assert!(r.passes());
    }

    #[test]
    fn frame_swap_flips_orientation() {
        let base = DVector::zeros(4);
        let m = DMatrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let mut f = TangentFrame::new(base, m);
        assert!(f.positive);
        f.swap(0, 1);
        assert!(!f.positive);
        let om = f.oriented_matrix();
        // det of the 2x2 block must equal +1 after folding orientation in
        assert_abs_diff_eq!(
            om[(0, 0)] * om[(1, 1)] - om[(0, 1)] * om[(1, 0)],
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn out_of_range_h_is_domain_error() {
        let im = Immersion::new(
            "strip",
            ParamDomain::cylinder_sphere2(),
            3,
            Arc::new(|p: &[f64]| DVector::from_vec(vec![p[0].cos(), p[0].sin(), p[1]])),
        );
        assert!(matches!(im.eval(&[0.0, 1.5]), Err(Error::Domain(_))));
    }
}
