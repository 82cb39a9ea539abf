//! Parameter domains for the built-in surfaces: the flat 2-torus, the
//! cylindrical-coordinate 2-sphere, and round spheres S^{m−1} given by unit
//! vectors in ℝ^m.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Which manifold the surface parameters live on.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    /// (α, β) ∈ [0, 2π)², both periodic.
    Torus2,
    /// (α, h) ∈ [0, 2π) × [−1, 1]; α periodic, poles at h = ±1.
    CylinderSphere2,
    /// Unit vectors x ∈ S^{m−1} ⊂ ℝ^m; points are the m ambient coordinates.
    Sphere { ambient_dim: usize },
}

#[derive(Clone, Debug)]
pub struct ParamDomain {
    pub kind: DomainKind,
}

impl ParamDomain {
    pub fn torus2() -> Self {
        ParamDomain {
            kind: DomainKind::Torus2,
        }
    }

    pub fn cylinder_sphere2() -> Self {
        ParamDomain {
            kind: DomainKind::CylinderSphere2,
        }
    }

    pub fn sphere(ambient_dim: usize) -> Self {
        ParamDomain {
            kind: DomainKind::Sphere { ambient_dim },
        }
    }

    /// Number of stored coordinates per point.
    pub fn point_len(&self) -> usize {
        match self.kind {
            DomainKind::Torus2 | DomainKind::CylinderSphere2 => 2,
            DomainKind::Sphere { ambient_dim } => ambient_dim,
        }
    }

    /// Intrinsic dimension (the k of the immersion).
    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Torus2 | DomainKind::CylinderSphere2 => 2,
            DomainKind::Sphere { ambient_dim } => ambient_dim - 1,
        }
    }

    pub fn periodic(&self, coord: usize) -> bool {
        match self.kind {
            DomainKind::Torus2 => true,
            DomainKind::CylinderSphere2 => coord == 0,
            DomainKind::Sphere { .. } => false,
        }
    }

    /// Bring a point into canonical coordinates (wrap angles, clamp h,
    /// renormalize sphere vectors).
    pub fn canonicalize(&self, p: &mut [f64]) {
        match self.kind {
            DomainKind::Torus2 => {
                p[0] = p[0].rem_euclid(TWO_PI);
                p[1] = p[1].rem_euclid(TWO_PI);
            }
            DomainKind::CylinderSphere2 => {
                p[0] = p[0].rem_euclid(TWO_PI);
                p[1] = p[1].clamp(-1.0, 1.0);
            }
            DomainKind::Sphere { .. } => {
                let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 0.0 {
                    for v in p.iter_mut() {
                        *v /= n;
                    }
                }
            }
        }
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.point_len() {
            return Err(Error::Contract(format!(
                "point has {} coordinates, domain needs {}",
                p.len(),
                self.point_len()
            )));
        }
        match self.kind {
            DomainKind::Torus2 => Ok(()),
            DomainKind::CylinderSphere2 => {
                if p[1] < -1.0 - 1e-12 || p[1] > 1.0 + 1e-12 {
                    Err(Error::Domain(format!(
                        "h = {} outside [-1, 1] on cylinder-sphere domain",
                        p[1]
                    )))
                } else {
                    Ok(())
                }
            }
            DomainKind::Sphere { .. } => {
                let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-8 {
                    Err(Error::Domain(format!("|x| = {n} is not a unit vector")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Geometry-aware distance between two domain points.
    ///
    /// Coordinate distance is wrong at the cylinder-sphere poles (the whole
    /// circle h = ±1 is one point), so sphere-type domains use chordal
    /// distance on the underlying sphere.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        match self.kind {
            DomainKind::Torus2 => {
                let da = angle_diff(p[0], q[0]);
                let db = angle_diff(p[1], q[1]);
                (da * da + db * db).sqrt()
            }
            DomainKind::CylinderSphere2 => {
                let a = embed_s2(p);
                let b = embed_s2(q);
                (a - b).norm()
            }
            DomainKind::Sphere { .. } => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Deterministic rectangular grid for 2-parameter domains.
    ///
    /// Periodic coordinates get `n` points over a period without the endpoint;
    /// the h coordinate gets `n` points over [−1, 1] inclusive.
    pub fn grid2(&self, n: usize) -> Result<Vec<[f64; 2]>> {
        if n < 2 {
            return Err(Error::Contract("grid needs at least 2 points per coordinate".into()));
        }
        let mut pts = Vec::with_capacity(n * n);
        match self.kind {
            DomainKind::Torus2 => {
                for i in 0..n {
                    for j in 0..n {
                        pts.push([TWO_PI * i as f64 / n as f64, TWO_PI * j as f64 / n as f64]);
                    }
                }
            }
            DomainKind::CylinderSphere2 => {
                for i in 0..n {
                    for j in 0..n {
                        let h = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
                        pts.push([TWO_PI * i as f64 / n as f64, h]);
                    }
                }
            }
            DomainKind::Sphere { .. } => {
                return Err(Error::Contract(
                    "grid2 is only defined for 2-parameter domains".into(),
                ))
            }
        }
        Ok(pts)
    }

    /// Lattice-projection grid on S^{m−1}: nodes of an n-per-axis lattice on
    /// [−1,1]^m, normalized to the sphere (near-zero nodes skipped).
    pub fn sphere_grid(&self, n: usize) -> Result<Vec<DVector<f64>>> {
        let m = match self.kind {
            DomainKind::Sphere { ambient_dim } => ambient_dim,
            _ => return Err(Error::Contract("sphere_grid needs a sphere domain".into())),
        };
        let mut pts = Vec::new();
        let mut idx = vec![0usize; m];
        loop {
            let x: DVector<f64> = DVector::from_iterator(
                m,
                idx.iter()
                    .map(|&i| -1.0 + 2.0 * i as f64 / (n - 1) as f64),
            );
            let norm = x.norm();
            if norm > 1e-6 {
                pts.push(x / norm);
            }
            // odometer increment
            let mut c = 0;
            loop {
                idx[c] += 1;
                if idx[c] < n {
                    break;
                }
                idx[c] = 0;
                c += 1;
                if c == m {
                    return Ok(pts);
                }
            }
        }
    }

    /// Orthonormal tangent basis at a sphere point (deterministic: projected
    /// coordinate axes, Gram–Schmidt in index order).
    pub fn sphere_tangent_basis(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = x.len();
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
        for i in 0..m {
            let mut u = DVector::zeros(m);
            u[i] = 1.0;
            u -= x * x[i];
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
}

/// Shortest signed angular difference.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(TWO_PI);
    if d > std::f64::consts::PI {
        d -= TWO_PI;
    }
    d
}

/// The underlying S² point of cylindrical coordinates (α, h).
pub fn embed_s2(p: &[f64]) -> DVector<f64> {
    let r = (1.0 - p[1] * p[1]).max(0.0).sqrt();
    DVector::from_vec(vec![r * p[0].cos(), r * p[0].sin(), p[1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_distance_wraps() {
        let d = ParamDomain::torus2();
        let p = [0.1, 0.0];
        let q = [TWO_PI - 0.1, 0.0];
        assert!((d.distance(&p, &q) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn pole_circle_collapses_to_a_point() {
        let d = ParamDomain::cylinder_sphere2();
        let p = [0.3, 1.0];
        let q = [2.9, 1.0];
        assert!(d.distance(&p, &q) < 1e-12);
        // but north and south poles are far apart
        assert!((d.distance(&[0.0, 1.0], &[0.0, -1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_grid_is_unit_and_nonempty() {
        let d = ParamDomain::sphere(4);
        let g = d.sphere_grid(5).unwrap();
        assert!(g.len() > 500);
        for x in &g {
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent() {
        let d = ParamDomain::sphere(4);
        let x = DVector::from_vec(vec![0.5, -0.5, 0.5, 0.5]);
        let t = d.sphere_tangent_basis(&x);
        assert_eq!(t.ncols(), 3);
        for i in 0..3 {
            assert!(t.column(i).dot(&x).abs() < 1e-12);
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((t.column(i).dot(&t.column(j)) - expect).abs() < 1e-12);
            }
        }
    }
}
