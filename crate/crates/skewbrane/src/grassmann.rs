//! Oriented-plane arithmetic: Plücker coordinates of k-planes in ℝ^N, the
//! rotated (x, y) coordinates of 2-planes in ℝ⁴, parallelism defects, oriented
//! orthogonal complements, and the transpose-permutation sign computation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::immersion::TangentFrame;

/// Relative rank threshold: singular directions below `SIGMA_MIN` times the
/// largest one are treated as degenerate.
pub const SIGMA_MIN: f64 = 1e-6;

/// An oriented k-plane in ℝ^N stored as a unit simple multivector (Plücker
/// coordinates in lexicographic index order) plus the orthonormal frame that
/// produced it.
#[derive(Clone, Debug)]
pub struct OrientedPlane {
    pub ambient_dim: usize,
    pub k: usize,
    /// Unit Plücker vector, C(N, k) entries in lex order of index tuples.
    pub plucker: DVector<f64>,
    /// Cached orthonormal frame, N×k, orientation matching `plucker`.
    pub frame: DMatrix<f64>,
}

/// Lexicographically ordered k-subsets of {0, …, n−1}.
pub fn lex_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(c.clone());
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

fn wedge_coordinates(frame: &DMatrix<f64>) -> DVector<f64> {
    let n = frame.nrows();
    let k = frame.ncols();
    let combos = lex_combinations(n, k);
    let mut p = DVector::zeros(combos.len());
    let mut minor = DMatrix::zeros(k, k);
    for (ci, rows) in combos.iter().enumerate() {
        for (a, &r) in rows.iter().enumerate() {
            for b in 0..k {
                minor[(a, b)] = frame[(r, b)];
            }
        }
        p[ci] = minor.clone().determinant();
    }
    p
}

/// Orthonormalize frame columns in order (sequential projection, no pivoting)
/// so that orientation is preserved.
fn orthonormalize_ordered(frame: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = frame.nrows();
    let k = frame.ncols();
    let mut q = DMatrix::zeros(n, k);
    let scale = frame
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    for j in 0..k {
        let mut u = frame.column(j).clone_owned();
        for b in 0..j {
            let d = q.column(b).dot(&frame.column(j));
            u -= q.column(b) * d;
        }
        let nu = u.norm();
        if nu <= SIGMA_MIN * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateFrame);
        }
        q.set_column(j, &(u / nu));
    }
    Ok(q)
}

impl OrientedPlane {
    /// Build the oriented plane spanned by a frame, orientation given by the
    /// column order.
    pub fn from_frame(frame: &TangentFrame) -> Result<Self> {
        Self::from_columns(&frame.oriented_matrix())
    }

    pub fn from_columns(frame: &DMatrix<f64>) -> Result<Self> {
        let q = orthonormalize_ordered(frame)?;
        let p = wedge_coordinates(&q);
        // the wedge of an orthonormal frame is already unit; normalize to
        // absorb rounding
        let norm = p.norm();
        if !(norm > 0.0) {
            return Err(Error::DegenerateFrame);
        }
        Ok(OrientedPlane {
            ambient_dim: frame.nrows(),
            k: frame.ncols(),
            plucker: p / norm,
            frame: q,
        })
    }

    pub fn reversed(&self) -> Self {
        let mut frame = self.frame.clone();
        let last = frame.ncols() - 1;
        let col = -frame.column(last).clone_owned();
        frame.set_column(last, &col);
        OrientedPlane {
            ambient_dim: self.ambient_dim,
            k: self.k,
            plucker: -&self.plucker,
            frame,
        }
    }

    /// Residual of the quadratic Plücker identity for 2-planes in ℝ⁴
    /// (p₁₂p₃₄ − p₁₃p₂₄ + p₁₄p₂₃); zero exactly when the bivector is simple.
    pub fn simplicity_residual(&self) -> Option<f64> {
        if self.ambient_dim == 4 && self.k == 2 {
            let p = &self.plucker;
            Some(p[0] * p[5] - p[1] * p[4] + p[2] * p[3])
        } else {
            None
        }
    }

    /// Oriented orthogonal complement: (frame, complement frame) positively
    /// oriented in ℝ^N.
    pub fn normal_plane(&self) -> OrientedPlane {
        let n = self.ambient_dim;
        let k = self.k;
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n - k);
        for i in 0..n {
            let mut u = DVector::zeros(n);
            u[i] = 1.0;
            for j in 0..k {
                let d = self.frame.column(j).dot(&u);
                u -= self.frame.column(j) * d;
            }
            for b in &cols {
                let d = b.dot(&u);
                u -= b * d;
            }
            let nu = u.norm();
            if nu > 1e-8 {
                cols.push(u / nu);
                if cols.len() == n - k {
                    break;
                }
            }
        }
        let mut comp = DMatrix::from_columns(&cols);
        // fix orientation: det [frame | comp] = +1
        let mut full = DMatrix::zeros(n, n);
        full.view_mut((0, 0), (n, k)).copy_from(&self.frame);
        full.view_mut((0, k), (n, n - k)).copy_from(&comp);
        if full.determinant() < 0.0 {
            let last = comp.ncols() - 1;
            let c = -comp.column(last).clone_owned();
            comp.set_column(last, &c);
        }
        OrientedPlane {
            ambient_dim: n,
            k: n - k,
            plucker: wedge_coordinates(&comp),
            frame: comp,
        }
    }
}

/// The rotated Plücker coordinates of a 2-plane in ℝ⁴:
/// x₁ = p₁₂+p₃₄, x₂ = p₂₃+p₁₄, x₃ = −p₁₃+p₂₄,
/// y₁ = p₁₂−p₃₄, y₂ = p₂₃−p₁₄, y₃ = −p₁₃−p₂₄.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PluckerXY {
    pub x: [f64; 3],
    pub y: [f64; 3],
}

impl PluckerXY {
    pub fn from_plucker6(p: &[f64]) -> Self {
        // lex order: p12 p13 p14 p23 p24 p34
        let (p12, p13, p14, p23, p24, p34) = (p[0], p[1], p[2], p[3], p[4], p[5]);
        PluckerXY {
            x: [p12 + p34, p23 + p14, -p13 + p24],
            y: [p12 - p34, p23 - p14, -p13 - p24],
        }
    }
}

/// Convert a 2-plane in ℝ⁴ to the rotated coordinates.
pub fn to_xy(plane: &OrientedPlane) -> Result<PluckerXY> {
    if plane.ambient_dim != 4 || plane.k != 2 {
        return Err(Error::Contract(format!(
            "xy coordinates need a 2-plane in R^4, got k={} in R^{}",
            plane.k, plane.ambient_dim
        )));
    }
    Ok(PluckerXY::from_plucker6(plane.plucker.as_slice()))
}

/// Distances between unit Plücker vectors measuring failure of positive /
/// negative parallelism.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DefectValue {
    /// |P₁ − P₂|: zero iff the oriented planes coincide.
    pub positive: f64,
    /// |P₁ + P₂|: zero iff the planes coincide with opposite orientations.
    pub negative: f64,
}

impl DefectValue {
    pub fn min(&self) -> f64 {
        self.positive.min(self.negative)
    }
}

pub fn parallel_defect(p1: &OrientedPlane, p2: &OrientedPlane) -> Result<DefectValue> {
    if p1.ambient_dim != p2.ambient_dim || p1.k != p2.k {
        return Err(Error::Contract(format!(
            "defect needs matching (N, k); got ({}, {}) vs ({}, {})",
            p1.ambient_dim, p1.k, p2.ambient_dim, p2.k
        )));
    }
    Ok(defect_of_pluckers(
        p1.plucker.as_slice(),
        p2.plucker.as_slice(),
    ))
}

/// Defect directly from unit Plücker coordinate slices (hot path for scans).
pub fn defect_of_pluckers(a: &[f64], b: &[f64]) -> DefectValue {
    let mut dpos = 0.0;
    let mut dneg = 0.0;
    for (u, v) in a.iter().zip(b) {
        dpos += (u - v) * (u - v);
        dneg += (u + v) * (u + v);
    }
    DefectValue {
        positive: dpos.sqrt(),
        negative: dneg.sqrt(),
    }
}

/// Result of the transpose-permutation sign computation for the permutation
/// τ: (i−1)p + j ↦ (j−1)q + i of {1, …, pq}.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct PermSignReport {
    pub p: usize,
    pub q: usize,
    pub inversions: u64,
    pub sign: i32,
    /// C(p,2)·C(q,2) mod 2.
    pub binom_parity: u8,
    /// (pq/4) mod 2.
    pub formula_parity: u8,
}

impl PermSignReport {
    pub fn consistent(&self) -> bool {
        let inv_parity = (self.inversions % 2) as u8;
        inv_parity == self.binom_parity
            && inv_parity == self.formula_parity
            && self.sign == if inv_parity == 1 { -1 } else { 1 }
    }
}

/// Sign of τ by explicit inversion counting, cross-checked against the two
/// parity formulas.
pub fn transpose_permutation_sign(p: usize, q: usize) -> Result<PermSignReport> {
    if p % 2 != 0 || q % 2 != 0 {
        return Err(Error::Contract("p and q must be even".into()));
    }
    if p == 0 || q == 0 || p * q > 10_000 {
        return Err(Error::Contract("need 0 < p*q <= 10^4".into()));
    }
    let n = p * q;
    // tau[position] = image, positions 0-based
    let mut tau = vec![0usize; n];
    for i in 1..=q {
        for j in 1..=p {
            tau[(i - 1) * p + j - 1] = (j - 1) * q + i - 1;
        }
    }
    let mut inversions: u64 = 0;
    for a in 0..n {
        for b in a + 1..n {
            if tau[a] > tau[b] {
                inversions += 1;
            }
        }
    }
    let binom = |m: usize| m * (m - 1) / 2;
    let binom_parity = ((binom(p) * binom(q)) % 2) as u8;
    let formula_parity = ((p * q / 4) % 2) as u8;
    Ok(PermSignReport {
        p,
        q,
        inversions,
        sign: if inversions % 2 == 1 { -1 } else { 1 },
        binom_parity,
        formula_parity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plane(cols: &[&[f64]]) -> OrientedPlane {
        let n = cols[0].len();
        let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        OrientedPlane::from_columns(&m).unwrap()
    }

    #[test]
    fn coordinate_plane_wedge() {
        let p = plane(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        assert_abs_diff_eq!(p.plucker[0], 1.0, epsilon = 1e-15);
        for i in 1..6 {
            assert_abs_diff_eq!(p.plucker[i], 0.0, epsilon = 1e-15);
        }
        // swapped order flips the sign
        let ps = plane(&[&[0.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]]);
        assert_abs_diff_eq!(ps.plucker[0], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn dependent_frame_is_rejected() {
        let m = DMatrix::from_fn(4, 2, |i, j| if i == 0 { 1.0 + j as f64 } else { 0.0 });
        assert!(matches!(
            OrientedPlane::from_columns(&m),
            Err(Error::DegenerateFrame)
        ));
    }

    #[test]
    fn xy_change_on_coordinate_planes() {
        let p12 = plane(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        let xy = to_xy(&p12).unwrap();
        assert_eq!(xy.x[0], 1.0);
        assert_eq!(xy.y[0], 1.0);
        assert_eq!(xy.x[1], 0.0);
        assert_eq!(xy.y[2], 0.0);

        let p34 = plane(&[&[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]]);
        let xy = to_xy(&p34).unwrap();
        assert_eq!(xy.x[0], 1.0);
        assert_eq!(xy.y[0], -1.0);

        // orientation reversal negates all six values
        let rev = to_xy(&p34.reversed()).unwrap();
        for i in 0..3 {
            assert_eq!(rev.x[i], -xy.x[i]);
            assert_eq!(rev.y[i], -xy.y[i]);
        }
    }

    #[test]
    fn normal_plane_of_e12_is_e34() {
        let p = plane(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        let npl = p.normal_plane();
        assert_abs_diff_eq!(npl.frame.column(0)[2].abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(npl.frame.column(1)[3].abs(), 1.0, epsilon = 1e-14);
        let mut full = DMatrix::zeros(4, 4);
        full.view_mut((0, 0), (4, 2)).copy_from(&p.frame);
        full.view_mut((0, 2), (4, 2)).copy_from(&npl.frame);
        assert!(full.determinant() > 0.0);

        // flipping the input orientation flips the output
        let nrev = p.reversed().normal_plane();
        assert_abs_diff_eq!((&nrev.plucker + &npl.plucker).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn double_complement_returns_same_unoriented_plane() {
        let p = plane(&[&[1.0, 0.5, -0.3, 0.2], &[0.0, 1.0, 0.7, -0.1]]);
        let q = p.normal_plane().normal_plane();
        let d = parallel_defect(&p, &q).unwrap();
        // (−1)^{k(N−k)} = +1 for k=2, N=4
        assert_abs_diff_eq!(d.positive, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn defect_of_identical_and_reversed_planes() {
        let p = plane(&[&[1.0, 0.2, 0.0, -0.4], &[0.3, 1.0, 0.5, 0.0]]);
        let d = parallel_defect(&p, &p).unwrap();
        assert_abs_diff_eq!(d.positive, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.negative, 2.0, epsilon = 1e-12);
        let dr = parallel_defect(&p, &p.reversed()).unwrap();
        assert_abs_diff_eq!(dr.negative, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dr.positive, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_dims_are_contract_errors() {
        let p = plane(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        let q = plane(&[&[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0, 0.0]]);
        assert!(parallel_defect(&p, &q).is_err());
        assert!(to_xy(&q).is_err());
    }

    #[test]
    fn perm_sign_2_2_has_one_inversion() {
        let r = transpose_permutation_sign(2, 2).unwrap();
        assert_eq!(r.inversions, 1);
        assert_eq!(r.sign, -1);
        assert!(r.consistent());
    }

    #[test]
    fn perm_sign_formula_agrees_for_small_even_pq() {
        for p in [2usize, 4, 6, 8] {
            for q in [2usize, 4, 6, 8] {
                let r = transpose_permutation_sign(p, q).unwrap();
                assert!(r.consistent(), "inconsistent parities at ({p},{q}): {r:?}");
            }
        }
        assert_eq!(transpose_permutation_sign(2, 4).unwrap().sign, 1);
        assert_eq!(transpose_permutation_sign(4, 4).unwrap().sign, 1);
        assert_eq!(transpose_permutation_sign(6, 6).unwrap().sign, -1);
    }

    #[test]
    fn odd_inputs_rejected() {
        assert!(transpose_permutation_sign(3, 2).is_err());
        assert!(transpose_permutation_sign(2, 5).is_err());
    }
}
