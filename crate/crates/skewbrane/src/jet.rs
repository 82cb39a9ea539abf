//! Second-order forward values: scalar expressions carrying exact gradient
//! and Hessian with respect to the ambient coordinates.
//!
//! Support functions and section functions are assembled from these, so their
//! gradients and Hessians are closed-form compositions rather than finite
//! differences. Dimension is dynamic (the skew-sphere builder works in ℝ^{2n}).

use nalgebra::{DMatrix, DVector};

/// Value, gradient and Hessian of a scalar expression at a point.
#[derive(Clone, Debug)]
pub struct Jet2 {
    pub v: f64,
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
}

impl Jet2 {
    pub fn constant(dim: usize, v: f64) -> Self {
        Jet2 {
            v,
            g: DVector::zeros(dim),
            h: DMatrix::zeros(dim, dim),
        }
    }

    /// The i-th coordinate function evaluated at `x`.
    pub fn var(x: &DVector<f64>, i: usize) -> Self {
        let dim = x.len();
        let mut g = DVector::zeros(dim);
        g[i] = 1.0;
        Jet2 {
            v: x[i],
            g,
            h: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            g: &self.g + &o.g,
            h: &self.h + &o.h,
        }
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            v: self.v - o.v,
            g: &self.g - &o.g,
            h: &self.h - &o.h,
        }
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            v: -self.v,
            g: -&self.g,
            h: -&self.h,
        }
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            v: c * self.v,
            g: c * &self.g,
            h: c * &self.h,
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet2 {
        Jet2 {
            v: self.v + c,
            g: self.g.clone(),
            h: self.h.clone(),
        }
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let cross = &self.g * o.g.transpose();
        Jet2 {
            v: self.v * o.v,
            g: o.v * &self.g + self.v * &o.g,
            h: o.v * &self.h + self.v * &o.h + &cross + cross.transpose(),
        }
    }

    /// Composition with a scalar function given its first two derivatives at `self.v`.
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Jet2 {
        Jet2 {
            v: f,
            g: df * &self.g,
            h: df * &self.h + d2f * (&self.g * self.g.transpose()),
        }
    }

    pub fn recip(&self) -> Jet2 {
        let u = self.v;
        self.chain(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u))
    }

    pub fn div(&self, o: &Jet2) -> Jet2 {
        self.mul(&o.recip())
    }

    pub fn sqrt(&self) -> Jet2 {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    /// |x|² as a jet.
    pub fn norm_sq(x: &DVector<f64>) -> Jet2 {
        let dim = x.len();
        Jet2 {
            v: x.norm_squared(),
            g: 2.0 * x,
            h: DMatrix::identity(dim, dim) * 2.0,
        }
    }

    /// |x| as a jet (x must be nonzero).
    pub fn norm(x: &DVector<f64>) -> Jet2 {
        Jet2::norm_sq(x).sqrt()
    }
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1, strictly increasing in between.
///
/// s(t) = φ(t)/(φ(t)+φ(1−t)) with φ(t) = exp(−1/t).
pub fn smoothstep_jet(t: &Jet2) -> Jet2 {
    let dim = t.dim();
    if t.v <= 0.0 {
        return Jet2::constant(dim, 0.0);
    }
    if t.v >= 1.0 {
        return Jet2::constant(dim, 1.0);
    }
    let phi = |u: f64| (-1.0 / u).exp();
    let dphi = |u: f64| phi(u) / (u * u);
    let d2phi = |u: f64| phi(u) * (1.0 / (u * u * u * u) - 2.0 / (u * u * u));

    let u = t.v;
    let p = t.chain(phi(u), dphi(u), d2phi(u));
    let w = 1.0 - u;
    let q = t.chain(phi(w), -dphi(w), d2phi(w));
    p.div(&p.add(&q))
}

/// Plain scalar version of [`smoothstep_jet`] for value-only call sites.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let phi = |u: f64| (-1.0_f64 / u).exp();
    phi(t) / (phi(t) + phi(1.0 - t))
}
