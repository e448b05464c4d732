//! Euclidean projection onto a small polyhedron `{x : a_i·x ≤ b_i}`.
//!
//! The projection `min ½‖x − x0‖²` is solved by a dual active-set iteration
//! (Goldfarb–Idnani with identity Hessian). Active normals stay linearly
//! independent, so every inner solve is a Cholesky factorization of the
//! active Gram matrix. The polyhedron is declared empty when the dual is
//! unbounded: either the new constraint normal lies in the span of the active
//! ones with no multiplier left to drop, or the multipliers outgrow a cap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problem::{norm, Point};

/// `{x : a·x ≤ b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let n = norm(&normal);
        if !(n > 0.0) || !n.is_finite() || !offset.is_finite() {
            return Err(invalid("halfspace needs a finite nonzero normal and finite offset"));
        }
        Ok(Self { normal, offset })
    }

    /// `b − a·x`; nonnegative inside.
    pub fn slack(&self, x: &Point) -> f64 {
        self.offset - self.normal.dot(x)
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.slack(x) >= -tol
    }
}

/// Outcome of [`project_polyhedron`].
#[derive(Debug, Clone, PartialEq)]
pub enum PolyProjection {
    Feasible(Point),
    /// Nonnegative multipliers `μ` with `Σ μ_i a_i ≈ 0` and `Σ μ_i b_i < 0`.
    Empty { certificate: Vec<f64> },
}

impl PolyProjection {
    pub fn point(&self) -> Option<&Point> {
        match self {
            Self::Feasible(p) => Some(p),
            Self::Empty { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Empty { .. })
    }
}

const MULTIPLIER_CAP: f64 = 1e8;
const COND_LIMIT: f64 = 1e14;

/// Exact projection of `x0` onto the intersection of `cuts`.
pub fn project_polyhedron(x0: &Point, cuts: &[Halfspace]) -> Result<PolyProjection> {
    let n = x0.len();
    for c in cuts {
        crate::error::check_dim(n, c.normal.len())?;
    }
    let norms: Vec<f64> = cuts.iter().map(|c| norm(&c.normal)).collect();
    let scale = 1.0
        + norm(x0)
        + cuts
            .iter()
            .zip(&norms)
            .map(|(c, nrm)| c.offset.abs() / nrm)
            .fold(0.0, f64::max);
    let feas_tol = 1e-13 * scale;

    let mut x = x0.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let max_outer = 20 * (cuts.len() + 1);

    for _ in 0..max_outer {
        // most violated constraint, measured in distance units
        let mut worst: Option<(usize, f64)> = None;
        for (i, c) in cuts.iter().enumerate() {
            if active.contains(&i) {
                continue;
            }
            let viol = -c.slack(&x) / norms[i];
            if viol > feas_tol && worst.is_none_or(|(_, v)| viol > v) {
                worst = Some((i, viol));
            }
        }
        let Some((p, _)) = worst else {
            return Ok(PolyProjection::Feasible(x));
        };

        // ≥-form normal of the entering constraint is -a_p
        let mut u_plus = mult.clone();
        let mut u_p = 0.0;
        let np = cuts[p].normal.mapv(|v| -v);
        let mut inner = 0;
        loop {
            inner += 1;
            if inner > 4 * (cuts.len() + 1) {
                return Err(Error::Numerical(
                    "polyhedral projection failed to add a constraint".into(),
                ));
            }
            let (r, z) = split_direction(&np, &active, cuts)?;
            let zz = z.dot(&z);
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 1e-12 {
                    let ratio = u_plus[j] / rj;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }
            let s_p = -cuts[p].slack(&x);
            // z·n_p = ‖z‖² for the identity metric
            let t2 = if zz <= 1e-20 * np.dot(&np) {
                f64::INFINITY
            } else {
                s_p / zz
            };

            if t1.is_infinite() && t2.is_infinite() {
                let mut cert = vec![0.0; cuts.len()];
                cert[p] = 1.0;
                for (j, &idx) in active.iter().enumerate() {
                    cert[idx] = (-r[j]).max(0.0);
                }
                return Ok(PolyProjection::Empty { certificate: cert });
            }
            if t2.is_infinite() {
                for (u, rj) in u_plus.iter_mut().zip(&r) {
                    *u -= t1 * rj;
                }
                u_p += t1;
                let l = drop.expect("finite t1 has an index");
                active.remove(l);
                u_plus.remove(l);
                continue;
            }
            let t = t1.min(t2);
            x.scaled_add(t, &z);
            for (u, rj) in u_plus.iter_mut().zip(&r) {
                *u -= t * rj;
            }
            u_p += t;
            let mnorm = u_plus.iter().map(|v| v * v).sum::<f64>().sqrt() + u_p;
            if mnorm > MULTIPLIER_CAP * scale {
                let mut cert = vec![0.0; cuts.len()];
                cert[p] = u_p;
                for (j, &idx) in active.iter().enumerate() {
                    cert[idx] = u_plus[j].max(0.0);
                }
                return Ok(PolyProjection::Empty { certificate: cert });
            }
            if t2 <= t1 {
                active.push(p);
                u_plus.push(u_p);
                mult = u_plus;
                break;
            }
            let l = drop.expect("partial step has an index");
            active.remove(l);
            u_plus.remove(l);
        }
    }
    Err(Error::Numerical(
        "polyhedral projection exceeded its iteration budget".into(),
    ))
}

/// Splits the entering normal `np` into its component in the span of the
/// active normals (coefficients `r`) and the orthogonal remainder `z`.
fn split_direction(np: &Point, active: &[usize], cuts: &[Halfspace]) -> Result<(Vec<f64>, Point)> {
    if active.is_empty() {
        return Ok((Vec::new(), np.clone()));
    }
    let q = active.len();
    let normals: Vec<Point> = active.iter().map(|&i| cuts[i].normal.mapv(|v| -v)).collect();
    let gram = DMatrix::from_fn(q, q, |i, j| normals[i].dot(&normals[j]));
    let rhs = DVector::from_fn(q, |i, _| normals[i].dot(np));
    let chol = gram.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!("active Gram matrix ({q}x{q}) is not positive definite"))
    })?;
    let diag = chol.l().diagonal();
    let (dmin, dmax) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if (dmax / dmin).powi(2) > COND_LIMIT {
        return Err(Error::Numerical(format!(
            "active Gram matrix conditioning {:.3e} exceeds {COND_LIMIT:.0e}",
            (dmax / dmin).powi(2)
        )));
    }
    let r = chol.solve(&rhs);
    let mut z = np.clone();
    for (nj, rj) in normals.iter().zip(r.iter()) {
        z.scaled_add(-rj, nj);
    }
    Ok((r.iter().copied().collect(), z))
}
