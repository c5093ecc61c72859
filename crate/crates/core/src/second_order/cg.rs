use crate::error::Result;
use crate::linalg::{axpy, dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    MaxIter,
    /// `pᵀAp ≤ 0` was met; the iterate before that direction is returned.
    NegativeCurvature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final recursive residual norm `‖b − A x‖`.
    pub residual: f64,
    pub status: CgStatus,
}

/// Conjugate gradients for `A x = b` from `x = 0`, stopping once
/// `‖b − A x‖ ≤ tol ‖b‖`.
pub fn cg_solve<F>(mut matvec: F, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * rr.sqrt();
    let mut iterations = 0;
    let status = loop {
        if rr.sqrt() <= target || rr == 0.0 {
            break CgStatus::Converged;
        }
        if iterations >= max_iter {
            break CgStatus::MaxIter;
        }
        let ap = matvec(&p)?;
        iterations += 1;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break CgStatus::NegativeCurvature;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    };
    Ok(CgOutcome {
        x,
        iterations,
        residual: rr.sqrt(),
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteihaugOutcome {
    pub step: Vec<f64>,
    pub boundary_hit: bool,
    pub negative_curvature: bool,
    pub iterations: usize,
    /// `m(0) − m(step) = −gᵀs − ½ sᵀBs`.
    pub model_decrease: f64,
}

/// Positive root `τ` of `‖z + τ p‖ = Δ`.
fn to_boundary(z: &[f64], p: &[f64], radius: f64) -> f64 {
    let pp = dot(p, p);
    let zp = dot(z, p);
    let zz = dot(z, z);
    let disc = (zp * zp + pp * (radius * radius - zz)).max(0.0);
    let sq = disc.sqrt();
    // Stable form of (−zp + sq) / pp.
    if zp <= 0.0 {
        (sq - zp) / pp
    } else {
        (radius * radius - zz).max(0.0) / (sq + zp)
    }
}

/// Steihaug-Toint truncated CG for `min gᵀs + ½ sᵀBs` over `‖s‖ ≤ Δ`.
pub fn steihaug_cg<F>(mut matvec: F, g: &[f64], radius: f64, tol: f64, max_iter: usize) -> Result<SteihaugOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(radius > 0.0) {
        return Err(crate::error::Error::invalid(format!("trust radius must be positive, got {radius}")));
    }
    let d = g.len();
    let mut z = vec![0.0; d];
    let mut bz = vec![0.0; d];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * rr.sqrt();
    let mut boundary_hit = false;
    let mut negative_curvature = false;
    let mut iterations = 0;
    while rr.sqrt() > target && rr > 0.0 && iterations < max_iter {
        let bp = matvec(&p)?;
        iterations += 1;
        let pbp = dot(&p, &bp);
        if !(pbp > 0.0) {
            let tau = to_boundary(&z, &p, radius);
            axpy(tau, &p, &mut z);
            axpy(tau, &bp, &mut bz);
            negative_curvature = true;
            boundary_hit = true;
            break;
        }
        let alpha = rr / pbp;
        let mut z_next = z.clone();
        axpy(alpha, &p, &mut z_next);
        if norm(&z_next) >= radius {
            let tau = to_boundary(&z, &p, radius);
            axpy(tau, &p, &mut z);
            axpy(tau, &bp, &mut bz);
            boundary_hit = true;
            break;
        }
        z = z_next;
        axpy(alpha, &bp, &mut bz);
        axpy(-alpha, &bp, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    let len = norm(&z);
    if len > radius {
        let c = radius / len;
        z.iter_mut().for_each(|v| *v *= c);
        bz.iter_mut().for_each(|v| *v *= c);
    }
    let model_decrease = -dot(g, &z) - 0.5 * dot(&z, &bz);
    Ok(SteihaugOutcome {
        step: z,
        boundary_hit,
        negative_curvature,
        iterations,
        model_decrease,
    })
}
