//! Closed-form constants from potential theory.

use std::f64::consts::PI;

/// `Gamma(k / 2)` for a positive integer `k`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0, "Gamma(0) is undefined");
    let mut value = if k % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut j = if k % 2 == 0 { 2 } else { 1 };
    while j < k {
        value *= j as f64 / 2.0;
        j += 2;
    }
    value
}

/// Surface area of the unit sphere in R^m.
pub fn sphere_area(m: u32) -> f64 {
    2.0 * PI.powf(m as f64 / 2.0) / gamma_half(m)
}

/// Newtonian capacity of the unit ball in R^m (m >= 3), normalized so that
/// the capacity equals the mass of the equilibrium measure for the Green
/// function of `-Laplacian`.
pub fn ball_capacity(m: u32) -> f64 {
    assert!(m >= 3, "Newtonian capacity needs m >= 3");
    4.0 * PI.powf(m as f64 / 2.0) / gamma_half(m - 2)
}

/// Limit of `(s / ln s)^{1/(m-2)} E rho(s)` on the m-torus, m >= 3.
pub fn inradius_limit(m: u32) -> f64 {
    assert!(m >= 3);
    let mf = m as f64;
    (mf / ((mf - 2.0) * ball_capacity(m))).powf(1.0 / (mf - 2.0))
}

/// Limit of `s^{-1/2} ln E rho(s)` on the 2-torus.
pub fn inradius_log_slope_2d() -> f64 {
    -PI.sqrt()
}

/// Limit of `E(s, t) ln(1/t) / s` as `t -> 0` in the plane.
pub fn heat_content_log_limit_2d() -> f64 {
    4.0 * PI
}

/// Leading small-radius behaviour of the first Dirichlet eigenvalue of the
/// unit torus with a ball of radius `epsilon` removed.
pub fn small_ball_eigenvalue(m: u32, epsilon: f64) -> f64 {
    if m == 2 {
        2.0 * PI / (1.0 / epsilon).ln()
    } else {
        ball_capacity(m) * epsilon.powi(m as i32 - 2)
    }
}
