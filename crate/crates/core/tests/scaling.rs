use brownian_lab::potential::{capacity_moments, PathCapacityConfig};
use brownian_lab::sausage::{estimate_heat_content_scaled, HeatDiscretization};

// cap is homogeneous of degree one and beta[0, 4] has the law of 2 beta[0, 1],
// so with dt and delta scaled alongside the two means must agree.
#[test]
fn path_capacity_doubles_when_time_quadruples() {
    let base = PathCapacityConfig {
        dt: 1e-3,
        delta_factor: 1.0,
        paths: 60,
        walkers_per_path: 400,
        seed: 31,
    };
    let one = capacity_moments(1.0, &base).unwrap();
    let four = capacity_moments(4.0, &PathCapacityConfig { dt: 4e-3, seed: 32, ..base }).unwrap();
    let diff = four.mean[0] - 2.0 * one.mean[0];
    let se = four.se[0].hypot(2.0 * one.se[0]);
    assert!(diff.abs() <= 3.0 * se, "{} vs 2 x {}", four.mean[0], one.mean[0]);
}

#[test]
fn heat_content_is_linear_in_s_at_fixed_ratio() {
    // E(s, t) = s^{m/2} E(1, t/s): check E(2, 0.5) against 2^{3/2} E(1, 0.25).
    let disc = HeatDiscretization::new(0.2);
    let a = estimate_heat_content_scaled(3, 2.0, 0.5, 200, &disc, 41).unwrap();
    let b = estimate_heat_content_scaled(3, 1.0, 0.25, 200, &disc, 42).unwrap();
    let z = a.z_score(&b.scaled(2f64.powf(1.5)));
    assert!(z.abs() <= 3.0, "z = {z}");
}
