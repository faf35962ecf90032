//! The closed-form intensity against numeric maximization of the approximate
//! per-cell log-likelihood `-mλ + (h/e)·ln(1 - exp(-eλ))`.

use lambda_field::{Beam, CellIndex, GridGeometry, LambdaGrid, Point2, SensorModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E: f64 = 0.04;
const LAMBDA_MAX: f64 = 100.0;

fn log_likelihood(h: f64, m: f64, lambda: f64) -> f64 {
    -m * lambda + h / E * (-(-E * lambda).exp_m1()).ln()
}

/// Gradient of the approximate log-likelihood per unit cell area.
fn gradient(h: f64, m: f64, lambda: f64) -> f64 {
    -m + h / (E * lambda).exp_m1()
}

/// Maximizer over [0, LAMBDA_MAX] by bisection on the gradient sign; the
/// objective is concave so the sign changes once.
fn argmax_bisection(h: f64, m: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    if gradient(h, m, LAMBDA_MAX) >= 0.0 {
        return LAMBDA_MAX;
    }
    let (mut lo, mut hi) = (0.0_f64, LAMBDA_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if gradient(h, m, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Derivative-free cross-check.
fn argmax_golden(h: f64, m: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-12_f64, LAMBDA_MAX);
    let f = |x: f64| log_likelihood(h, m, x);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Up to 50 beams shot along a strip of up to 5 cells, each either passing
/// through or returning somewhere along it.
fn scenario(rng: &mut ChaCha8Rng) -> LambdaGrid {
    let n_cells = rng.gen_range(1..=5);
    let g = GridGeometry::new(Point2::new(0.0, 0.0), 0.2, n_cells, 1).unwrap();
    let sensor = SensorModel::with_error_area(0.99, 0.9999, E, 10.0).unwrap();
    let mut grid = LambdaGrid::new(g, sensor, LAMBDA_MAX).unwrap();
    let length = g.width();
    for _ in 0..rng.gen_range(1..=50) {
        let origin = Point2::new(1e-3, rng.gen_range(0.05..0.15));
        let hit = rng.gen_bool(0.6);
        let range = if hit { rng.gen_range(0.0..length - 2e-3) } else { 10.0 };
        grid.apply_beam(&Beam {
            origin,
            angle: 0.0,
            range,
            hit,
        })
        .unwrap();
    }
    grid
}

#[test]
fn closed_form_matches_numeric_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut interior = 0;
    for _ in 0..100 {
        let grid = scenario(&mut rng);
        let area = grid.geometry().cell_area();
        for col in 0..grid.geometry().n_cols() {
            let cell = CellIndex::new(col, 0);
            let stats = grid.stats(cell).unwrap();
            let (h, m) = (stats.hits as f64, stats.misses as f64);
            let closed = grid.lambda(cell).unwrap();
            if !stats.is_observed() {
                assert_eq!(closed, 0.0);
                continue;
            }
            let numeric = argmax_bisection(h, m);
            assert!((closed - numeric).abs() < 1e-6, "h={h} m={m}: {closed} vs {numeric}");
            let golden = argmax_golden(h, m);
            assert!(
                (closed - golden).abs() < 1e-4,
                "h={h} m={m}: {closed} vs golden {golden}"
            );
            if closed > 0.0 && closed < LAMBDA_MAX {
                interior += 1;
                let derivative = area * gradient(h, m, closed);
                assert!(derivative.abs() < 1e-9, "h={h} m={m}: derivative {derivative}");
            }
        }
    }
    assert!(interior > 50, "only {interior} interior optima exercised");
}
