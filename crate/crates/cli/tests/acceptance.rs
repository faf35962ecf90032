//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit status
//! if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use lambda_field::{
    collision_pdf, confidence_bounds, expected_risk, io, path_collision_probability, Beam, CellIndex, CellStats,
    Estimator, GridGeometry, LambdaGrid, PathCrossing, Point2, SensorModel,
};
use lambda_field_cli::{
    cmd_compare, cmd_eval_path, cmd_map, cmd_plan, CompareArgs, Engine, EvalPathArgs, ScenarioConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:.0?}"))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn double_size_cells() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(err)?;
    let rows = cmd_compare(&CompareArgs {
        probability: 0.1,
        calibration_resolution: 0.5,
        resolutions: vec![0.5, 1.0],
        origin: Point2::new(0.0, 0.0),
        extent: (2.0, 2.0),
        path: common::fig1_path(dir.path()),
        width: 0.5,
        out: None,
    })
    .map_err(err)?;
    let (fine, coarse) = (rows[0], rows[1]);
    check((fine.p_bayes_naive - 0.3439).abs() < 1e-12, || {
        format!("naive 4 cells {}", fine.p_bayes_naive)
    })?;
    check((coarse.p_bayes_naive - 0.19).abs() < 1e-12, || {
        format!("naive 2 cells {}", coarse.p_bayes_naive)
    })?;
    check((fine.p_lambda - coarse.p_lambda).abs() < 1e-9, || {
        format!("intensity {} vs {}", fine.p_lambda, coarse.p_lambda)
    })?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "naive {:.4} / {:.4}, intensity {:.10} / {:.10}",
        fine.p_bayes_naive, coarse.p_bayes_naive, fine.p_lambda, coarse.p_lambda
    ))
}

fn single_dense_cell() -> Outcome {
    let start = Instant::now();
    let mut cells = vec![(0.04, 0.1); 58];
    cells.insert(29, (0.04, 2.0));
    let c = PathCrossing::from_areas(&cells).map_err(err)?;
    let p = path_collision_probability(&c, Estimator::Mle);
    let exact = 1.0 - (-0.312f64).exp();
    check((p - exact).abs() < 1e-12, || format!("P = {p}, expected {exact}"))?;
    check((p - 0.27).abs() <= 0.005, || format!("P = {p}"))?;

    // the same field rebuilt from counts and evaluated through the command
    let dir = tempfile::tempdir().map_err(err)?;
    let (dump, path) = common::fig4_field(dir.path());
    let s = cmd_eval_path(&EvalPathArgs {
        dump,
        path,
        engine: Engine::Lambda,
        bound: Estimator::Mle,
        shape: lambda_field::RobotShape::new(0.2, 0.2, 1.0).map_err(err)?,
        speed: 1.0,
        unit_risk: false,
        report: None,
    })
    .map_err(err)?;
    check((s.p_collision - 0.27).abs() <= 0.005, || {
        format!("eval-path P = {}", s.p_collision)
    })?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("P = {p:.4} exact, {:.4} from counts", s.p_collision))
}

const E: f64 = 0.04;
const LAMBDA_MAX: f64 = 100.0;

/// Maximizer of `-mλ + (h/e)·ln(1 - exp(-eλ))` over [0, LAMBDA_MAX] by
/// bisection on the sign of its (decreasing) gradient.
fn numeric_mle(h: f64, m: f64) -> f64 {
    let grad = |l: f64| -m + h / (E * l).exp_m1();
    if h == 0.0 {
        return 0.0;
    }
    if grad(LAMBDA_MAX) >= 0.0 {
        return LAMBDA_MAX;
    }
    let (mut lo, mut hi) = (0.0_f64, LAMBDA_MAX);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if grad(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn mle_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let sensor = SensorModel::with_error_area(0.99, 0.9999, E, 10.0).map_err(err)?;
    let (mut worst, mut worst_grad, mut cells) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let g = GridGeometry::new(Point2::new(0.0, 0.0), 0.2, n, 1).map_err(err)?;
        let mut grid = LambdaGrid::new(g, sensor, LAMBDA_MAX).map_err(err)?;
        for _ in 0..rng.gen_range(1..=50) {
            let hit = rng.gen_bool(0.6);
            let beam = Beam {
                origin: Point2::new(1e-3, rng.gen_range(0.05..0.15)),
                angle: 0.0,
                range: if hit {
                    rng.gen_range(0.0..g.width() - 2e-3)
                } else {
                    10.0
                },
                hit,
            };
            grid.apply_beam(&beam).map_err(err)?;
        }
        for col in 0..n {
            let cell = CellIndex::new(col, 0);
            let s = grid.stats(cell).map_err(err)?;
            if !s.is_observed() {
                continue;
            }
            cells += 1;
            let (h, m) = (s.hits as f64, s.misses as f64);
            let closed = grid.lambda(cell).map_err(err)?;
            worst = worst.max((closed - numeric_mle(h, m)).abs());
            if closed > 0.0 && closed < LAMBDA_MAX {
                let derivative = g.cell_area() * (-m + h / (E * closed).exp_m1());
                worst_grad = worst_grad.max(derivative.abs());
            }
        }
    }
    check(worst < 1e-6, || format!("max |closed - numeric| = {worst:e}"))?;
    check(worst_grad < 1e-9, || format!("max |derivative| = {worst_grad:e}"))?;
    Ok(format!(
        "{cells} cells, max deviation {worst:.1e}, max derivative {worst_grad:.1e}"
    ))
}

fn confidence_behavior() -> Outcome {
    let start = Instant::now();
    let sensor = SensorModel::with_error_area(0.99, 0.9999, 0.04, 30.0).map_err(err)?;
    let mut stats = CellStats::default();
    let mut widths = vec![f64::NAN];
    for reading in 1..=100 {
        if reading == 40 {
            stats.add_hit();
        } else {
            stats.add_miss();
        }
        widths.push(confidence_bounds(stats, &sensor, 100.0).width());
    }
    let (w39, w41, w100) = (widths[39], widths[41], widths[100]);
    check(w39 < w41, || format!("width 39 {w39} ≥ width 41 {w41}"))?;
    check(w100 < w41, || format!("width 100 {w100} ≥ width 41 {w41}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("widths {w39:.4} → {w41:.4} → {w100:.4}"))
}

fn random_crossings(seed: u64, count: usize) -> Vec<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..rng.gen_range(1..=30))
                .map(|_| {
                    let area = rng.gen_range(0.001..0.05);
                    let lambda = if rng.gen_bool(0.15) {
                        rng.gen_range(10.0..100.0)
                    } else {
                        rng.gen_range(0.0..3.0)
                    };
                    (area, lambda)
                })
                .collect()
        })
        .collect()
}

fn pdf_normalization() -> Outcome {
    let mut worst = 0.0_f64;
    for cells in random_crossings(5, 50) {
        let c = PathCrossing::from_areas(&cells).map_err(err)?;
        let mut integral = 0.0;
        for i in 0..c.len() {
            let (a0, a1) = (c.cumulative_area(i), c.cumulative_area(i + 1));
            integral +=
                quadrature::integrate(|a| collision_pdf(&c, a, Estimator::Mle).unwrap(), a0, a1, 1e-14).integral;
        }
        let total: f64 = cells.iter().map(|(a, l)| a * l).sum();
        worst = worst.max((integral + (-total).exp_m1()).abs());
    }
    check(worst < 1e-8, || format!("max quadrature error {worst:e}"))?;
    Ok(format!("50 crossings, max error {worst:.1e}"))
}

fn risk_identity() -> Outcome {
    let mut worst = 0.0_f64;
    let mut n = 0;
    for cells in random_crossings(6, 200)
        .into_iter()
        .chain([vec![(0.04, 0.1); 58], vec![(0.25, 0.42), (0.5, 0.0)]])
    {
        let c = PathCrossing::from_areas(&cells).map_err(err)?;
        for est in [Estimator::Mle, Estimator::Lower, Estimator::Upper] {
            worst = worst.max((expected_risk(&c, |_| 1.0, est) - path_collision_probability(&c, est)).abs());
            n += 1;
        }
    }
    check(worst < 1e-12, || format!("max |E[1] - P| = {worst:e}"))?;
    Ok(format!("{n} evaluations, max difference {worst:.1e}"))
}

fn monte_carlo_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst_z = 0.0_f64;
    for (k, cells) in random_crossings(7, 20).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let bounds: Vec<f64> = std::iter::once(0.0)
            .chain(cells.iter().scan(0.0, |acc, (a, _)| {
                *acc += a;
                Some(*acc)
            }))
            .collect();
        let prefix: Vec<f64> = std::iter::once(0.0)
            .chain(cells.iter().scan(0.0, |acc, (a, l)| {
                *acc += a * l;
                Some(*acc)
            }))
            .collect();
        // momentum m·v held constant over each cell, looked up where the
        // collision actually happens
        let momentum: Vec<f64> = cells.iter().map(|_| 25.0 * rng.gen_range(0.1..2.0)).collect();
        let loss_at = |a: f64| {
            momentum[bounds
                .partition_point(|&b| b <= a)
                .saturating_sub(1)
                .min(momentum.len() - 1)]
        };
        let c = PathCrossing::from_areas(&cells).map_err(err)?;
        let closed = expected_risk(&c, loss_at, Estimator::Mle);

        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let t: f64 = rng.sample(Exp1);
            let i = prefix.partition_point(|&p| p < t);
            if i > cells.len() {
                continue;
            }
            let loss = loss_at(bounds[i - 1] + (t - prefix[i - 1]) / cells[i - 1].1);
            sum += loss;
            sum_sq += loss * loss;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / (n as f64 - 1.0)).sqrt();
        let z = (closed - mean).abs() / se;
        check(z <= 3.0, || {
            format!("crossing {k}: closed {closed} vs simulated {mean} ± {se}")
        })?;
        worst_z = worst_z.max(z);
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("20 crossings × 10⁶ draws, max deviation {worst_z:.2} SE"))
}

fn sparse_retention() -> Outcome {
    let s = common::roundabout(500);
    let out = s.path("out");
    let config = ScenarioConfig::load(&s.config).map_err(err)?;
    cmd_map(&config, 7, &out).map_err(err)?;
    let lambda = io::load_lambda_dump(out.join("lambda.dump")).map_err(err)?;
    let bayes = io::load_bayes_dump(out.join("bayes.dump")).map_err(err)?;
    let region: Vec<_> = common::truth_region(&s.config)
        .into_iter()
        .filter(|&c| lambda.stats(c).map(|s| s.is_observed()).unwrap_or(false))
        .collect();
    let kept = region.iter().filter(|&&c| lambda.lambda(c).unwrap() > 0.5).count();
    let cleared = region.iter().filter(|&&c| bayes.probability(c).unwrap() < 0.5).count();
    let n = region.len();
    check(n > 0, || "no region cell observed".into())?;
    check(kept * 10 > n * 9, || format!("λ̂ > 0.5 in {kept} of {n} cells"))?;
    check(cleared * 2 > n, || {
        format!("log-odds below 0.5 in only {cleared} of {n} cells")
    })?;
    Ok(format!(
        "{n} region cells: {kept} keep λ̂ > 0.5, {cleared} cleared by log-odds"
    ))
}

fn read_log(dir: &Path) -> Result<Vec<io::PlannerLogRow>, String> {
    let f = fs::File::open(dir.join("plan_log.csv")).map_err(err)?;
    io::read_planner_log(f).map_err(err)
}

fn planner_gate() -> Outcome {
    let blocked = common::blocked_corridor();
    let out = blocked.path("out");
    cmd_plan(&ScenarioConfig::load(&blocked.config).map_err(err)?, 7, &out, None).map_err(err)?;
    let log = read_log(&out)?;
    check(log.first().is_some_and(|r| r.stopped), || {
        "blocked corridor did not stop at once".into()
    })?;

    let open = common::open_field();
    let out = open.path("out");
    let s = cmd_plan(&ScenarioConfig::load(&open.config).map_err(err)?, 7, &out, None).map_err(err)?;
    let log = read_log(&out)?;
    let worst = log.iter().map(|r| r.risk_upper).fold(0.0, f64::max);
    check(worst <= 1.0, || format!("logged risk {worst}"))?;
    check(s.reached && s.goal_distance <= 0.5, || {
        format!("ended {:.3} m from goal", s.goal_distance)
    })?;
    Ok(format!(
        "blocked: STOP; open: {} steps, max risk {worst:.3} kg·m/s, {:.2} m from goal",
        s.steps, s.goal_distance
    ))
}

fn same_bytes(a: &Path, b: &Path) -> Result<usize, String> {
    let mut n = 0;
    for entry in fs::read_dir(a).map_err(err)? {
        let path = entry.map_err(err)?.path();
        let other = b.join(path.file_name().unwrap());
        check(fs::read(&path).map_err(err)? == fs::read(&other).map_err(err)?, || {
            format!("{} differs", path.display())
        })?;
        n += 1;
    }
    Ok(n)
}

fn determinism() -> Outcome {
    let map = common::roundabout(30);
    let config = ScenarioConfig::load(&map.config).map_err(err)?;
    cmd_map(&config, 11, &map.path("a")).map_err(err)?;
    cmd_map(&config, 11, &map.path("b")).map_err(err)?;
    let map_files = same_bytes(&map.path("a"), &map.path("b"))?;

    let plan = common::open_field();
    let config = ScenarioConfig::load(&plan.config).map_err(err)?;
    cmd_plan(&config, 11, &plan.path("a"), None).map_err(err)?;
    cmd_plan(&config, 11, &plan.path("b"), None).map_err(err)?;
    let plan_files = same_bytes(&plan.path("a"), &plan.path("b"))?;
    Ok(format!("{map_files} map files and {plan_files} plan files identical"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("naive vs intensity probability on double-size cells", double_size_cells),
        ("single dense cell on a light path, P = 0.27", single_dense_cell),
        ("closed-form intensity equals numeric maximum", mle_correctness),
        ("interval widens on a surprise hit, then narrows", confidence_behavior),
        ("collision density integrates to P", pdf_normalization),
        ("unit loss risk equals collision probability", risk_identity),
        ("expected momentum risk vs Monte-Carlo", monte_carlo_oracle),
        ("sparse region retained, cleared by log-odds", sparse_retention),
        ("planner gate: stop when blocked, safe progress when open", planner_gate),
        ("bitwise-deterministic map and plan outputs", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{t:.2} s]", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} [{t:.2} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
