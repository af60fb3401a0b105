use elastic_jump_core::exec::Sequential;
use elastic_jump_core::rng::path_rng;
use elastic_jump_core::sde::{self, MonteCarlo, Walker};
use elastic_jump_core::stats::RunningStats;
use elastic_jump_core::{DomainSpec, Point, RestartMeasure};

fn final_local_time(domain: &DomainSpec, mu: &RestartMeasure, x0: Point, t: f64, h: f64, seed: u64, i: u64) -> (f64, usize) {
    let mut rng = path_rng(seed, i);
    let mut w = Walker::new(domain, mu, x0, h, &mut rng).unwrap();
    for _ in 0..sde::steps_for(t, h) {
        w.step(&mut rng).unwrap();
    }
    (w.local_time, w.jumps)
}

#[test]
fn no_contact_from_disk_center_in_short_time() {
    // P(sup_{s ≤ 0.01} |B_s| ≥ 1) ≤ 4·exp(−1/(4·0.01)) ≈ 6e−11.
    let domain = DomainSpec::unit_disk();
    let mu = RestartMeasure::zero();
    let touched = (0..100_000).filter(|&i| final_local_time(&domain, &mu, Point::ORIGIN, 0.01, 1e-4, 1, i).0 > 0.0).count();
    assert_eq!(touched, 0);
}

#[test]
fn jump_count_compensated_by_local_time() {
    // N_t − κL_t is a martingale, so E[N_T] = κ E[L_T].
    let domain = DomainSpec::unit_interval();
    let mu = RestartMeasure::uniform_interval(0.3, 0.7, 2.0).unwrap();
    let mut diff = RunningStats::new();
    for i in 0..4000 {
        let (l, n) = final_local_time(&domain, &mu, Point::on_line(0.5), 2.0, 1e-3, 2, i);
        diff.push(n as f64 - 2.0 * l);
    }
    assert!(diff.mean.abs() < 4.0 * diff.std_error(), "{} ± {}", diff.mean, diff.std_error());
}

#[test]
fn reflected_local_time_bias_shrinks_with_h() {
    let exact = (2.0 / std::f64::consts::PI).sqrt();
    for (k, h) in [1e-3, 5e-4, 2.5e-4].into_iter().enumerate() {
        let mut s = RunningStats::new();
        for i in 0..8000 {
            s.push(final_local_time(&DomainSpec::HalfLine, &RestartMeasure::zero(), Point::ORIGIN, 1.0, h, 3 + k as u64, i).0);
        }
        assert!((s.mean - exact).abs() < 4.0 * s.std_error() + 0.5 * h.sqrt(), "h = {h}: {} vs {exact}", s.mean);
    }
}

#[test]
fn seeds_change_paths_not_estimates() {
    let domain = DomainSpec::unit_interval();
    let mu = RestartMeasure::point_mass(Point::on_line(0.5), 1.0).unwrap();
    let f = |p: Point| p.x * p.x;
    let est = |seed| {
        let mc = MonteCarlo { n_paths: 3000, h: 1e-3, seed };
        sde::semigroup_estimate(f, &domain, &mu, Point::on_line(0.2), 0.5, &mc, &Sequential).unwrap()
    };
    let (a, b) = (est(10), est(11));
    assert_ne!(a.mean, b.mean);
    assert!((a.mean - b.mean).abs() < 4.0 * a.std_error.hypot(b.std_error));
    assert_eq!(est(10), a);
}

#[test]
fn restarts_land_in_support() {
    let domain = DomainSpec::unit_disk();
    let mu = RestartMeasure::uniform_disk(Point::new(0.2, 0.0), 0.3, 5.0).unwrap();
    for i in 0..50 {
        let mut rng = path_rng(4, i);
        let rec = sde::simulate_path(&domain, &mu, Point::ORIGIN, 2.0, 1e-3, &mut rng).unwrap();
        for &s in &rec.jump_steps {
            assert!(rec.positions[s].distance(Point::new(0.2, 0.0)) <= 0.3);
        }
        assert!(rec.positions.iter().all(|p| domain.contains(*p)));
        assert!(rec.local_time.windows(2).all(|w| w[1] >= w[0]));
    }
}
