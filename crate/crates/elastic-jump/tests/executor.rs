use elastic_jump::par::Parallel;
use elastic_jump_core::escape::{self, EscapeConfig};
use elastic_jump_core::exec::Sequential;
use elastic_jump_core::sde::{self, MonteCarlo};
use elastic_jump_core::{DomainSpec, Point, RestartMeasure};

#[test]
fn parallel_estimates_equal_sequential() {
    let domain = DomainSpec::unit_disk();
    let mu = RestartMeasure::uniform_disk(Point::ORIGIN, 0.5, 1.5).unwrap();
    let mc = MonteCarlo { n_paths: 1000, h: 1e-3, seed: 42 };
    let f = |p: Point| p.x + p.y * p.y;
    let x = Point::new(0.3, 0.1);
    let par = sde::semigroup_estimates(f, &domain, &mu, x, &[0.1, 0.3], &mc, &Parallel).unwrap();
    let seq = sde::semigroup_estimates(f, &domain, &mu, x, &[0.1, 0.3], &mc, &Sequential).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn parallel_passage_times_equal_sequential() {
    let mut cfg = EscapeConfig::standard(RestartMeasure::point_mass(Point::new(2.0, 0.0), 1.0).unwrap());
    cfg.eps_grid = vec![0.4];
    cfg.n_paths = 300;
    cfg.h = 1e-3;
    let x0 = [Point::new(-2.0, 0.0)];
    let par = escape::mfpt_jump(&cfg, &x0, 9, &Parallel).unwrap();
    let seq = escape::mfpt_jump(&cfg, &x0, 9, &Sequential).unwrap();
    assert_eq!(par, seq);
}
