use elastic_jump_core::rng::{path_rng, uniform};
use elastic_jump_core::{DomainSpec, DumbbellParams, Point};
use proptest::prelude::*;

/// Membership in the standard dumbbell built from its pieces: two unit
/// disks, the neck strip and the four fillet fills.
fn inside_by_construction(p: Point, eps: f64) -> bool {
    let (c, r, rho) = (2.0, 1.0, 0.1);
    let (x, y) = (p.x.abs(), p.y.abs());
    if Point::new(x, y).distance(Point::new(c, 0.0)) < r {
        return true;
    }
    if y < eps && x <= c {
        return true;
    }
    // The fillet circle touches the line y = ε and the chamber from outside.
    let fx = c - ((r + rho).powi(2) - (eps + rho).powi(2)).sqrt();
    let f = Point::new(fx, eps + rho);
    let a = Point::new(fx, eps);
    let chamber = Point::new(c, 0.0);
    let q = Point::new(x, y);
    let side = |u: Point, v: Point, w: Point| (v - u).cross(w - u);
    let s1 = side(f, a, q);
    let s2 = side(a, chamber, q);
    let s3 = side(chamber, f, q);
    let in_triangle = (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0);
    in_triangle && q.distance(f) > rho
}

/// Boundary samples where the membership oracle flips between neighbouring
/// grid nodes, refined by bisection.
fn boundary_samples(eps: f64, spacing: f64) -> Vec<Point> {
    let nx = (6.2 / spacing) as usize;
    let ny = (2.2 / spacing) as usize;
    let node = |i: usize, j: usize| Point::new(-3.1 + i as f64 * spacing, -1.1 + j as f64 * spacing);
    let mut out = Vec::new();
    let refine = |mut a: Point, mut b: Point| {
        let ina = inside_by_construction(a, eps);
        for _ in 0..60 {
            let m = (a + b) * 0.5;
            if inside_by_construction(m, eps) == ina {
                a = m;
            } else {
                b = m;
            }
        }
        (a + b) * 0.5
    };
    for i in 0..nx {
        for j in 0..ny {
            let p = node(i, j);
            let inside = inside_by_construction(p, eps);
            for q in [node(i + 1, j), node(i, j + 1)] {
                if inside_by_construction(q, eps) != inside {
                    out.push(refine(p, q));
                }
            }
        }
    }
    // The neck midline crossings, which the grid need not hit exactly.
    out.push(Point::new(0.0, eps));
    out.push(Point::new(0.0, -eps));
    out
}

fn brute_distance(samples: &[Point], p: Point) -> f64 {
    samples.iter().map(|q| q.distance(p)).fold(f64::INFINITY, f64::min)
}

#[test]
fn dumbbell_distance_matches_brute_force() {
    for eps in [0.05, 0.1, 0.4] {
        let domain = DomainSpec::dumbbell(DumbbellParams::standard(eps)).unwrap();
        let samples = boundary_samples(eps, 1e-3);
        assert!((domain.signed_distance(Point::ORIGIN) + eps).abs() < 1e-9);
        let mut rng = path_rng(7, (eps * 100.0) as u64);
        let mut checked = 0;
        while checked < 400 {
            let p = Point::new(6.2 * uniform(&mut rng) - 3.1, 2.2 * uniform(&mut rng) - 1.1);
            let sd = domain.signed_distance(p);
            if sd.abs() < 0.02 {
                continue;
            }
            checked += 1;
            assert_eq!(sd < 0.0, inside_by_construction(p, eps), "sign at {p:?}, ε = {eps}");
            let d = brute_distance(&samples, p);
            assert!((sd.abs() - d).abs() < 1e-5, "ε = {eps}, p = {p:?}: {sd} vs {d}");
        }
    }
}

fn domains() -> Vec<DomainSpec> {
    vec![
        DomainSpec::unit_interval(),
        DomainSpec::unit_disk(),
        DomainSpec::dumbbell(DumbbellParams::standard(0.1)).unwrap(),
        DomainSpec::dumbbell(DumbbellParams::standard(0.4)).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn projection_lands_in_closure(k in 0usize..4, x in -3.5f64..3.5, y in -1.5f64..1.5) {
        let domain = &domains()[k];
        let p = if domain.dimension() == 1 { Point::on_line(x) } else { Point::new(x, y) };
        let Ok((q, moved)) = domain.project_to_closure(p) else { return Ok(()) };
        prop_assert!(domain.signed_distance(q) <= 1e-9);
        prop_assert!((moved - q.distance(p)).abs() < 1e-12);
        let sd = domain.signed_distance(p);
        if sd <= 0.0 {
            prop_assert_eq!(q, p);
        } else {
            prop_assert!((moved - sd).abs() < 1e-9);
            // Projecting again is a no-op.
            let (q2, moved2) = domain.project_to_closure(q).unwrap();
            prop_assert!(q2.distance(q) < 1e-12 && moved2 < 1e-12);
        }
    }

    #[test]
    fn inward_normal_points_inside(k in 1usize..4, x in -3.5f64..3.5, y in -1.5f64..1.5) {
        let domain = &domains()[k];
        let p = Point::new(x, y);
        prop_assume!(domain.signed_distance(p) > 1e-3);
        let Ok((q, _)) = domain.project_to_closure(p) else { return Ok(()) };
        let n = domain.inward_normal(q).unwrap();
        prop_assert!((n.norm() - 1.0).abs() < 1e-12);
        prop_assert!(domain.signed_distance(q + n * 1e-4) < 0.0);
        // The outside point sits on the outward normal line through q.
        prop_assert!(((p - q).unit() + n).norm() < 1e-6);
    }
}
