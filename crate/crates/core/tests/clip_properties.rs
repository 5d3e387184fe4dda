use polyscout_core::clip::{boolean_op, BoolOp, EdgeLabel, LabeledPolygon, LabeledRing, PolygonMap};
use polyscout_core::geom::{bbox, point_in_region, Location, Point2, Ring};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn star_polygon(rng: &mut ChaCha8Rng, convex: bool) -> Vec<Point2> {
    let k = rng.random_range(3..=12);
    loop {
        let mut angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let spread_ok = angles.windows(2).all(|w| w[1] - w[0] > 1e-3);
        if !spread_ok {
            continue;
        }
        let c = Point2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let pts: Vec<Point2> = angles
            .iter()
            .map(|a| {
                let r = if convex { 1.0 } else { rng.random_range(0.3..1.2) };
                c + Point2::from_polar(r, *a)
            })
            .collect();
        if Ring::new(pts.clone()).is_ok_and(|r| r.is_simple()) {
            return pts;
        }
    }
}

fn to_map(pts: &[Point2], label: EdgeLabel) -> PolygonMap {
    let ring = Ring::new(pts.to_vec()).unwrap();
    PolygonMap::single(LabeledPolygon::new(LabeledRing::uniform(ring, label), vec![]))
}

fn inside(p: Point2, poly: &[Ring]) -> bool {
    point_in_region(p, poly) == Location::Inside
}

#[test]
fn area_laws_and_containment() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..300 {
        let a_pts = star_polygon(&mut rng, trial % 3 == 0);
        let b_pts = star_polygon(&mut rng, trial % 5 == 0);
        let c_pts = star_polygon(&mut rng, false);
        let a = to_map(&a_pts, EdgeLabel::Free);
        let b = to_map(&b_pts, EdgeLabel::Obstacle);
        let c = to_map(&c_pts, EdgeLabel::Free);
        let u = boolean_op(&a, &b, BoolOp::Union).unwrap();
        let i = boolean_op(&a, &b, BoolOp::Intersection).unwrap();
        let d = boolean_op(&a, &b, BoolOp::Difference).unwrap();
        let (aa, ab) = (a.total_area(), b.total_area());
        let scale = aa + ab;
        assert!((u.total_area() - (aa + ab - i.total_area())).abs() <= 1e-6 * scale, "trial {trial}");
        assert!((d.total_area() - (aa - i.total_area())).abs() <= 1e-6 * scale, "trial {trial}");
        assert!(u.total_area() >= aa.max(ab) - 1e-9, "monotone, trial {trial}");

        let u2 = boolean_op(&b, &a, BoolOp::Union).unwrap();
        assert!((u2.total_area() - u.total_area()).abs() <= 1e-9 * scale);
        let left = boolean_op(&u, &c, BoolOp::Union).unwrap();
        let bc = boolean_op(&b, &c, BoolOp::Union).unwrap();
        let right = boolean_op(&a, &bc, BoolOp::Union).unwrap();
        let total = scale + c.total_area();
        assert!((left.total_area() - right.total_area()).abs() <= 1e-6 * total, "assoc, trial {trial}");

        let ar = a.plain_rings();
        let br = b.plain_rings();
        let ur = u.plain_rings();
        let ir = i.plain_rings();
        for _ in 0..40 {
            let p = Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let in_u = point_in_region(p, &ur);
            let in_i = point_in_region(p, &ir);
            if inside(p, &ar) && in_u != Location::Boundary {
                assert_eq!(in_u, Location::Inside);
            }
            if in_i == Location::Inside {
                let la = point_in_region(p, &ar);
                let lb = point_in_region(p, &br);
                assert!(la != Location::Outside && lb != Location::Outside);
            }
        }
        for poly in u.polygons().iter().chain(i.polygons()) {
            assert!(poly.outer.ring().is_ccw());
            assert_eq!(poly.outer.labels().len(), poly.outer.ring().len());
            for h in &poly.holes {
                assert!(!h.ring().is_ccw());
            }
        }
    }
}

#[test]
fn union_of_convex_octagons_matches_rasterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let octagon = |rng: &mut ChaCha8Rng| -> Vec<Point2> {
        let c = Point2::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
        let r = rng.random_range(0.5..1.0);
        let phase = rng.random_range(0.0..1.0);
        (0..8).map(|k| c + Point2::from_polar(r, phase + k as f64 * std::f64::consts::TAU / 8.0)).collect()
    };
    let a = octagon(&mut rng);
    let b = octagon(&mut rng);
    let u = boolean_op(&to_map(&a, EdgeLabel::Free), &to_map(&b, EdgeLabel::Free), BoolOp::Union).unwrap();
    let ra = [Ring::new(a.clone()).unwrap()];
    let rb = [Ring::new(b.clone()).unwrap()];
    let all: Vec<Point2> = a.iter().chain(&b).copied().collect();
    let (lo, hi) = bbox(&all);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| {
            let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            inside(p, &ra) || inside(p, &rb)
        })
        .count();
    let oracle = hits as f64 / n as f64 * (hi.x - lo.x) * (hi.y - lo.y);
    assert!((u.total_area() - oracle).abs() / oracle < 0.005, "{} vs {}", u.total_area(), oracle);
}

#[test]
fn free_union_does_not_shrink_obstacle_length() {
    // Map: a room with obstacle walls on three sides, free on the fourth.
    let room = Ring::new(vec![
        Point2::new(0.0, 0.0),
        Point2::new(4.0, 0.0),
        Point2::new(4.0, 3.0),
        Point2::new(0.0, 3.0),
    ])
    .unwrap();
    let labels = vec![EdgeLabel::Obstacle, EdgeLabel::Free, EdgeLabel::Obstacle, EdgeLabel::Obstacle];
    let map = PolygonMap::single(LabeledPolygon::new(LabeledRing::new(room, labels).unwrap(), vec![]));
    let before = map.label_length(EdgeLabel::Obstacle);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        // Free-only patch beyond the free side, interior-disjoint from the walls.
        let x0 = 4.0 - rng.random_range(0.0..1.0);
        let y0 = rng.random_range(0.2..1.5);
        let patch = Ring::new(vec![
            Point2::new(x0, y0),
            Point2::new(x0 + 1.5, y0),
            Point2::new(x0 + 1.5, y0 + 1.2),
            Point2::new(x0, y0 + 1.2),
        ])
        .unwrap();
        let u = boolean_op(&map, &to_map(patch.vertices(), EdgeLabel::Free), BoolOp::Union).unwrap();
        assert!(u.label_length(EdgeLabel::Obstacle) >= before - 1e-9);
        assert_eq!(u.labeled_edges().count(), u.vertex_count());
    }
}

#[test]
fn many_incremental_unions_stay_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut map = PolygonMap::empty();
    let mut prev = 0.0;
    for _ in 0..150 {
        let mut pts = star_polygon(&mut rng, false);
        let shift = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        for p in &mut pts {
            *p = *p + shift;
        }
        let label = if rng.random_bool(0.5) { EdgeLabel::Free } else { EdgeLabel::Obstacle };
        map = boolean_op(&map, &to_map(&pts, label), BoolOp::Union).unwrap();
        assert!(map.total_area() >= prev - 1e-9);
        prev = map.total_area();
        for r in map.rings() {
            assert!(r.ring().len() >= 3);
        }
    }
}
