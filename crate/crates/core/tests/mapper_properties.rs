use polyscout_core::clip::{EdgeLabel, PolygonMap};
use polyscout_core::geom::{Point2, Pose2, Ring};
use polyscout_core::mapper::{extract_frontiers, free_chains, integrate_scan, scan_to_polygon, MapperConfig};
use polyscout_core::sensor::{cast_scan, Illumination, Material, Obstacle, RayReturn, Scan, SensorConfig, World};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Ring {
    Ring::new(vec![p(x0, y0), p(x1, y0), p(x1, y1), p(x0, y1)]).unwrap()
}

fn cluttered_room(rng: &mut ChaCha8Rng) -> World {
    let obstacles = (0..rng.random_range(0..4))
        .map(|_| {
            let x = rng.random_range(-3.0..2.5);
            let y = rng.random_range(-3.0..2.5);
            Obstacle { ring: rect(x, y, x + rng.random_range(0.2..1.0), y + rng.random_range(0.2..1.0)), material: Material::Matte }
        })
        .collect();
    World { bounds: rect(-4.0, -4.0, 4.0, 4.0), obstacles, feature_sites: vec![], illumination: Illumination::Shadow }
}

fn free_pose(world: &World, rng: &mut ChaCha8Rng) -> Pose2 {
    loop {
        let q = p(rng.random_range(-3.8..3.8), rng.random_range(-3.8..3.8));
        if world.obstacle_at(q).is_none() {
            return Pose2::new(q.x, q.y, rng.random_range(-3.14..3.14));
        }
    }
}

fn free_edge_length(map: &PolygonMap) -> f64 {
    map.labeled_edges().filter(|(_, l)| *l == EdgeLabel::Free).map(|(s, _)| s.length()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integration_conserves_labels_and_never_shrinks(seed in any::<u64>(), scans in 2usize..12, misalign in 0.0..0.3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world = cluttered_room(&mut rng);
        let sensor = SensorConfig { range_noise_sigma: 0.03, ghost_gain: 0.0, ..SensorConfig::default() };
        let cfg = MapperConfig::default();
        let mut map = PolygonMap::empty();
        for k in 0..scans {
            let truth = free_pose(&world, &mut rng);
            let scan = cast_scan(truth, &world, &sensor, k as f64, &mut rng).unwrap();
            let est = Pose2::new(
                truth.x + rng.random_range(-misalign..=misalign),
                truth.y + rng.random_range(-misalign..=misalign),
                truth.theta + 0.2 * rng.random_range(-misalign..=misalign),
            );
            let Ok(poly) = scan_to_polygon(&scan, est, &cfg) else { continue };
            let before = map.total_area();
            map = integrate_scan(&map, &poly, cfg.snap_grid).unwrap();
            prop_assert!(map.total_area() >= before - 1e-9, "area fell from {before} to {}", map.total_area());

            let total = free_edge_length(&map);
            let kept: f64 = extract_frontiers(&map, cfg.min_frontier_length).iter().map(|f| f.length).sum();
            let dropped: f64 = free_chains(&map)
                .iter()
                .filter(|f| f.length < cfg.min_frontier_length)
                .map(|f| f.length)
                .sum();
            prop_assert!((kept + dropped - total).abs() <= 1e-6 * total.max(1.0));
        }
    }

    #[test]
    fn scan_polygon_is_simple_under_any_noise(
        n in 3usize..200,
        fov in 5.0..180.0f64,
        seed in any::<u64>(),
        theta in -3.2..3.2f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = fov.to_radians();
        let angles: Vec<f64> = (0..n).map(|i| -0.5 * f + f * i as f64 / (n - 1) as f64).collect();
        let kinds = [RayReturn::ObstacleHit, RayReturn::MaxRange, RayReturn::Dropout, RayReturn::GhostHit];
        let hit: Vec<RayReturn> = (0..n).map(|_| kinds[rng.random_range(0..4)]).collect();
        let ranges: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..15.0)).collect();
        let scan = Scan {
            pose_true: Pose2::default(),
            angles,
            max_ranges: ranges.clone(),
            ranges,
            hit,
            feature_count: 0,
            timestamp: 0.0,
        };
        let pose = Pose2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), theta);
        if let Ok(poly) = scan_to_polygon(&scan, pose, &MapperConfig::default()) {
            prop_assert!(poly.outer.ring().is_simple());
            prop_assert!(poly.outer.ring().is_ccw());
        }
    }
}

fn in_triangle(q: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    let s1 = (b - a).cross(q - a);
    let s2 = (c - b).cross(q - b);
    let s3 = (a - c).cross(q - c);
    (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0)
}

/// Membership in the fan of triangles spanned by consecutive ray endpoints.
fn in_fan(q: Point2, scan: &Scan) -> bool {
    let o = scan.pose_true.position();
    let ends: Vec<Point2> = scan
        .angles
        .iter()
        .zip(&scan.ranges)
        .map(|(a, r)| o + Point2::from_polar(*r, scan.pose_true.theta + a))
        .collect();
    ends.windows(2).any(|w| in_triangle(q, o, w[0], w[1]))
}

#[test]
fn two_overlapping_scans_match_rasterization() {
    let world = World {
        bounds: rect(-2.0, -1.0, 14.0, 1.0),
        obstacles: vec![],
        feature_sites: vec![],
        illumination: Illumination::Indoor,
    };
    let sensor = SensorConfig::noiseless();
    let cfg = MapperConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scans: Vec<Scan> = [0.0, 1.0]
        .iter()
        .map(|x| cast_scan(Pose2::new(*x, 0.0, 0.0), &world, &sensor, 0.0, &mut rng).unwrap())
        .collect();
    let mut map = PolygonMap::empty();
    let mut sector_sum = 0.0;
    for s in &scans {
        let poly = scan_to_polygon(s, s.pose_true, &cfg).unwrap();
        sector_sum += poly.area();
        map = integrate_scan(&map, &poly, cfg.snap_grid).unwrap();
    }
    let area = map.total_area();
    assert!(area < sector_sum);

    let (x0, x1, y0, y1) = (0.0, 10.0, -1.0, 1.0);
    let samples = 1_000_000;
    let mut inside = 0u64;
    for _ in 0..samples {
        let q = p(rng.random_range(x0..x1), rng.random_range(y0..y1));
        if scans.iter().any(|s| in_fan(q, s)) {
            inside += 1;
        }
    }
    let oracle = inside as f64 / samples as f64 * (x1 - x0) * (y1 - y0);
    assert!((area - oracle).abs() <= 0.01 * oracle, "map {area} oracle {oracle}");
}

/// Scans of a closed 6 m room from a grid of poses; rays landing in
/// `door` (an x-interval of the top wall) are reported as unobstructed.
fn scan_room(door: Option<(f64, f64)>) -> PolygonMap {
    let world = World {
        bounds: rect(0.0, 0.0, 6.0, 6.0),
        obstacles: vec![],
        feature_sites: vec![],
        illumination: Illumination::Indoor,
    };
    let sensor = SensorConfig::noiseless();
    let cfg = MapperConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut map = PolygonMap::empty();
    for ix in 0..3 {
        for iy in 0..3 {
            for h in 0..8 {
                let pose = Pose2::new(1.0 + 2.0 * ix as f64, 1.0 + 2.0 * iy as f64, h as f64 * std::f64::consts::FRAC_PI_4);
                let mut scan = cast_scan(pose, &world, &sensor, 0.0, &mut rng).unwrap();
                if let Some((a, b)) = door {
                    for i in 0..scan.angles.len() {
                        let e = pose.position() + Point2::from_polar(scan.ranges[i], pose.theta + scan.angles[i]);
                        if scan.hit[i] == RayReturn::ObstacleHit && (e.y - 6.0).abs() < 1e-9 && e.x > a && e.x < b {
                            scan.hit[i] = RayReturn::MaxRange;
                        }
                    }
                }
                let poly = scan_to_polygon(&scan, pose, &cfg).unwrap();
                map = integrate_scan(&map, &poly, cfg.snap_grid).unwrap();
            }
        }
    }
    map
}

#[test]
fn doorway_leaves_exactly_one_frontier() {
    let map = scan_room(Some((2.5, 3.5)));
    let frontiers = extract_frontiers(&map, MapperConfig::default().min_frontier_length);
    assert_eq!(frontiers.len(), 1, "{:?}", frontiers.iter().map(|f| f.length).collect::<Vec<_>>());
    let f = &frontiers[0];
    assert!((f.length - 1.0).abs() <= 0.05, "doorway frontier {}", f.length);
    assert!(f.chain.iter().all(|q| (q.y - 6.0).abs() < 0.03 && q.x > 2.4 && q.x < 3.6));
}

#[test]
fn covering_a_closed_room_leaves_no_free_boundary() {
    let map = scan_room(None);
    let outer: f64 = map
        .polygons()
        .iter()
        .flat_map(|poly| poly.outer.labeled_edges())
        .filter(|(_, l)| *l == EdgeLabel::Free)
        .map(|(s, _)| s.length())
        .sum();
    assert!(outer < 1e-6, "free boundary {outer}");
    assert!((map.total_area() - 36.0).abs() < 0.05 * 36.0);
}
