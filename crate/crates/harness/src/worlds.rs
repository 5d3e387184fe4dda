//! Bundled worlds.
//!
//! Every world puts the default start pose, the origin, in free space except
//! `corridor_loop`, whose scenario starts in the bottom corridor.

use std::f64::consts::PI;
use std::path::Path;

use polyscout_core::geom::{Point2, Ring};
use polyscout_core::sensor::{FeatureSite, Illumination, Material, Obstacle, World};

use crate::output::write_atomic;
use crate::world_file::WorldFile;
use crate::HarnessError;

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Ring {
    Ring::new(vec![p(x0, y0), p(x1, y0), p(x1, y1), p(x0, y1)]).expect("rectangles are valid rings")
}

fn matte(ring: Ring) -> Obstacle {
    Obstacle { ring, material: Material::Matte }
}

/// Regular `k`-gon whose nearest face to the origin sits at distance `dist`
/// along `bearing`, so that face's midpoint is the closest point.
fn object_facing_origin(dist: f64, bearing_deg: f64, apothem: f64, k: usize) -> Ring {
    let b = bearing_deg.to_radians();
    let center = Point2::from_polar(dist + apothem, b);
    let r = apothem / (PI / k as f64).cos();
    // Rotating so a face normal points back along the bearing.
    let start = b + PI + PI / k as f64;
    let pts = (0..k).map(|i| center + Point2::from_polar(r, start + 2.0 * PI * i as f64 / k as f64)).collect();
    Ring::new(pts).expect("regular polygons are valid rings")
}

/// Sites every `spacing` meters along each wall of `ring`, `inset` inside it.
fn sites_along(ring: &Ring, spacing: f64, inset: f64, richness: u32) -> Vec<FeatureSite> {
    let sign = if ring.is_ccw() { 1.0 } else { -1.0 };
    let mut out = Vec::new();
    for e in ring.edges() {
        let len = e.length();
        let n = (len / spacing).floor() as usize;
        let dir = (e.b - e.a).normalized();
        let inward = dir.perp() * sign;
        for i in 0..n {
            let t = (i as f64 + 0.5) * len / n as f64;
            out.push(FeatureSite { p: e.a + dir * t + inward * inset, richness });
        }
    }
    out
}

/// Open yard in bright sun: a barrel 1 m ahead, a chair at 2 m, flowers at
/// 3 m and trees and other objects between 4 and 15 m.
pub fn yard() -> World {
    let bounds = rect(-5.0, -10.0, 20.0, 10.0);
    let mut obstacles = vec![
        matte(object_facing_origin(1.0, 0.0, 0.3, 12)),
        matte(object_facing_origin(2.0, 25.0, 0.25, 4)),
        matte(object_facing_origin(3.0, -20.0, 0.4, 6)),
    ];
    for (d, b) in [(4.5, 30.0), (6.0, -10.0), (8.0, 15.0), (10.0, -25.0), (12.5, 5.0), (15.0, -5.0)] {
        obstacles.push(matte(object_facing_origin(d, b, 0.35, 10)));
    }
    obstacles.push(matte(object_facing_origin(7.0, 40.0, 0.6, 4)));
    let mut feature_sites = sites_along(&bounds, 2.0, 0.05, 4);
    for o in &obstacles {
        feature_sites.extend(sites_along(&o.ring, 0.3, -0.02, 6));
    }
    World { bounds, obstacles, feature_sites, illumination: Illumination::BrightSun }
}

/// Convex 6 × 6 m room with one box.
pub fn room() -> World {
    let bounds = rect(-3.0, -3.0, 3.0, 3.0);
    let obstacles = vec![matte(rect(1.0, 0.8, 1.6, 1.4))];
    let feature_sites = sites_along(&bounds, 1.0, 0.05, 12);
    World { bounds, obstacles, feature_sites, illumination: Illumination::Indoor }
}

/// Square loop corridor, 1.5 m wide, around a 9 × 9 m block.
pub fn corridor_loop() -> World {
    let bounds = rect(-6.0, -6.0, 6.0, 6.0);
    let block = rect(-4.5, -4.5, 4.5, 4.5);
    let mut feature_sites = sites_along(&bounds, 1.0, 0.05, 6);
    feature_sites.extend(sites_along(&block, 1.0, -0.05, 6));
    World { bounds, obstacles: vec![matte(block)], feature_sites, illumination: Illumination::Indoor }
}

/// Near face of the glass pane in `glass_wall`, the line `y = GLASS_Y`.
pub const GLASS_Y: f64 = 1.5;

/// Room split by a wall-to-wall glass pane with a box on the far side.
pub fn glass_wall() -> World {
    let bounds = rect(-3.0, -3.0, 3.0, 4.5);
    let glass = Obstacle { ring: rect(-3.0, GLASS_Y, 3.0, GLASS_Y + 0.06), material: Material::Reflective };
    let behind = matte(rect(-0.5, 2.8, 0.5, 3.4));
    let feature_sites = sites_along(&rect(-3.0, -3.0, 3.0, GLASS_Y), 1.0, 0.05, 12);
    World { bounds, obstacles: vec![glass, behind], feature_sites, illumination: Illumination::Indoor }
}

pub fn build_reference_worlds() -> Vec<(&'static str, World)> {
    vec![("yard", yard()), ("room", room()), ("corridor_loop", corridor_loop()), ("glass_wall", glass_wall())]
}

/// Writes `<name>.json` for every bundled world into `dir`.
pub fn write_worlds(dir: &Path) -> Result<Vec<std::path::PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for (name, world) in build_reference_worlds() {
        let path = dir.join(format!("{name}.json"));
        write_atomic(&path, WorldFile::from_world(&world).to_json().as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
