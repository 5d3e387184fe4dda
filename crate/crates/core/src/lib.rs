//! Polygonal-map exploration simulator.
//!
//! The crate models a mobile robot that explores an unknown planar
//! environment with a narrow field-of-view depth sensor:
//!
//! - [`geom`]: points, poses, rings and the basic predicates;
//! - [`clip`]: edge-labeled boolean polygon operations (the map merger);
//! - [`sensor`]: simulated depth scans with illumination-dependent range,
//!   noise, dropout and reflective-surface ghosts;
//! - [`loc`]: odometry drift, feature-gated visual odometry, registration,
//!   update latency and loop closure;
//! - [`mapper`]: scan polygonization, map integration, frontier extraction;
//! - [`explore`]: goal selection, planning, control and the closed loop.

pub mod clip;
pub mod explore;
pub mod geom;
pub mod loc;
pub mod mapper;
pub mod sensor;
