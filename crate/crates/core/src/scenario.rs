use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Cosine of the angle between `self -> other` and the x axis.
    pub fn cos_to(&self, other: &Point3) -> f64 {
        (other.x - self.x) / self.distance(other)
    }
}

/// Network geometry: HAPs, IRSs and the WD cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub hap_positions: Vec<Point3>,
    pub irs_positions: Vec<Point3>,
    pub wd_positions: Vec<Point3>,
    pub cluster_center_x: f64,
    pub cluster_radius: f64,
}

/// Position of the `b`-th HAP (zero-based).
pub fn hap_position(b: usize) -> Point3 {
    Point3::new(4.0 * b as f64, -5.0, 3.0)
}

/// IRSs sit on the user side at x = 6, 10, 14, ... meters.
pub fn irs_position(i: usize) -> Point3 {
    Point3::new(6.0 + 4.0 * i as f64, 1.0, 2.0)
}

pub fn build_scenario(config: &SystemConfig, cluster_x: f64, seed: u64) -> Result<Scenario> {
    if !(cluster_x > 0.0 && cluster_x.is_finite()) {
        return Err(Error::Domain(format!(
            "cluster center must be positive, got {cluster_x}"
        )));
    }
    if !(config.cluster_radius > 0.0) {
        return Err(Error::Domain(format!(
            "cluster radius must be positive, got {}",
            config.cluster_radius
        )));
    }
    let mut rng = substream(seed, Stream::Placement);
    let wd_positions = (0..config.k)
        .map(|_| {
            let r = config.cluster_radius * rng.random::<f64>().sqrt();
            let a = std::f64::consts::TAU * rng.random::<f64>();
            Point3::new(cluster_x + r * a.cos(), r * a.sin(), 1.0)
        })
        .collect();
    let scenario = Scenario {
        hap_positions: (0..config.b).map(hap_position).collect(),
        irs_positions: (0..config.i).map(irs_position).collect(),
        wd_positions,
        cluster_center_x: cluster_x,
        cluster_radius: config.cluster_radius,
    };
    scenario.check_distances()?;
    Ok(scenario)
}

impl Scenario {
    fn check_distances(&self) -> Result<()> {
        let pairs = self
            .hap_positions
            .iter()
            .flat_map(|h| self.wd_positions.iter().chain(&self.irs_positions).map(move |p| (h, p)))
            .chain(
                self.irs_positions
                    .iter()
                    .flat_map(|r| self.wd_positions.iter().map(move |p| (r, p))),
            );
        for (a, b) in pairs {
            if !(a.distance(b) > 0.0) {
                return Err(Error::Domain(format!("coincident nodes at {a:?}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_node_positions() {
        let cfg = SystemConfig::default();
        let s = build_scenario(&cfg, 6.0, 1).unwrap();
        assert_eq!(s.hap_positions[0], Point3::new(0.0, -5.0, 3.0));
        assert_eq!(s.hap_positions[1], Point3::new(4.0, -5.0, 3.0));
        assert_eq!(s.irs_positions, vec![Point3::new(6.0, 1.0, 2.0), Point3::new(10.0, 1.0, 2.0)]);
    }

    #[test]
    fn wds_inside_cluster_and_deterministic() {
        let cfg = SystemConfig::default();
        let a = build_scenario(&cfg, 8.0, 42).unwrap();
        let b = build_scenario(&cfg, 8.0, 42).unwrap();
        let c = build_scenario(&cfg, 8.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.wd_positions, c.wd_positions);
        for p in &a.wd_positions {
            assert!(((p.x - 8.0).powi(2) + p.y.powi(2)).sqrt() <= 1.0);
            assert_eq!(p.z, 1.0);
        }
    }

    #[test]
    fn rejects_bad_cluster() {
        let cfg = SystemConfig::default();
        assert!(build_scenario(&cfg, 0.0, 1).is_err());
        let mut cfg = cfg;
        cfg.cluster_radius = 0.0;
        assert!(build_scenario(&cfg, 6.0, 1).is_err());
    }
}
