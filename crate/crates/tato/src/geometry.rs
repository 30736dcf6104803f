//! Acquisition geometry: truncated-disk ROI, open circular arc of detectors,
//! and quadrature points on both curves.
//!
//! The region of interest is `{ x : |x| < R, x1 < x_right }`; the detector
//! curve is `{ z : |z| = R_gamma, z1 < z_right }` with `R_gamma > R`.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub fn dist(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// A quadrature point on a curve, with outward normal and arclength weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub position: Point,
    pub outward_normal: Point,
    pub arclength_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionGeometry {
    pub r_roi: f64,
    pub r_arc: f64,
    pub x_right: f64,
    pub z_right: f64,
    pub n_detectors: usize,
    pub n_collocation: usize,
}

impl AcquisitionGeometry {
    /// Build a geometry with the default collocation count (twice the number
    /// of detectors).
    pub fn new(
        r_roi: f64,
        r_arc: f64,
        x_right: f64,
        z_right: f64,
        n_detectors: usize,
    ) -> Result<Self> {
        Self::with_collocation(r_roi, r_arc, x_right, z_right, n_detectors, 2 * n_detectors)
    }

    pub fn with_collocation(
        r_roi: f64,
        r_arc: f64,
        x_right: f64,
        z_right: f64,
        n_detectors: usize,
        n_collocation: usize,
    ) -> Result<Self> {
        if !(r_roi > 0.0 && r_arc > r_roi) {
            return Err(Error::Geometry(format!(
                "need R_gamma > R > 0, got R = {r_roi}, R_gamma = {r_arc}"
            )));
        }
        if z_right <= -r_arc || z_right > r_arc {
            return Err(Error::Geometry(format!(
                "z_right = {z_right} must lie in (-R_gamma, R_gamma]"
            )));
        }
        if x_right < -r_roi || x_right > r_roi {
            return Err(Error::Geometry(format!(
                "x_right = {x_right} must lie in [-R, R]"
            )));
        }
        if n_detectors == 0 || n_collocation == 0 {
            return Err(Error::Geometry("point counts must be positive".into()));
        }
        Ok(Self {
            r_roi,
            r_arc,
            x_right,
            z_right,
            n_detectors,
            n_collocation,
        })
    }

    /// Reference geometry #1: unit-disk ROI, arc radius 1.3, x_right = z_right = 1.
    pub fn reference_geometry_1(n_detectors: usize) -> Self {
        Self::new(1.0, 1.3, 1.0, 1.0, n_detectors).expect("valid by construction")
    }

    /// Reference geometry #2: half-disk ROI, half-circle acquisition arc.
    pub fn reference_geometry_2(n_detectors: usize) -> Self {
        Self::new(1.0, 1.3, 0.0, 0.0, n_detectors).expect("valid by construction")
    }

    /// Full-circle benchmark geometry (closed arc, full-disk ROI).
    pub fn full_circle(r_roi: f64, r_arc: f64, n_detectors: usize) -> Result<Self> {
        Self::new(r_roi, r_arc, r_roi, r_arc, n_detectors)
    }

    pub fn is_full_circle_arc(&self) -> bool {
        self.z_right >= self.r_arc
    }

    /// The visibility inequality `z_right >= x_right`.
    pub fn visibility_satisfied(&self) -> bool {
        self.z_right >= self.x_right
    }

    /// Point is inside the truncated-disk ROI.
    pub fn contains(&self, x: Point) -> bool {
        x[0] * x[0] + x[1] * x[1] < self.r_roi * self.r_roi && x[0] < self.x_right
    }

    /// Detector quadrature points, equispaced in arc angle at midpoints.
    pub fn detector_points(&self) -> Vec<BoundaryPoint> {
        // the arc excludes the angular sector |theta| < alpha around +x
        let alpha = if self.is_full_circle_arc() {
            0.0
        } else {
            (self.z_right / self.r_arc).acos()
        };
        let span = 2.0 * std::f64::consts::PI - 2.0 * alpha;
        let step = span / self.n_detectors as f64;
        let weight = self.r_arc * step;
        (0..self.n_detectors)
            .map(|k| {
                let theta = alpha + (k as f64 + 0.5) * step;
                let (s, c) = theta.sin_cos();
                BoundaryPoint {
                    position: [self.r_arc * c, self.r_arc * s],
                    outward_normal: [c, s],
                    arclength_weight: weight,
                }
            })
            .collect()
    }

    /// Collocation points equispaced in arc length along the ROI boundary
    /// (circular arc plus, when `x_right < R`, the vertical chord), offset by
    /// half a step so the arc-chord corners are never sampled.
    pub fn boundary_collocation(&self) -> Vec<BoundaryPoint> {
        let r = self.r_roi;
        let full_disk = self.x_right >= r;
        let beta = if full_disk {
            0.0
        } else {
            (self.x_right / r).acos()
        };
        let chord_half = if full_disk {
            0.0
        } else {
            (r * r - self.x_right * self.x_right).sqrt()
        };
        let arc_len = r * (2.0 * std::f64::consts::PI - 2.0 * beta);
        let perimeter = arc_len + 2.0 * chord_half;
        let step = perimeter / self.n_collocation as f64;
        (0..self.n_collocation)
            .map(|k| {
                let s = (k as f64 + 0.5) * step;
                if s < arc_len {
                    // counterclockwise from the (x_right, +chord_half) junction
                    let theta = beta + s / r;
                    let (sn, cs) = theta.sin_cos();
                    BoundaryPoint {
                        position: [r * cs, r * sn],
                        outward_normal: [cs, sn],
                        arclength_weight: step,
                    }
                } else {
                    // chord from (x_right, -chord_half) up to (x_right, +chord_half)
                    let y = -chord_half + (s - arc_len);
                    BoundaryPoint {
                        position: [self.x_right, y],
                        outward_normal: [1.0, 0.0],
                        arclength_weight: step,
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn geometry_validation() {
        assert!(AcquisitionGeometry::new(1.0, 0.9, 0.0, 0.0, 10).is_err());
        assert!(AcquisitionGeometry::new(-1.0, 1.3, 0.0, 0.0, 10).is_err());
        assert!(AcquisitionGeometry::new(1.0, 1.3, 0.0, -1.3, 10).is_err());
        assert!(AcquisitionGeometry::new(1.0, 1.3, 1.5, 0.0, 10).is_err());
        assert!(AcquisitionGeometry::new(1.0, 1.3, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn visibility() {
        assert!(AcquisitionGeometry::reference_geometry_1(10).visibility_satisfied());
        assert!(AcquisitionGeometry::reference_geometry_2(10).visibility_satisfied());
        let bad = AcquisitionGeometry::new(1.0, 1.3, 0.5, 0.0, 10).unwrap();
        assert!(!bad.visibility_satisfied());
    }

    #[test]
    fn detectors_span_expected_arc_geometry_1() {
        let geom = AcquisitionGeometry::reference_geometry_1(500);
        let alpha = (1.0f64 / 1.3).acos();
        for p in geom.detector_points() {
            let r = (p.position[0].powi(2) + p.position[1].powi(2)).sqrt();
            assert!((r - 1.3).abs() <= 1e-12);
            assert!(p.position[0] < geom.z_right);
            let theta = p.position[1].atan2(p.position[0]).rem_euclid(2.0 * PI);
            assert!(theta > alpha && theta < 2.0 * PI - alpha);
        }
    }

    #[test]
    fn detectors_half_circle_geometry_2() {
        let geom = AcquisitionGeometry::reference_geometry_2(500);
        let pts = geom.detector_points();
        let total: f64 = pts.iter().map(|p| p.arclength_weight).sum();
        assert!((total - PI * 1.3).abs() <= 1e-12);
        for p in &pts {
            assert!(p.position[0] < 0.0);
        }
    }

    #[test]
    fn detectors_full_circle_weights() {
        let geom = AcquisitionGeometry::full_circle(1.0, 1.3, 64).unwrap();
        let total: f64 = geom
            .detector_points()
            .iter()
            .map(|p| p.arclength_weight)
            .sum();
        assert!((total - 2.0 * PI * 1.3).abs() <= 1e-12 * 2.0 * PI * 1.3);
    }

    #[test]
    fn collocation_full_disk_all_on_circle() {
        let geom = AcquisitionGeometry::reference_geometry_1(100);
        for q in geom.boundary_collocation() {
            let r = (q.position[0].powi(2) + q.position[1].powi(2)).sqrt();
            assert!((r - 1.0).abs() <= 1e-12);
            let n = q.outward_normal;
            assert!((n[0] - q.position[0]).abs() <= 1e-12);
            assert!((n[1] - q.position[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn collocation_half_disk_split_and_perimeter() {
        let geom = AcquisitionGeometry::reference_geometry_2(100);
        let pts = geom.boundary_collocation();
        assert_eq!(pts.len(), 200);
        let perimeter = PI + 2.0;
        let total: f64 = pts.iter().map(|p| p.arclength_weight).sum();
        assert!((total - perimeter).abs() <= 1e-12 * perimeter);

        let on_chord = pts
            .iter()
            .filter(|p| (p.position[0] - 0.0).abs() <= 1e-12)
            .count();
        let expected = (200.0 * 2.0 / perimeter).round() as usize;
        assert!(on_chord.abs_diff(expected) <= 1, "{on_chord} vs {expected}");
        for p in &pts {
            let on_circ = (dist([0.0, 0.0], p.position) - 1.0).abs() <= 1e-12
                && p.position[0] <= geom.x_right + 1e-12;
            let chord = (p.position[0] - geom.x_right).abs() <= 1e-12 && p.position[1].abs() <= 1.0;
            assert!(on_circ || chord);
            let nn = (p.outward_normal[0].powi(2) + p.outward_normal[1].powi(2)).sqrt();
            assert!((nn - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn curves_stay_separated() {
        for geom in [
            AcquisitionGeometry::reference_geometry_1(64),
            AcquisitionGeometry::reference_geometry_2(64),
        ] {
            let det = geom.detector_points();
            let col = geom.boundary_collocation();
            let mut min_d = f64::INFINITY;
            for d in &det {
                for c in &col {
                    min_d = min_d.min(dist(d.position, c.position));
                }
            }
            assert!(min_d >= geom.r_arc - geom.r_roi - 1e-9);
        }
    }
}
