//! Simulated circular-integral data g(z, r): exact arc-length formulas for
//! disk phantoms, angular trapezoid quadrature for smooth ones, and white
//! noise scaled to an exact L2 ratio.

use crate::error::{Error, Result};
use crate::geometry::{dist, AcquisitionGeometry, Point};
use crate::phantom::Phantom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Sampled circular integrals on a detector x radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub geometry: AcquisitionGeometry,
    /// Strictly increasing, equispaced, starting at `r_step` (g(z, 0) = 0).
    pub radii: Vec<f64>,
    /// Row-major `values[k * radii.len() + m]` for detector k.
    pub values: Vec<f64>,
}

impl Projections {
    pub fn n_radii(&self) -> usize {
        self.radii.len()
    }

    pub fn r_step(&self) -> f64 {
        self.radii[0]
    }

    pub fn value(&self, detector: usize, radius_idx: usize) -> f64 {
        self.values[detector * self.radii.len() + radius_idx]
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Radial sampling matched to a reconstruction grid with `n_grid` nodes:
/// step `2R/(n_grid - 1)` and enough radii that every circle reaching the ROI
/// is kept. With `cap_radii` the count is capped at 129 instead.
pub fn default_radial_sampling(
    geom: &AcquisitionGeometry,
    n_grid: usize,
    cap_radii: bool,
) -> (usize, f64) {
    let r_step = 2.0 * geom.r_roi / (n_grid - 1) as f64;
    let n_full = ((geom.r_arc + geom.r_roi) / r_step).ceil() as usize;
    if cap_radii {
        (n_full.min(129), r_step)
    } else {
        (n_full, r_step)
    }
}

/// Arc length of the circle of radius `r` around `center_z` lying inside the
/// disk (`disk_center`, `disk_radius`).
pub fn circle_disk_integral(
    center_z: Point,
    r: f64,
    disk_center: Point,
    disk_radius: f64,
) -> f64 {
    let d = dist(center_z, disk_center);
    let rho = disk_radius;
    if r + d <= rho {
        return 2.0 * std::f64::consts::PI * r;
    }
    if d >= r + rho || r >= d + rho {
        return 0.0;
    }
    let cos_half = ((d * d + r * r - rho * rho) / (2.0 * d * r)).clamp(-1.0, 1.0);
    2.0 * r * cos_half.acos()
}

/// Simulate g(z_k, r_m) at `r_m = m * r_step`, `m = 1..=n_radii`.
///
/// Disk phantoms are integrated exactly; smooth phantoms use the composite
/// trapezoid rule with `quad_order` angular nodes (spectrally accurate on the
/// periodic integrand).
pub fn simulate(
    phantom: &Phantom,
    geom: &AcquisitionGeometry,
    n_radii: usize,
    r_step: f64,
    quad_order: usize,
) -> Result<Projections> {
    if r_step <= 0.0 || n_radii == 0 {
        return Err(Error::Config(format!(
            "need positive radial sampling, got n_radii = {n_radii}, r_step = {r_step}"
        )));
    }
    if quad_order < 16 {
        return Err(Error::Config(format!(
            "angular quadrature order {quad_order} is too coarse (minimum 16)"
        )));
    }
    let radii: Vec<f64> = (1..=n_radii).map(|m| m as f64 * r_step).collect();
    let detectors = geom.detector_points();
    let values: Vec<f64> = detectors
        .par_iter()
        .flat_map_iter(|det| {
            let z = det.position;
            radii.iter().map(move |&r| match phantom {
                Phantom::Disks(p) => p
                    .disks
                    .iter()
                    .map(|d| d.amplitude * circle_disk_integral(z, r, d.center, d.radius))
                    .sum(),
                Phantom::Smooth(_) => {
                    let dphi = 2.0 * std::f64::consts::PI / quad_order as f64;
                    let mut acc = 0.0;
                    for j in 0..quad_order {
                        let phi = j as f64 * dphi;
                        let (s, c) = phi.sin_cos();
                        acc += phantom.eval([z[0] + r * c, z[1] + r * s]);
                    }
                    r * acc * dphi
                }
            })
        })
        .collect();
    Ok(Projections {
        geometry: geom.clone(),
        radii,
        values,
    })
}

/// Add white Gaussian noise rescaled so that `||noise||_2` equals `level`
/// times `||proj||_2` exactly. Deterministic for a given seed.
pub fn add_noise(proj: &Projections, level: f64, seed: u64) -> Result<Projections> {
    if level < 0.0 {
        return Err(Error::Config(format!("noise level {level} must be >= 0")));
    }
    if level == 0.0 {
        return Ok(proj.clone());
    }
    let signal = proj.l2_norm();
    if signal == 0.0 {
        return Err(Error::Config(
            "cannot scale noise relative to an all-zero signal".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = Vec::with_capacity(proj.values.len());
    while noise.len() < proj.values.len() {
        let (a, b) = gauss_pair(&mut rng);
        noise.push(a);
        if noise.len() < proj.values.len() {
            noise.push(b);
        }
    }
    let norm = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = level * signal / norm;
    let values = proj
        .values
        .iter()
        .zip(&noise)
        .map(|(v, n)| v + scale * n)
        .collect();
    Ok(Projections {
        geometry: proj.geometry.clone(),
        radii: proj.radii.clone(),
        values,
    })
}

// Box-Muller on 53-bit uniforms.
fn gauss_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mag = (-2.0 * u1.ln()).sqrt();
    let phase = 2.0 * std::f64::consts::PI * u2;
    (mag * phase.cos(), mag * phase.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{Disk, DiskPhantom, SmoothPhantom};
    use std::f64::consts::PI;

    fn unit_disk_at(center: Point, radius: f64) -> Phantom {
        Phantom::Disks(DiskPhantom {
            disks: vec![Disk {
                center,
                radius,
                amplitude: 1.0,
            }],
        })
    }

    #[test]
    fn circle_inside_disk() {
        let v = circle_disk_integral([0.2, -0.1], 0.3, [0.2, -0.1], 0.5);
        assert!((v - 2.0 * PI * 0.3).abs() < 1e-14);
    }

    #[test]
    fn external_tangency_is_zero() {
        assert_eq!(circle_disk_integral([0.0, 0.0], 1.0, [1.5, 0.0], 0.5), 0.0);
        assert_eq!(circle_disk_integral([0.0, 0.0], 2.0, [0.0, 0.5], 0.5), 0.0);
    }

    #[test]
    fn lens_case_closed_form() {
        let v = circle_disk_integral([0.0, 0.0], 1.0, [1.0, 0.0], 1.0);
        assert!((v - 2.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn lens_case_vs_angular_quadrature() {
        // indicator-sampling oracle
        let n = 1_000_000usize;
        let (z, r, c, rho) = ([0.3, -0.2], 0.9, [0.8, 0.4], 0.55);
        let mut inside = 0usize;
        for j in 0..n {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let p = [z[0] + r * phi.cos(), z[1] + r * phi.sin()];
            if dist(p, c) < rho {
                inside += 1;
            }
        }
        let oracle = 2.0 * PI * r * inside as f64 / n as f64;
        let v = circle_disk_integral(z, r, c, rho);
        assert!((v - oracle).abs() <= 1e-5, "{v} vs {oracle}");
    }

    #[test]
    fn zero_phantom_zero_projections() {
        let geom = AcquisitionGeometry::reference_geometry_1(16);
        let p = Phantom::Disks(DiskPhantom { disks: vec![] });
        let proj = simulate(&p, &geom, 20, 0.1, 64).unwrap();
        assert!(proj.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_disk_matches_columnwise() {
        let geom = AcquisitionGeometry::reference_geometry_1(8);
        let phantom = unit_disk_at([0.2, 0.1], 0.4);
        let proj = simulate(&phantom, &geom, 25, 0.09, 64).unwrap();
        for (k, det) in geom.detector_points().iter().enumerate() {
            for (m, &r) in proj.radii.iter().enumerate() {
                let expect = circle_disk_integral(det.position, r, [0.2, 0.1], 0.4);
                assert_eq!(proj.value(k, m), expect);
            }
        }
    }

    #[test]
    fn disk_linearity() {
        let geom = AcquisitionGeometry::reference_geometry_2(8);
        let d1 = Disk {
            center: [-0.3, 0.2],
            radius: 0.25,
            amplitude: 1.0,
        };
        let d2 = Disk {
            center: [-0.5, -0.3],
            radius: 0.2,
            amplitude: 1.0,
        };
        let mk = |a1: f64, a2: f64| {
            Phantom::Disks(DiskPhantom {
                disks: vec![
                    Disk {
                        amplitude: a1,
                        ..d1
                    },
                    Disk {
                        amplitude: a2,
                        ..d2
                    },
                ],
            })
        };
        let pa = simulate(&mk(1.0, 0.0), &geom, 30, 0.08, 64).unwrap();
        let pb = simulate(&mk(0.0, 1.0), &geom, 30, 0.08, 64).unwrap();
        let pc = simulate(&mk(2.5, -0.5), &geom, 30, 0.08, 64).unwrap();
        for i in 0..pc.values.len() {
            let lin = 2.5 * pa.values[i] - 0.5 * pb.values[i];
            assert!((pc.values[i] - lin).abs() <= 1e-12);
        }
    }

    #[test]
    fn smooth_quadrature_self_convergence() {
        let geom = AcquisitionGeometry::reference_geometry_1(24);
        let phantom = Phantom::Smooth(SmoothPhantom::two_bump());
        let a = simulate(&phantom, &geom, 30, 2.3 / 30.0, 2048).unwrap();
        let b = simulate(&phantom, &geom, 30, 2.3 / 30.0, 4096).unwrap();
        let max_diff = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(max_diff <= 1e-10, "{max_diff:e}");
    }

    #[test]
    fn support_zero_before_first_arrival() {
        let geom = AcquisitionGeometry::reference_geometry_1(32);
        let phantom = Phantom::Disks(DiskPhantom::default_layout());
        let proj = simulate(&phantom, &geom, 40, 0.05, 64).unwrap();
        for k in 0..32 {
            for (m, &r) in proj.radii.iter().enumerate() {
                if r < geom.r_arc - geom.r_roi {
                    assert_eq!(proj.value(k, m), 0.0);
                }
            }
        }
    }

    #[test]
    fn concentric_disk_mass() {
        // integral over r of g(z, r) equals the disk area
        let geom = AcquisitionGeometry::reference_geometry_1(4);
        let rho = 0.4f64;
        let phantom = unit_disk_at([0.0, 0.0], rho);
        let r_step = 5e-4;
        let n = ((geom.r_arc + rho) / r_step).ceil() as usize + 10;
        let proj = simulate(&phantom, &geom, n, r_step, 64).unwrap();
        let mass: f64 = (0..n).map(|m| proj.value(0, m) * r_step).sum();
        assert!((mass - PI * rho * rho).abs() <= 1e-4, "{mass}");
    }

    #[test]
    fn noise_exact_ratio_and_determinism() {
        let geom = AcquisitionGeometry::reference_geometry_1(16);
        let phantom = Phantom::Disks(DiskPhantom::default_layout());
        let proj = simulate(&phantom, &geom, 40, 0.05, 64).unwrap();

        let same = add_noise(&proj, 0.0, 7).unwrap();
        assert_eq!(same.values, proj.values);

        let noisy = add_noise(&proj, 0.15, 7).unwrap();
        let diff: f64 = noisy
            .values
            .iter()
            .zip(&proj.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((diff / proj.l2_norm() - 0.15).abs() <= 1e-12);

        let noisy2 = add_noise(&proj, 0.15, 7).unwrap();
        assert_eq!(noisy.values, noisy2.values);
        let noisy3 = add_noise(&proj, 0.15, 8).unwrap();
        assert_ne!(noisy.values, noisy3.values);
    }

    #[test]
    fn noise_on_zero_signal_fails() {
        let geom = AcquisitionGeometry::reference_geometry_1(4);
        let p = Phantom::Disks(DiskPhantom { disks: vec![] });
        let proj = simulate(&p, &geom, 10, 0.1, 64).unwrap();
        assert!(add_noise(&proj, 0.15, 1).is_err());
    }

    #[test]
    fn coarse_quadrature_rejected() {
        let geom = AcquisitionGeometry::reference_geometry_1(4);
        let phantom = Phantom::Smooth(SmoothPhantom::two_bump());
        assert!(simulate(&phantom, &geom, 10, 0.1, 8).is_err());
    }
}
