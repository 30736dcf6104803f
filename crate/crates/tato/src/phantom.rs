//! Test phantoms: a C^8 bell-sum smooth family and sums of characteristic
//! functions of disks.

use crate::geometry::Point;
use crate::grid::{GridSpec, Image};

/// `c0 * integral_0^{1-|t|} sin^8(pi s) ds`, normalized so `bell(0) = 1`;
/// zero for `|t| >= 1`. Even, compactly supported, 8 times continuously
/// differentiable.
pub fn bell(t: f64) -> f64 {
    let a = t.abs();
    if a >= 1.0 {
        return 0.0;
    }
    let u = 1.0 - a;
    (128.0 / 35.0) * sin8_antiderivative(u)
}

/// Closed form of `integral_0^u sin^8(pi s) ds`.
fn sin8_antiderivative(u: f64) -> f64 {
    use std::f64::consts::PI;
    let tp = 2.0 * PI * u;
    35.0 / 128.0 * u - (tp).sin() * 7.0 / (32.0 * PI) + (2.0 * tp).sin() * 7.0 / (128.0 * PI)
        - (3.0 * tp).sin() / (96.0 * PI)
        + (4.0 * tp).sin() / (1024.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
}

/// Sum of bell-shaped rotationally invariant bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPhantom {
    pub bumps: Vec<Bump>,
}

impl SmoothPhantom {
    /// The two-bump phantom used for the smooth-reconstruction experiments:
    /// centers (0.3, 0.3) and (-0.4, 0.2), radii 0.55 and 0.5.
    pub fn two_bump() -> Self {
        Self {
            bumps: vec![
                Bump {
                    center: [0.3, 0.3],
                    radius: 0.55,
                },
                Bump {
                    center: [-0.4, 0.2],
                    radius: 0.5,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

/// Sum of characteristic functions of disks.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskPhantom {
    pub disks: Vec<Disk>,
}

impl DiskPhantom {
    /// Six unit-amplitude disks inside the unit-disk ROI; a generic test
    /// layout for piecewise-constant reconstruction experiments.
    pub fn default_layout() -> Self {
        let disks = [
            ([0.3, 0.45], 0.18),
            ([-0.45, 0.35], 0.22),
            ([-0.2, -0.4], 0.25),
            ([0.45, -0.25], 0.15),
            ([0.0, 0.05], 0.12),
            ([-0.55, -0.05], 0.10),
        ];
        Self {
            disks: disks
                .iter()
                .map(|&(center, radius)| Disk {
                    center,
                    radius,
                    amplitude: 1.0,
                })
                .collect(),
        }
    }

    /// Unit-amplitude disks supported in the left half of the unit disk (the
    /// ROI of the half-circle geometry).
    pub fn half_disk_layout() -> Self {
        let disks = [
            ([-0.3, 0.45], 0.18),
            ([-0.45, -0.35], 0.22),
            ([-0.6, 0.1], 0.20),
            ([-0.25, -0.15], 0.10),
        ];
        Self {
            disks: disks
                .iter()
                .map(|&(center, radius)| Disk {
                    center,
                    radius,
                    amplitude: 1.0,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Phantom {
    Smooth(SmoothPhantom),
    Disks(DiskPhantom),
}

impl Phantom {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Phantom::Smooth(p) => p
                .bumps
                .iter()
                .map(|b| bell(crate::geometry::dist(x, b.center) / b.radius))
                .sum(),
            Phantom::Disks(p) => p
                .disks
                .iter()
                .filter(|d| crate::geometry::dist(x, d.center) < d.radius)
                .map(|d| d.amplitude)
                .sum(),
        }
    }

    pub fn render(&self, grid: GridSpec) -> Image {
        Image::from_fn(grid, |x| self.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_normalization() {
        assert!((bell(0.0) - 1.0).abs() <= 1e-14);
        assert!((bell(0.5) - 0.5).abs() <= 1e-14);
        assert_eq!(bell(1.2), 0.0);
        assert_eq!(bell(1.0), 0.0);
    }

    #[test]
    fn bell_matches_quadrature() {
        // composite Simpson oracle for the inner integral
        let quad = |u: f64| {
            let n = 20000;
            let h = u / n as f64;
            let f = |s: f64| (std::f64::consts::PI * s).sin().powi(8);
            let mut acc = f(0.0) + f(u);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(i as f64 * h);
            }
            acc * h / 3.0
        };
        for &t in &[0.0f64, 0.1, 0.25, 0.5, 0.77, 0.99] {
            let expected = (128.0 / 35.0) * quad(1.0 - t);
            assert!((bell(t) - expected).abs() <= 1e-12, "t={t}");
        }
    }

    #[test]
    fn bell_is_even() {
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let t = (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0;
            assert_eq!(bell(t), bell(-t));
        }
    }

    #[test]
    fn bell_monotone_nonincreasing_on_unit_interval() {
        let mut prev = bell(0.0);
        for i in 1..=1000 {
            let v = bell(i as f64 / 1000.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn bell_smoothness_at_support_edge() {
        // 8th central difference at t = +-1 stays bounded as the step shrinks
        let coeffs = [1.0, -8.0, 28.0, -56.0, 70.0, -56.0, 28.0, -8.0, 1.0];
        for &t0 in &[1.0f64, -1.0] {
            for &h in &[0.5f64, 0.2, 0.1, 0.05, 0.02, 0.01] {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate() {
                    acc += c * bell(t0 + (k as f64 - 4.0) * h);
                }
                let d8 = acc / h.powi(8);
                // the true eighth derivative peaks near 4e8; divergence would
                // scale like h^{-1} or worse on this step sweep
                assert!(d8.abs() < 1e9, "t0={t0} h={h} d8={d8:e}");
            }
        }
    }

    #[test]
    fn smooth_eval_reference_point() {
        let p = Phantom::Smooth(SmoothPhantom::two_bump());
        // second bump is out of range there, first contributes bell(0) = 1
        assert!((p.eval([0.3, 0.3]) - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn disk_eval_additivity() {
        let p = Phantom::Disks(DiskPhantom {
            disks: vec![
                Disk {
                    center: [0.0, 0.0],
                    radius: 0.5,
                    amplitude: 1.0,
                },
                Disk {
                    center: [0.2, 0.0],
                    radius: 0.5,
                    amplitude: 1.0,
                },
            ],
        });
        assert_eq!(p.eval([2.0, 2.0]), 0.0);
        assert_eq!(p.eval([0.1, 0.0]), 2.0);
        assert_eq!(p.eval([-0.4, 0.0]), 1.0);
    }

    #[test]
    fn render_matches_dense_eval() {
        let grid = GridSpec::new(1.0, 129).unwrap();
        let phantom = Phantom::Smooth(SmoothPhantom::two_bump());
        let img = phantom.render(grid);
        let max = img.values.iter().cloned().fold(f64::MIN, f64::max);
        // grid nodes straddle both bump peaks; max must be close to the
        // single-bump peak and cannot exceed the theoretical overlap bound
        assert!(max >= bell(grid.step() / 0.5));
        assert!(max <= 2.0);
        let zero = Phantom::Disks(DiskPhantom { disks: vec![] });
        assert!(zero.render(grid).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_render_values_in_amplitude_set() {
        let grid = GridSpec::new(1.0, 65).unwrap();
        let img = Phantom::Disks(DiskPhantom::default_layout()).render(grid);
        for &v in &img.values {
            assert!(v == 0.0 || v == 1.0 || v == 2.0);
        }
    }

    #[test]
    fn layouts_inside_their_rois() {
        for d in DiskPhantom::default_layout().disks {
            let c = (d.center[0].powi(2) + d.center[1].powi(2)).sqrt();
            assert!(c + d.radius < 1.0);
        }
        for d in DiskPhantom::half_disk_layout().disks {
            let c = (d.center[0].powi(2) + d.center[1].powi(2)).sqrt();
            assert!(c + d.radius < 1.0);
            assert!(d.center[0] + d.radius < 0.0);
        }
    }
}
