//! Reconstruction pipeline past the densities: Bessel/Neumann radial
//! transforms of the projection data, Fourier coefficients on the polar
//! grid, optional low-pass filtering, slice-theorem synthesis of classical
//! Radon projections, and filtered backprojection.

use crate::densities::DensitySet;
use crate::error::{Error, Result};
use crate::forward::Projections;
use crate::geometry::AcquisitionGeometry;
use crate::grid::{GridSpec, Image};
use crate::specfun::{bessel_j0, bessel_y0};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// Approximate 2-D Fourier transform values `fhat(xi)` with
/// `fhat(xi) = (1/2pi) integral f(x) exp(-i xi . x) dx`, sampled on the
/// polar grid `xi_{i,j} = lambda_i (cos theta_j, sin theta_j)`.
#[derive(Debug, Clone)]
pub struct PolarSpectrum {
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Row-major `values[i * thetas.len() + j]`.
    pub values: Vec<Complex64>,
    /// `fhat(0) = mass/(2 pi)` when known from the data (the radial integral
    /// of the projections equals the phantom mass for every detector);
    /// otherwise synthesized by extrapolation in `lambda`.
    pub dc: Option<f64>,
}

impl PolarSpectrum {
    pub fn at(&self, lambda_idx: usize, theta_idx: usize) -> Complex64 {
        self.values[lambda_idx * self.thetas.len() + theta_idx]
    }
}

/// Low-pass filter applied to the spectrum before sinogram synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    None,
    Cosine,
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FilterKind::None),
            "cosine" => Ok(FilterKind::Cosine),
            other => Err(Error::Config(format!(
                "unknown filter {other:?} (expected \"none\" or \"cosine\")"
            ))),
        }
    }
}

/// Classical Radon projections `Rf(theta, s)` on angles in `[0, pi)` and
/// equispaced signed offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub angles: Vec<f64>,
    /// Ascending, equispaced, symmetric about 0 up to the half-step.
    pub offsets: Vec<f64>,
    /// Row-major `values[j * offsets.len() + m]` for angle j.
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn at(&self, angle_idx: usize, offset_idx: usize) -> f64 {
        self.values[angle_idx * self.offsets.len() + offset_idx]
    }

    fn offset_step(&self) -> f64 {
        self.offsets[1] - self.offsets[0]
    }

    /// Trapezoid mass `integral Rf(theta, s) ds` of one projection.
    pub fn mass(&self, angle_idx: usize) -> f64 {
        let n = self.offsets.len();
        let row = &self.values[angle_idx * n..(angle_idx + 1) * n];
        let interior: f64 = row[1..n - 1].iter().sum();
        self.offset_step() * (interior + 0.5 * (row[0] + row[n - 1]))
    }
}

fn check_equispaced(xs: &[f64], what: &str) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::Config(format!("{what}: need at least 2 samples")));
    }
    let step = xs[1] - xs[0];
    if step <= 0.0 {
        return Err(Error::Config(format!("{what}: not increasing")));
    }
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step {
            return Err(Error::Config(format!("{what}: not equispaced")));
        }
    }
    Ok(step)
}

/// `G_J(lambda, z) = integral g(z, r) J0(lambda r) dr` and the `Y0`
/// counterpart, one value per detector, by the composite trapezoid rule with
/// the implicit `g(z, 0) = 0` left endpoint (so `Y0(0)` is never touched).
pub fn radial_transforms(proj: &Projections, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if lambda <= 0.0 {
        return Err(Error::domain("radial_transforms", "lambda must be > 0"));
    }
    let dr = check_equispaced(&proj.radii, "projection radii")?;
    if (proj.radii[0] - dr).abs() > 1e-9 * dr {
        return Err(Error::Config(
            "projection radii must start at one radial step".into(),
        ));
    }
    let nr = proj.n_radii();
    let mut j0_tab = Vec::with_capacity(nr);
    let mut y0_tab = Vec::with_capacity(nr);
    for &r in &proj.radii {
        j0_tab.push(bessel_j0(lambda * r));
        y0_tab.push(bessel_y0(lambda * r));
    }
    let nd = proj.geometry.n_detectors;
    let mut g_j = Vec::with_capacity(nd);
    let mut g_y = Vec::with_capacity(nd);
    for k in 0..nd {
        let row = &proj.values[k * nr..(k + 1) * nr];
        let mut aj = 0.0;
        let mut ay = 0.0;
        for m in 0..nr {
            // endpoint halving only on the right; the r = 0 endpoint is zero
            let w = if m == nr - 1 { 0.5 } else { 1.0 };
            aj += w * row[m] * j0_tab[m];
            ay += w * row[m] * y0_tab[m];
        }
        g_j.push(dr * aj);
        g_y.push(dr * ay);
    }
    Ok((g_j, g_y))
}

/// Fourier coefficients on the polar grid of the density set:
/// `fhat(xi_{i,j}) = (1/2pi) sum_k [rho_J G_J + rho_Y G_Y](z_k) w_k`.
pub fn fourier_coefficients(proj: &Projections, set: &DensitySet) -> Result<PolarSpectrum> {
    if proj.geometry != set.geometry {
        return Err(Error::Geometry(
            "projection and density geometries differ".into(),
        ));
    }
    let weights: Vec<f64> = proj
        .geometry
        .detector_points()
        .iter()
        .map(|p| p.arclength_weight)
        .collect();
    let nt = set.thetas.len();
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    let per_lambda: Vec<Result<Vec<Complex64>>> = set
        .lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let (g_j, g_y) = radial_transforms(proj, lambda)?;
            let mut row = Vec::with_capacity(nt);
            for j in 0..nt {
                let (rho_j, rho_y) = set.rho_at(i, j);
                let mut acc = Complex64::default();
                for k in 0..g_j.len() {
                    acc += (rho_j[k] * g_j[k] + rho_y[k] * g_y[k]) * weights[k];
                }
                row.push(scale * acc);
            }
            Ok(row)
        })
        .collect();
    let mut values = Vec::with_capacity(set.lambdas.len() * nt);
    for row in per_lambda {
        values.extend(row?);
    }
    // fhat(0) = mass / 2pi, and the radial integral of every projection
    // equals the mass; average over detectors (noise-robust, exact identity)
    let dr = check_equispaced(&proj.radii, "projection radii")?;
    let nr = proj.n_radii();
    let nd = proj.geometry.n_detectors;
    let mut mass = 0.0;
    for k in 0..nd {
        let row = &proj.values[k * nr..(k + 1) * nr];
        let mut acc = 0.0;
        for m in 0..nr {
            let w = if m == nr - 1 { 0.5 } else { 1.0 };
            acc += w * row[m];
        }
        mass += dr * acc;
    }
    mass /= nd as f64;
    Ok(PolarSpectrum {
        lambdas: set.lambdas.clone(),
        thetas: set.thetas.clone(),
        values,
        dc: Some(mass * scale),
    })
}

/// Multiply the spectrum by the low-pass window; `Cosine` is
/// `cos(pi |xi| / (2 lambda_max))`, vanishing at the largest grid frequency
/// (the reconstruction-grid Nyquist on the default polar grid).
pub fn apply_lowpass(spec: &PolarSpectrum, kind: FilterKind) -> PolarSpectrum {
    let mut out = spec.clone();
    if kind == FilterKind::None {
        return out;
    }
    let lambda_max = *spec.lambdas.last().expect("non-empty spectrum");
    let nt = spec.thetas.len();
    for (i, &lambda) in spec.lambdas.iter().enumerate() {
        let eta = (std::f64::consts::FRAC_PI_2 * lambda / lambda_max).cos();
        for v in &mut out.values[i * nt..(i + 1) * nt] {
            *v *= eta;
        }
    }
    out
}

fn validate_polar_grid(spec: &PolarSpectrum) -> Result<(f64, usize, usize)> {
    let nl = spec.lambdas.len();
    let nt = spec.thetas.len();
    if nl < 3 {
        return Err(Error::Config(
            "need at least 3 radial frequencies for the DC extrapolation".into(),
        ));
    }
    if nt < 2 || nt % 2 != 0 {
        return Err(Error::Config(
            "need an even number of angles covering [0, 2pi)".into(),
        ));
    }
    let dl = check_equispaced(&spec.lambdas, "spectrum lambdas")?;
    if (spec.lambdas[0] - dl).abs() > 1e-9 * dl {
        return Err(Error::Config("lambdas must start at one step".into()));
    }
    let dt = 2.0 * std::f64::consts::PI / nt as f64;
    for (j, &t) in spec.thetas.iter().enumerate() {
        if (t - j as f64 * dt).abs() > 1e-9 {
            return Err(Error::Config(
                "thetas must be uniform over [0, 2pi) starting at 0".into(),
            ));
        }
    }
    Ok((dl, nl, nt))
}

/// DC value `fhat(0)` by quadratic extrapolation in `lambda^2` of the
/// theta-averaged radial profile (even and smooth in `lambda` for real,
/// compactly supported `f`), from the three smallest frequencies.
fn extrapolate_dc(spec: &PolarSpectrum) -> f64 {
    let nt = spec.thetas.len();
    let mut profile = [0.0f64; 3];
    for (i, p) in profile.iter_mut().enumerate() {
        *p = spec.values[i * nt..(i + 1) * nt]
            .iter()
            .map(|v| v.re)
            .sum::<f64>()
            / nt as f64;
    }
    // Lagrange weights at 0 for the nodes (1, 4, 9) in u = (lambda/dl)^2
    1.5 * profile[0] - 0.6 * profile[1] + 0.1 * profile[2]
}

/// Synthesize Radon projections from the polar spectrum via the
/// slice-projection theorem: per angle, inverse DFT of the radial line
/// (negative frequencies taken from the opposite angle), offsets
/// `s_m = m pi / lambda_max`. Projections at `theta + pi` are mirror images
/// of those at `theta`, so only angles in `[0, pi)` are emitted.
pub fn spectrum_to_sinogram(spec: &PolarSpectrum) -> Result<Sinogram> {
    let (dl, nl, nt) = validate_polar_grid(spec)?;
    let m_len = 2 * nl;
    let lambda_max = spec.lambdas[nl - 1];
    let ds = std::f64::consts::PI / lambda_max;
    let dc = spec.dc.unwrap_or_else(|| extrapolate_dc(spec));

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(m_len);

    let half = nt / 2;
    let offsets: Vec<f64> = (0..m_len).map(|p| (p as f64 - nl as f64) * ds).collect();
    let rows: Vec<Vec<f64>> = (0..half)
        .into_par_iter()
        .map(|j| {
            let jo = j + half;
            let mut line = vec![Complex64::default(); m_len];
            line[0] = Complex64::new(dc, 0.0);
            for i in 1..nl {
                line[i] = spec.at(i - 1, j);
                line[m_len - i] = spec.at(i - 1, jo);
            }
            // the shared +-lambda_max bin: symmetric average of both sides
            line[nl] = 0.5 * (spec.at(nl - 1, jo) + spec.at(nl - 1, j).conj());
            ifft.process(&mut line);
            // reorder so offsets ascend: s = (p - nl) ds sits at DFT index
            // (p - nl) mod m_len
            (0..m_len)
                .map(|p| dl * line[(p + nl) % m_len].re)
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(half * m_len);
    for row in rows {
        values.extend(row);
    }
    Ok(Sinogram {
        angles: spec.thetas[..half].to_vec(),
        offsets,
        values,
    })
}

/// Filtered backprojection with the band-limited (frequency-domain) ramp on
/// zero-padded projections and linear interpolation in the offset variable.
/// The filtered projections are trigonometrically upsampled 8x (zero-padded
/// spectrum) before interpolation to keep the interpolation error negligible.
pub fn fbp(sino: &Sinogram, grid: GridSpec) -> Result<Image> {
    const UPSAMPLE: usize = 8;
    let na = sino.angles.len();
    if na < 2 {
        return Err(Error::Config("fbp needs at least 2 angles".into()));
    }
    check_equispaced(&sino.angles, "sinogram angles")?;
    let ds = check_equispaced(&sino.offsets, "sinogram offsets")?;
    let m_len = sino.offsets.len();
    let padded = (8 * m_len).next_power_of_two();
    let fine = UPSAMPLE * padded;
    let dsf = ds / UPSAMPLE as f64;
    let fine_len = UPSAMPLE * (m_len - 1) + 1;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(padded);
    let ifft = planner.plan_fft_inverse(fine);

    // ramp-filter every projection: p~ = (1/2pi) integral |lambda| p^ e^{i lambda s} dlambda
    let filtered: Vec<Vec<f64>> = (0..na)
        .into_par_iter()
        .map(|j| {
            let mut buf = vec![Complex64::default(); padded];
            for m in 0..m_len {
                buf[m] = Complex64::new(sino.at(j, m), 0.0);
            }
            fft.process(&mut buf);
            let dl = 2.0 * std::f64::consts::PI / (padded as f64 * ds);
            for (k, v) in buf.iter_mut().enumerate() {
                let freq_idx = if k <= padded / 2 { k } else { padded - k };
                *v *= freq_idx as f64 * dl;
            }
            // zero-pad the spectrum to upsample the filtered projection
            let mut up = vec![Complex64::default(); fine];
            up[..padded / 2].copy_from_slice(&buf[..padded / 2]);
            up[fine - padded / 2..].copy_from_slice(&buf[padded / 2..]);
            // split the shared Nyquist bin between the two halves
            let nyq = 0.5 * buf[padded / 2];
            up[padded / 2] = nyq;
            up[fine - padded / 2] = nyq;
            ifft.process(&mut up);
            // the two transforms contribute ds and dl/(2 pi) = 1/(padded ds)
            up[..fine_len]
                .iter()
                .map(|v| v.re / padded as f64)
                .collect()
        })
        .collect();

    let trig: Vec<(f64, f64)> = sino.angles.iter().map(|t| (t.cos(), t.sin())).collect();
    let trig = &trig;
    let filtered = &filtered;
    let s0 = sino.offsets[0];
    let values: Vec<f64> = (0..grid.n)
        .into_par_iter()
        .flat_map_iter(|iy| {
            let y = grid.coord(iy);
            (0..grid.n).map(move |ix| {
                let x = grid.coord(ix);
                let mut acc = 0.0;
                for (j, &(c, s)) in trig.iter().enumerate() {
                    let idx = (x * c + y * s - s0) / dsf;
                    let i0 = idx.floor();
                    if i0 < 0.0 || i0 as usize + 1 >= fine_len {
                        continue;
                    }
                    let i0 = i0 as usize;
                    let frac = idx - i0 as f64;
                    acc += (1.0 - frac) * filtered[j][i0] + frac * filtered[j][i0 + 1];
                }
                acc / (2.0 * na as f64)
            })
        })
        .collect();
    Ok(Image { grid, values })
}

/// The full pipeline: radial transforms, Fourier coefficients, low-pass,
/// sinogram synthesis, and FBP onto `grid`.
pub fn reconstruct(
    proj: &Projections,
    set: &DensitySet,
    filter: FilterKind,
    grid: GridSpec,
) -> Result<Image> {
    let spec = fourier_coefficients(proj, set)?;
    let spec = apply_lowpass(&spec, filter);
    let sino = spectrum_to_sinogram(&spec)?;
    fbp(&sino, grid)
}

/// Max absolute and relative L2 deviation between two images over the grid
/// nodes inside the ROI only.
pub fn error_metrics(
    img: &Image,
    reference: &Image,
    geom: &AcquisitionGeometry,
) -> Result<(f64, f64)> {
    if img.grid != reference.grid {
        return Err(Error::Config("image grids differ".into()));
    }
    let mut max_abs = 0.0f64;
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    for iy in 0..img.grid.n {
        for ix in 0..img.grid.n {
            if !geom.contains(img.grid.node(iy, ix)) {
                continue;
            }
            let d = img.at(iy, ix) - reference.at(iy, ix);
            max_abs = max_abs.max(d.abs());
            diff2 += d * d;
            ref2 += reference.at(iy, ix) * reference.at(iy, ix);
        }
    }
    let rel_l2 = if ref2 == 0.0 {
        if diff2 == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (diff2 / ref2).sqrt()
    };
    Ok((max_abs, rel_l2))
}
