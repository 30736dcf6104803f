//! Layer-potential densities that make `W_J + W_Y` approximate the plane
//! wave `exp(-i xi . x)` on the ROI: the exact Fourier-Bessel series for the
//! full-circle arc, and the SVD-regularized construction for open arcs.

use crate::error::{Error, Result};
use crate::geometry::{dist, AcquisitionGeometry, BoundaryPoint};
use crate::grid::GridSpec;
use crate::specfun::{bessel_j0, bessel_j1, bessel_y0, bessel_y1, bessel_jn_all, bessel_yn_all};
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

/// Relative singular-value floor; triples below it are numerical noise.
const SIGMA_RELATIVE_FLOOR: f64 = 1e-13;

/// Series truncation order for frequency `lambda_r = lambda * R`: past the
/// transition region `n ~ lambda_r` the terms collapse super-exponentially.
pub fn series_cutoff(lambda_r: f64) -> usize {
    (lambda_r + 10.0 * lambda_r.cbrt() + 20.0).ceil() as usize
}

/// `N(lambda) = sqrt( sum_{n >= 0} 1 / |H^(1)_n(lambda R_gamma)|^2 )`, the
/// norm budget of the exact full-circle density pair (one term per distinct
/// order; this is the normalization with `N(lambda) ~ sqrt(2) lambda` for
/// large `lambda R_gamma`). Series truncated once a term drops below `1e-16`
/// of the partial sum.
pub fn norm_threshold(lambda: f64, r_arc: f64) -> Result<f64> {
    if lambda <= 0.0 || r_arc <= 0.0 {
        return Err(Error::domain(
            "norm_threshold",
            format!("need lambda > 0 and R_gamma > 0, got {lambda}, {r_arc}"),
        ));
    }
    let x = lambda * r_arc;
    let nmax = series_cutoff(x) + 40;
    let j = bessel_jn_all(nmax, x);
    let y = bessel_yn_all(nmax, x);
    let mut sum = 0.0;
    for n in 0..=nmax {
        let term = 1.0 / (j[n] * j[n] + y[n] * y[n]);
        sum += term;
        if term < 1e-16 * sum {
            break;
        }
    }
    Ok(sum.sqrt())
}

/// Norm of a density pair in the convention matched to [`norm_threshold`]:
/// the weighted L2 norm over the arc rescaled by `sqrt(pi R_gamma)`, so that
/// for the exact full-circle pair `norm^2 = N^2(lambda) - 1/(2 |H_0|^2)`,
/// i.e. the exact pair sits just below the threshold base `N(lambda)` and a
/// budget `K > 1` grants real headroom for open-arc solutions.
pub fn pair_norm_scaled(
    rho_j: &[Complex64],
    rho_y: &[Complex64],
    detectors: &[BoundaryPoint],
    r_arc: f64,
) -> f64 {
    let l2: f64 = rho_j
        .iter()
        .zip(rho_y)
        .zip(detectors)
        .map(|((a, b), p)| (a.norm_sqr() + b.norm_sqr()) * p.arclength_weight)
        .sum();
    (std::f64::consts::PI * r_arc * l2).sqrt()
}

/// Exact full-circle density pair targeting `exp(-i xi . x)`, sampled at the
/// detector points. The classical series (Jacobi-Anger plus the addition
/// theorem) targets `exp(+i xi . x)` with per-order coefficients
/// `i^|n| J_|n| / |H_|n||^2`; the conjugate series is returned here.
pub fn fullcircle_densities(
    lambda: f64,
    theta_xi: f64,
    geom: &AcquisitionGeometry,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if !geom.is_full_circle_arc() {
        return Err(Error::Geometry(
            "exact-series densities require a full-circle arc".into(),
        ));
    }
    if lambda <= 0.0 {
        return Err(Error::domain("fullcircle_densities", "lambda must be > 0"));
    }
    let x = lambda * geom.r_arc;
    // cap the series at the detector sampling Nyquist: higher angular modes
    // alias on the detector grid, while inside the ROI (radius < R_gamma)
    // they are evanescent and contribute nothing
    let nmax = series_cutoff(x).min((geom.n_detectors - 1) / 2);
    let j = bessel_jn_all(nmax, x);
    let y = bessel_yn_all(nmax, x);
    let habs2: Vec<f64> = (0..=nmax).map(|n| j[n] * j[n] + y[n] * y[n]).collect();

    let scale = 1.0 / (2.0 * std::f64::consts::PI * geom.r_arc);
    let detectors = geom.detector_points();
    let mut rho_j = Vec::with_capacity(detectors.len());
    let mut rho_y = Vec::with_capacity(detectors.len());
    for det in &detectors {
        let theta_z = det.position[1].atan2(det.position[0]);
        let phi = theta_z - theta_xi;
        // n = 0 term plus paired +-n terms, which share the coefficient
        // (-i)^|n| and combine to 2 cos(n phi); conjugation of the +xi-target
        // series is already folded in as the (-i)^n power
        let mut acc_j = Complex64::new(j[0] / habs2[0], 0.0);
        let mut acc_y = Complex64::new(y[0] / habs2[0], 0.0);
        let minus_i_pow = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        for n in 1..=nmax {
            let c = minus_i_pow[n % 4] * (2.0 * (n as f64 * phi).cos());
            acc_j += j[n] / habs2[n] * c;
            acc_y += y[n] / habs2[n] * c;
        }
        rho_j.push(scale * acc_j);
        rho_y.push(scale * acc_y);
    }
    Ok((rho_j, rho_y))
}

/// Discretized trace operator for one frequency.
///
/// Maps density pairs sampled at detector points to (Dirichlet,
/// `lambda^{-1}`-scaled Neumann) trace pairs at collocation points. The
/// stored matrix carries `sqrt(weight)` row and column scalings so that its
/// plain SVD is the SVD of the operator between the weighted L2 spaces.
pub struct PlaneWaveOperator {
    pub lambda: f64,
    pub detectors: Vec<BoundaryPoint>,
    pub collocation: Vec<BoundaryPoint>,
    /// `B = V^{1/2} K W^{1/2}`, size `2 n_collocation x 2 n_detectors`.
    pub scaled: Mat<f64>,
}

/// Unscaled kernel block entries: value of the trace of the unit-density
/// column kernel. Row block 0 = Dirichlet, 1 = scaled Neumann; column block
/// 0 = J0 kernel, 1 = Y0 kernel.
fn kernel_entry(lambda: f64, col: &BoundaryPoint, det: &BoundaryPoint, row_block: usize, col_block: usize) -> f64 {
    let r = dist(col.position, det.position);
    let t = lambda * r;
    match (row_block, col_block) {
        (0, 0) => bessel_j0(t),
        (0, 1) => bessel_y0(t),
        _ => {
            // (1/lambda) d/dn Z0(lambda|z - x|) = -Z1(lambda r) (x-z).n / r
            let dir = ((col.position[0] - det.position[0]) * col.outward_normal[0]
                + (col.position[1] - det.position[1]) * col.outward_normal[1])
                / r;
            let z1 = if col_block == 0 { bessel_j1(t) } else { bessel_y1(t) };
            -z1 * dir
        }
    }
}

pub fn assemble_operator(geom: &AcquisitionGeometry, lambda: f64) -> Result<PlaneWaveOperator> {
    if lambda <= 0.0 {
        return Err(Error::domain("assemble_operator", "lambda must be > 0"));
    }
    let detectors = geom.detector_points();
    let collocation = geom.boundary_collocation();
    let nd = detectors.len();
    let nc = collocation.len();
    for c in &collocation {
        for d in &detectors {
            if dist(c.position, d.position) == 0.0 {
                return Err(Error::Geometry(
                    "collocation point coincides with a detector".into(),
                ));
            }
        }
    }
    let sqrt_w: Vec<f64> = detectors.iter().map(|d| d.arclength_weight.sqrt()).collect();
    let sqrt_v: Vec<f64> = collocation
        .iter()
        .map(|c| c.arclength_weight.sqrt())
        .collect();
    let scaled = Mat::from_fn(2 * nc, 2 * nd, |row, colm| {
        let (rb, c) = (row / nc, row % nc);
        let (cb, k) = (colm / nd, colm % nd);
        sqrt_v[c] * kernel_entry(lambda, &collocation[c], &detectors[k], rb, cb) * sqrt_w[k]
    });
    Ok(PlaneWaveOperator {
        lambda,
        detectors,
        collocation,
        scaled,
    })
}

impl PlaneWaveOperator {
    pub fn n_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn n_collocation(&self) -> usize {
        self.collocation.len()
    }

    /// Entry of the plain discretization of the operator (kernel times
    /// detector quadrature weight), without the SVD scalings.
    pub fn entry_unscaled(&self, row: usize, col: usize) -> f64 {
        let nc = self.n_collocation();
        let nd = self.n_detectors();
        let c = row % nc;
        let k = col % nd;
        self.scaled[(row, col)] / self.collocation[c].arclength_weight.sqrt()
            * self.detectors[k].arclength_weight.sqrt()
    }

    /// Apply the operator to a density pair sampled at the detectors,
    /// producing the (Dirichlet, scaled-Neumann) trace pair at the
    /// collocation points.
    pub fn apply(&self, rho_j: &[Complex64], rho_y: &[Complex64]) -> Vec<Complex64> {
        let nc = self.n_collocation();
        let nd = self.n_detectors();
        let mut out = vec![Complex64::default(); 2 * nc];
        for (row, o) in out.iter_mut().enumerate() {
            let c = row % nc;
            let sv = self.collocation[c].arclength_weight.sqrt();
            let mut acc = Complex64::default();
            for k in 0..nd {
                let sw = self.detectors[k].arclength_weight.sqrt();
                acc += self.scaled[(row, k)] / (sv * sw)
                    * self.detectors[k].arclength_weight
                    * rho_j[k];
                acc += self.scaled[(row, nd + k)] / (sv * sw)
                    * self.detectors[k].arclength_weight
                    * rho_y[k];
            }
            *o = acc;
        }
        out
    }

    /// Trace pair of the target plane wave `exp(-i xi . x)` at the
    /// collocation points: `(u, lambda^{-1} du/dn)`.
    pub fn plane_wave_trace(&self, theta_xi: f64) -> Vec<Complex64> {
        let nc = self.n_collocation();
        let (s, c) = theta_xi.sin_cos();
        let xi_dir = [c, s];
        let mut out = vec![Complex64::default(); 2 * nc];
        for (i, p) in self.collocation.iter().enumerate() {
            let phase = -self.lambda * (xi_dir[0] * p.position[0] + xi_dir[1] * p.position[1]);
            let u = Complex64::from_polar(1.0, phase);
            let dir_dot_n =
                xi_dir[0] * p.outward_normal[0] + xi_dir[1] * p.outward_normal[1];
            out[i] = u;
            // (1/lambda) d/dn exp(-i xi.x) = -i (xi.n)/lambda u
            out[nc + i] = Complex64::new(0.0, -dir_dot_n) * u;
        }
        out
    }
}

/// Densities for one `(lambda, theta)` node.
#[derive(Debug, Clone)]
pub struct ThetaDensities {
    pub rho_j: Vec<Complex64>,
    pub rho_y: Vec<Complex64>,
    /// Trace misfit `||A rho - u||_Upsilon`.
    pub residual: f64,
    /// Number of retained singular triples.
    pub jmax: usize,
}

/// Shared SVD of the trace operator for one frequency, reusable across all
/// propagation directions `theta`.
pub struct FrequencySolver {
    pub operator: PlaneWaveOperator,
    /// Left singular vectors scaled back to collocation values (`V^{-1/2} U~`
    /// columns stay orthonormal in the weighted product).
    u: Mat<f64>,
    v: Mat<f64>,
    sigma: Vec<f64>,
    pub threshold: f64,
    /// `2 pi R_gamma`, converting the weighted L2 pair norm to the
    /// [`norm_threshold`] convention.
    norm_scale: f64,
}

impl FrequencySolver {
    pub fn new(geom: &AcquisitionGeometry, lambda: f64, k_reg: f64) -> Result<Self> {
        if k_reg <= 1.0 {
            return Err(Error::Config(format!(
                "regularization constant K = {k_reg} must exceed 1"
            )));
        }
        let operator = assemble_operator(geom, lambda)?;
        let svd = operator.scaled.thin_svd();
        let rank = svd.s_diagonal().nrows();
        let sigma: Vec<f64> = (0..rank).map(|i| svd.s_diagonal()[i]).collect();
        debug_assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
        let threshold = k_reg * norm_threshold(lambda, geom.r_arc)?;
        Ok(Self {
            operator,
            u: svd.u().to_owned(),
            v: svd.v().to_owned(),
            sigma,
            threshold,
            norm_scale: std::f64::consts::PI * geom.r_arc,
        })
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// Entry `row` of the `j`-th left singular vector (weighted trace basis).
    pub fn left_vec(&self, row: usize, j: usize) -> f64 {
        self.u[(row, j)]
    }

    /// Regularized densities for one direction: partial sums of the SVD
    /// inverse accumulated in decreasing-sigma order, stopped at the largest
    /// count that keeps the weighted density norm strictly below the
    /// threshold `K N(lambda)`.
    pub fn densities_for(&self, theta_xi: f64) -> ThetaDensities {
        let nc = self.operator.n_collocation();
        let nd = self.operator.n_detectors();
        let trace = self.operator.plane_wave_trace(theta_xi);
        // weighted target: ubar = V^{1/2} u
        let ubar: Vec<Complex64> = trace
            .iter()
            .enumerate()
            .map(|(row, &t)| t * self.operator.collocation[row % nc].arclength_weight.sqrt())
            .collect();
        let target_norm2: f64 = ubar.iter().map(|z| z.norm_sqr()).sum();

        let sigma_floor = SIGMA_RELATIVE_FLOOR * self.sigma.first().copied().unwrap_or(0.0);
        let mut coeffs: Vec<Complex64> = Vec::new();
        let mut captured2 = 0.0;
        let mut norm2 = 0.0;
        let mut prev_residual = f64::INFINITY;
        for (j, &sigma) in self.sigma.iter().enumerate() {
            if sigma < sigma_floor {
                break;
            }
            // d_j = <ubar, u~_j> (left vectors are real)
            let mut d = Complex64::default();
            for row in 0..2 * nc {
                d += ubar[row] * self.u[(row, j)];
            }
            let c = d / sigma;
            if ((norm2 + c.norm_sqr()) * self.norm_scale).sqrt() >= self.threshold {
                break;
            }
            norm2 += c.norm_sqr();
            captured2 += d.norm_sqr();
            coeffs.push(c);
            let residual = (target_norm2 - captured2).max(0.0).sqrt();
            debug_assert!(residual <= prev_residual + 1e-9 * target_norm2.sqrt());
            prev_residual = residual;
        }
        let jmax = coeffs.len();
        let residual = (target_norm2 - captured2).max(0.0).sqrt();

        // rho = W^{-1/2} V c
        let mut stacked = vec![Complex64::default(); 2 * nd];
        for (row, s) in stacked.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (j, c) in coeffs.iter().enumerate() {
                acc += *c * self.v[(row, j)];
            }
            *s = acc / self.operator.detectors[row % nd].arclength_weight.sqrt();
        }
        let rho_y = stacked.split_off(nd);
        ThetaDensities {
            rho_j: stacked,
            rho_y,
            residual,
            jmax,
        }
    }
}

/// Precomputed, regularized densities on a polar frequency grid.
pub struct DensitySet {
    pub geometry: AcquisitionGeometry,
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub k_reg: f64,
    /// `rho_*[ (i * n_theta + j) * n_detectors + k ]`
    pub rho_j: Vec<Complex64>,
    pub rho_y: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub jmax: Vec<usize>,
}

impl DensitySet {
    pub fn n_detectors(&self) -> usize {
        self.geometry.n_detectors
    }

    pub fn node_index(&self, lambda_idx: usize, theta_idx: usize) -> usize {
        lambda_idx * self.thetas.len() + theta_idx
    }

    pub fn rho_at(&self, lambda_idx: usize, theta_idx: usize) -> (&[Complex64], &[Complex64]) {
        let nd = self.n_detectors();
        let base = self.node_index(lambda_idx, theta_idx) * nd;
        (&self.rho_j[base..base + nd], &self.rho_y[base..base + nd])
    }

    /// Norm of the density pair at one grid node, in the convention of
    /// [`norm_threshold`] (see [`pair_norm_scaled`]).
    pub fn pair_norm(&self, lambda_idx: usize, theta_idx: usize) -> f64 {
        let (rj, ry) = self.rho_at(lambda_idx, theta_idx);
        let detectors = self.geometry.detector_points();
        pair_norm_scaled(rj, ry, &detectors, self.geometry.r_arc)
    }

    /// Precompute densities for every `(lambda, theta)` node. Frequencies are
    /// processed concurrently; when the theta grid is uniform over `[0, 2pi)`
    /// with even count, only half the directions are solved and the rest
    /// follow by conjugation.
    pub fn precompute(
        geom: &AcquisitionGeometry,
        lambdas: &[f64],
        thetas: &[f64],
        k_reg: f64,
    ) -> Result<Self> {
        if lambdas.iter().any(|&l| l <= 0.0) {
            return Err(Error::Config("lambdas must be positive".into()));
        }
        let nd = geom.n_detectors;
        let nt = thetas.len();
        let halved = conjugate_halving_applies(thetas);

        let per_lambda: Vec<Result<(Vec<Complex64>, Vec<Complex64>, Vec<f64>, Vec<usize>)>> =
            lambdas
                .par_iter()
                .map(|&lambda| {
                    let solver = FrequencySolver::new(geom, lambda, k_reg)?;
                    let mut rho_j = vec![Complex64::default(); nt * nd];
                    let mut rho_y = vec![Complex64::default(); nt * nd];
                    let mut residuals = vec![0.0; nt];
                    let mut jmax = vec![0usize; nt];
                    let solve_count = if halved { nt / 2 } else { nt };
                    for j in 0..solve_count {
                        let d = solver.densities_for(thetas[j]);
                        rho_j[j * nd..(j + 1) * nd].copy_from_slice(&d.rho_j);
                        rho_y[j * nd..(j + 1) * nd].copy_from_slice(&d.rho_y);
                        residuals[j] = d.residual;
                        jmax[j] = d.jmax;
                        if halved {
                            let jj = j + nt / 2;
                            for k in 0..nd {
                                rho_j[jj * nd + k] = d.rho_j[k].conj();
                                rho_y[jj * nd + k] = d.rho_y[k].conj();
                            }
                            residuals[jj] = d.residual;
                            jmax[jj] = d.jmax;
                        }
                    }
                    Ok((rho_j, rho_y, residuals, jmax))
                })
                .collect();

        let mut rho_j = Vec::with_capacity(lambdas.len() * nt * nd);
        let mut rho_y = Vec::with_capacity(lambdas.len() * nt * nd);
        let mut residuals = Vec::with_capacity(lambdas.len() * nt);
        let mut jmax = Vec::with_capacity(lambdas.len() * nt);
        for item in per_lambda {
            let (rj, ry, res, jm) = item?;
            rho_j.extend(rj);
            rho_y.extend(ry);
            residuals.extend(res);
            jmax.extend(jm);
        }
        Ok(Self {
            geometry: geom.clone(),
            lambdas: lambdas.to_vec(),
            thetas: thetas.to_vec(),
            k_reg,
            rho_j,
            rho_y,
            residuals,
            jmax,
        })
    }
}

fn conjugate_halving_applies(thetas: &[f64]) -> bool {
    let nt = thetas.len();
    if nt < 2 || nt % 2 != 0 {
        return false;
    }
    let step = 2.0 * std::f64::consts::PI / nt as f64;
    thetas
        .iter()
        .enumerate()
        .all(|(j, &t)| (t - j as f64 * step).abs() <= 1e-12)
}

/// Default polar frequency grid for a reconstruction grid: radial nodes
/// `i * dlambda` up to the grid Nyquist frequency, 400 uniform angles.
pub fn default_polar_grid(grid: &GridSpec) -> (Vec<f64>, Vec<f64>) {
    let n_lambda = grid.n.div_ceil(2);
    let dlambda = grid.nyquist() / n_lambda as f64;
    let lambdas = (1..=n_lambda).map(|i| i as f64 * dlambda).collect();
    let n_theta = 400;
    let thetas = (0..n_theta)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64)
        .collect();
    (lambdas, thetas)
}

/// Evaluate `W_J + W_Y` by direct quadrature over the detector points and
/// compare with `exp(-i xi . x)` over the grid nodes inside the ROI. Returns
/// (max pointwise error, RMS error).
pub fn planewave_residual(
    geom: &AcquisitionGeometry,
    rho_j: &[Complex64],
    rho_y: &[Complex64],
    lambda: f64,
    theta_xi: f64,
    grid: &GridSpec,
) -> (f64, f64) {
    let detectors = geom.detector_points();
    let (s, c) = theta_xi.sin_cos();
    let xi = [lambda * c, lambda * s];
    let rows: Vec<(f64, f64, usize)> = (0..grid.n)
        .into_par_iter()
        .map(|iy| {
            let mut max_err = 0.0f64;
            let mut sum2 = 0.0;
            let mut count = 0usize;
            for ix in 0..grid.n {
                let x = grid.node(iy, ix);
                if !geom.contains(x) {
                    continue;
                }
                let mut w = Complex64::default();
                for (det, (rj, ry)) in detectors.iter().zip(rho_j.iter().zip(ry_iter(rho_y))) {
                    let t = lambda * dist(det.position, x);
                    w += (bessel_j0(t) * rj + bessel_y0(t) * ry) * det.arclength_weight;
                }
                let target = Complex64::from_polar(1.0, -(xi[0] * x[0] + xi[1] * x[1]));
                let err = (w - target).norm();
                max_err = max_err.max(err);
                sum2 += err * err;
                count += 1;
            }
            (max_err, sum2, count)
        })
        .collect();
    let max_err = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let sum2: f64 = rows.iter().map(|r| r.1).sum();
    let count: usize = rows.iter().map(|r| r.2).sum();
    let rms = if count == 0 { 0.0 } else { (sum2 / count as f64).sqrt() };
    (max_err, rms)
}

fn ry_iter(rho_y: &[Complex64]) -> impl Iterator<Item = &Complex64> {
    rho_y.iter()
}
