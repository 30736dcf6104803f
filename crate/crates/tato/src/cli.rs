//! Command implementations behind the `tato` binary: precompute, simulate,
//! reconstruct, planewave-check, phantom-render, and compare.

use crate::config::RunConfig;
use crate::densities::{fullcircle_densities, planewave_residual, series_cutoff, DensitySet};
use crate::error::{Error, Result};
use crate::forward::{add_noise, default_radial_sampling, simulate};
use crate::io;
use crate::spectral::{
    apply_lowpass, error_metrics, fbp, fourier_coefficients, spectrum_to_sinogram,
};
use std::path::Path;
use std::time::Instant;

/// Solve (or evaluate in closed form) the densities on the configured polar
/// grid, report residual statistics, and write the cache file.
pub fn cmd_precompute(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let geom = cfg.geometry()?;
    let (lambdas, thetas) = cfg.polar_grid()?;
    let path = cfg.cache_path()?;
    let start = Instant::now();
    let set = if cfg.exact_series {
        if !geom.is_full_circle_arc() {
            return Err(Error::Config(
                "exact_series requires a closed-circle acquisition arc".into(),
            ));
        }
        let nd = geom.n_detectors;
        let nt = thetas.len();
        let mut rho_j = Vec::with_capacity(lambdas.len() * nt * nd);
        let mut rho_y = Vec::with_capacity(lambdas.len() * nt * nd);
        let mut jmax = Vec::with_capacity(lambdas.len() * nt);
        for &lambda in &lambdas {
            let cutoff = series_cutoff(lambda * geom.r_arc);
            for &theta in &thetas {
                let (rj, ry) = fullcircle_densities(lambda, theta, &geom)?;
                rho_j.extend(rj);
                rho_y.extend(ry);
                jmax.push(cutoff);
            }
        }
        DensitySet {
            geometry: geom.clone(),
            lambdas: lambdas.clone(),
            thetas: thetas.clone(),
            k_reg: cfg.k_reg,
            residuals: vec![0.0; lambdas.len() * thetas.len()],
            rho_j,
            rho_y,
            jmax,
        }
    } else {
        DensitySet::precompute(&geom, &lambdas, &thetas, cfg.k_reg)?
    };
    let nt = thetas.len();
    for (i, &lambda) in set.lambdas.iter().enumerate() {
        let res = &set.residuals[i * nt..(i + 1) * nt];
        let max = res.iter().cloned().fold(0.0, f64::max);
        let mean = res.iter().sum::<f64>() / nt as f64;
        let jm = set.jmax[i * nt..(i + 1) * nt].iter().max().copied().unwrap_or(0);
        println!("lambda {lambda:10.4}  residual max {max:.3e}  mean {mean:.3e}  jmax {jm}");
    }
    print_jmax_histogram(&set.jmax);
    io::write_density_cache(path, &set)?;
    println!(
        "wrote cache {} ({} nodes, {} detectors) in {:.1} s",
        path.display(),
        set.lambdas.len() * nt,
        geom.n_detectors,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn print_jmax_histogram(jmax: &[usize]) {
    let max = jmax.iter().max().copied().unwrap_or(0);
    let n_bins = 8usize;
    let width = (max / n_bins).max(1);
    let mut bins = vec![0usize; max / width + 1];
    for &j in jmax {
        bins[j / width] += 1;
    }
    println!("truncation-rank histogram (bin width {width}):");
    for (b, count) in bins.iter().enumerate() {
        if *count > 0 {
            println!("  [{:5}, {:5})  {count}", b * width, (b + 1) * width);
        }
    }
}

/// Simulate circular-mean projections of the configured phantom and write
/// them, with the noise level and seed recorded in the header.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let geom = cfg.geometry()?;
    let path = cfg.projections_path()?;
    let phantom = cfg.phantom.build();
    let (n_radii, r_step) = default_radial_sampling(&geom, cfg.grid_n, cfg.cap_radii);
    let mut proj = simulate(&phantom, &geom, n_radii, r_step, cfg.quad_order)?;
    if cfg.noise_level > 0.0 {
        proj = add_noise(&proj, cfg.noise_level, cfg.seed)?;
    }
    io::write_projections(
        path,
        &proj,
        io::ProjectionsMeta {
            noise_level: cfg.noise_level,
            seed: cfg.seed,
        },
    )?;
    println!(
        "wrote projections {} ({} detectors x {} radii, noise {})",
        path.display(),
        geom.n_detectors,
        n_radii,
        cfg.noise_level
    );
    Ok(())
}

/// Reconstruct an image from a projections file and a density cache sharing
/// the same geometry; writes the raw image, a PGM preview, and optionally the
/// intermediate sinogram, and reports errors against a reference image.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let set = io::read_density_cache(cfg.cache_path()?)?;
    let (proj, _meta) = io::read_projections(cfg.projections_path()?)?;
    if proj.geometry != set.geometry {
        return Err(Error::GeometryHashMismatch {
            expected: io::geometry_hash(&set.geometry),
            found: io::geometry_hash(&proj.geometry),
        });
    }
    let grid = cfg.grid()?;
    let start = Instant::now();
    let spec = fourier_coefficients(&proj, &set)?;
    let spec = apply_lowpass(&spec, cfg.filter);
    let sino = spectrum_to_sinogram(&spec)?;
    if let Some(sino_path) = &cfg.sinogram {
        io::write_sinogram(sino_path, &sino, &set.geometry)?;
        println!("wrote sinogram {}", sino_path.display());
    }
    let img = fbp(&sino, grid)?;
    println!("reconstruction took {:.3} s", start.elapsed().as_secs_f64());
    let image_path = cfg.image_path()?;
    io::write_image(image_path, &img, &set.geometry)?;
    write_preview(image_path, &img)?;
    println!("wrote image {}", image_path.display());
    if let Some(ref_path) = &cfg.reference {
        let (reference, _) = io::read_image(ref_path)?;
        let (max_err, rel_l2) = error_metrics(&img, &reference, &set.geometry)?;
        println!("error vs {}: max {max_err:.4e}  rel L2 {rel_l2:.4e}", ref_path.display());
    }
    Ok(())
}

fn write_preview(image_path: &Path, img: &crate::grid::Image) -> Result<()> {
    let mut pgm = image_path.as_os_str().to_os_string();
    pgm.push(".pgm");
    io::write_pgm_preview(Path::new(&pgm), img)
}

/// Evaluate the plane-wave residual of the cached densities at the grid node
/// nearest to the requested `(lambda, theta)`.
pub fn cmd_planewave_check(cfg: &RunConfig, lambda: f64, theta: f64) -> Result<()> {
    cfg.validate()?;
    let set = io::read_density_cache(cfg.cache_path()?)?;
    let grid = cfg.grid()?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let theta = theta.rem_euclid(two_pi);
    let i = set
        .lambdas
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Config("empty cache".into()))?;
    let angdist = |t: f64| {
        let d = (t - theta).rem_euclid(two_pi);
        d.min(two_pi - d)
    };
    let j = set
        .thetas
        .iter()
        .enumerate()
        .min_by(|a, b| angdist(*a.1).total_cmp(&angdist(*b.1)))
        .map(|(j, _)| j)
        .ok_or_else(|| Error::Config("empty cache".into()))?;
    let (li, tj) = (set.lambdas[i], set.thetas[j]);
    if (li - lambda).abs() > 1e-9 * li.max(1.0) || angdist(tj) > 1e-9 {
        eprintln!(
            "warning: ({lambda}, {theta}) is not a cached node; \
             reporting the nearest node ({li}, {tj})"
        );
    }
    let (rho_j, rho_y) = set.rho_at(i, j);
    let (max_err, rms) = planewave_residual(&set.geometry, rho_j, rho_y, li, tj, &grid);
    println!("plane wave lambda {li:.6} theta {tj:.6}: max residual {max_err:.4e}  rms {rms:.4e}");
    Ok(())
}

/// Render the configured phantom on the reconstruction grid.
pub fn cmd_phantom_render(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let geom = cfg.geometry()?;
    let grid = cfg.grid()?;
    let img = cfg.phantom.build().render(grid);
    let path = cfg.image_path()?;
    io::write_image(path, &img, &geom)?;
    write_preview(path, &img)?;
    println!("wrote phantom image {}", path.display());
    Ok(())
}

/// Compare two image files on the shared ROI.
pub fn cmd_compare(a: &Path, b: &Path) -> Result<()> {
    let (img_a, geom_a) = io::read_image(a)?;
    let (img_b, geom_b) = io::read_image(b)?;
    if geom_a != geom_b {
        return Err(Error::GeometryHashMismatch {
            expected: io::geometry_hash(&geom_a),
            found: io::geometry_hash(&geom_b),
        });
    }
    let (max_err, rel_l2) = error_metrics(&img_a, &img_b, &geom_a)?;
    println!("max {max_err:.6e}  rel L2 {rel_l2:.6e}");
    Ok(())
}
