//! Run configuration: plain `key=value` text files plus command-line
//! overrides, aggregated into one validated struct.

use crate::densities::default_polar_grid;
use crate::error::{Error, Result};
use crate::geometry::AcquisitionGeometry;
use crate::grid::GridSpec;
use crate::phantom::{DiskPhantom, Phantom, SmoothPhantom};
use crate::spectral::FilterKind;
use std::path::{Path, PathBuf};

/// Named phantom selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    /// Identically zero.
    Zero,
    /// The two-bump smooth phantom.
    TwoBump,
    /// Six disks spread over the full-disk ROI.
    Disks,
    /// Disks confined to the left half-plane ROI.
    HalfDisks,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(PhantomKind::Zero),
            "two_bump" => Ok(PhantomKind::TwoBump),
            "disks" => Ok(PhantomKind::Disks),
            "half_disks" => Ok(PhantomKind::HalfDisks),
            other => Err(Error::Config(format!(
                "unknown phantom {other:?} (expected zero, two_bump, disks, or half_disks)"
            ))),
        }
    }
}

impl PhantomKind {
    pub fn build(self) -> Phantom {
        match self {
            PhantomKind::Zero => Phantom::Disks(DiskPhantom { disks: vec![] }),
            PhantomKind::TwoBump => Phantom::Smooth(SmoothPhantom::two_bump()),
            PhantomKind::Disks => Phantom::Disks(DiskPhantom::default_layout()),
            PhantomKind::HalfDisks => Phantom::Disks(DiskPhantom::half_disk_layout()),
        }
    }
}

/// All parameters of a run; defaults reproduce the open-arc unit-disk
/// geometry with 500 detectors and the 129-node grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub r_roi: f64,
    pub r_arc: f64,
    pub x_right: f64,
    pub z_right: f64,
    pub n_detectors: usize,
    /// Defaults to twice the detector count.
    pub n_collocation: Option<usize>,
    pub grid_n: usize,
    pub half_width: f64,
    pub n_theta: usize,
    pub k_reg: f64,
    /// Use the exact full-circle density series instead of the SVD solver;
    /// valid only for closed-circle geometries.
    pub exact_series: bool,
    pub filter: FilterKind,
    pub noise_level: f64,
    pub seed: u64,
    pub phantom: PhantomKind,
    /// Cap the radial sample count at 129 (the classic benchmark setting).
    pub cap_radii: bool,
    pub quad_order: usize,
    pub cache: Option<PathBuf>,
    pub projections: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub sinogram: Option<PathBuf>,
    /// Reference image file for error reporting after reconstruction.
    pub reference: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            r_roi: 1.0,
            r_arc: 1.3,
            x_right: 1.0,
            z_right: 1.0,
            n_detectors: 500,
            n_collocation: None,
            grid_n: 129,
            half_width: 1.0,
            n_theta: 400,
            k_reg: 1.5,
            exact_series: false,
            filter: FilterKind::None,
            noise_level: 0.0,
            seed: 0,
            phantom: PhantomKind::TwoBump,
            cap_radii: false,
            quad_order: 256,
            cache: None,
            projections: None,
            image: None,
            sinogram: None,
            reference: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value for {key}: {e}")))
}

impl RunConfig {
    /// Apply one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "r_roi" => self.r_roi = parse(key, value)?,
            "r_arc" => self.r_arc = parse(key, value)?,
            "x_right" => self.x_right = parse(key, value)?,
            "z_right" => self.z_right = parse(key, value)?,
            "n_detectors" => self.n_detectors = parse(key, value)?,
            "n_collocation" => self.n_collocation = Some(parse(key, value)?),
            "grid_n" => self.grid_n = parse(key, value)?,
            "half_width" => self.half_width = parse(key, value)?,
            "n_theta" => self.n_theta = parse(key, value)?,
            "k_reg" => self.k_reg = parse(key, value)?,
            "exact_series" => self.exact_series = parse(key, value)?,
            "filter" => self.filter = value.parse()?,
            "noise_level" => self.noise_level = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "phantom" => self.phantom = value.parse()?,
            "cap_radii" => self.cap_radii = parse(key, value)?,
            "quad_order" => self.quad_order = parse(key, value)?,
            "cache" => self.cache = Some(PathBuf::from(value)),
            "projections" => self.projections = Some(PathBuf::from(value)),
            "image" => self.image = Some(PathBuf::from(value)),
            "sinogram" => self.sinogram = Some(PathBuf::from(value)),
            "reference" => self.reference = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parse a plain-text config file: one `key=value` per line, `#` comments
    /// and blank lines ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_reg <= 1.0 {
            return Err(Error::Config(format!(
                "regularization budget K = {} must exceed 1",
                self.k_reg
            )));
        }
        if self.grid_n < 17 {
            return Err(Error::Config(format!(
                "grid_n = {} is below the minimum of 17",
                self.grid_n
            )));
        }
        if self.n_theta < 2 || self.n_theta % 2 != 0 {
            return Err(Error::Config(format!(
                "n_theta = {} must be even and at least 2",
                self.n_theta
            )));
        }
        if self.noise_level < 0.0 {
            return Err(Error::Config(format!(
                "noise_level = {} must be nonnegative",
                self.noise_level
            )));
        }
        self.geometry()?;
        self.grid()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<AcquisitionGeometry> {
        AcquisitionGeometry::with_collocation(
            self.r_roi,
            self.r_arc,
            self.x_right,
            self.z_right,
            self.n_detectors,
            self.n_collocation.unwrap_or(2 * self.n_detectors),
        )
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.half_width, self.grid_n)
    }

    /// Polar frequency grid: radial nodes from the reconstruction grid,
    /// `n_theta` uniform angles over `[0, 2pi)`.
    pub fn polar_grid(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let grid = self.grid()?;
        let (lambdas, _) = default_polar_grid(&grid);
        let thetas = (0..self.n_theta)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / self.n_theta as f64)
            .collect();
        Ok((lambdas, thetas))
    }

    fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("config is missing the {what} path")))
    }

    pub fn cache_path(&self) -> Result<&Path> {
        Self::require(&self.cache, "cache")
    }

    pub fn projections_path(&self) -> Result<&Path> {
        Self::require(&self.projections, "projections")
    }

    pub fn image_path(&self) -> Result<&Path> {
        Self::require(&self.image, "image")
    }
}
