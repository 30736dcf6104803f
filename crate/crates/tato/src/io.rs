//! Bit-exact binary file formats for projections, density caches, sinograms,
//! and images, plus a PGM preview writer.
//!
//! Every file starts with the magic string "TATO", a format version, a kind
//! byte, the 64-bit FNV-1a hash of the canonical geometry serialization, and
//! the geometry fields themselves. All payloads are little-endian IEEE-754
//! doubles (complex values as (re, im) pairs), row-major, preceded by
//! explicit dimension fields. Writes go to a temporary file in the target
//! directory and are renamed into place.

use crate::densities::DensitySet;
use crate::error::{Error, Result};
use crate::forward::Projections;
use crate::geometry::AcquisitionGeometry;
use crate::grid::{GridSpec, Image};
use crate::spectral::Sinogram;
use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"TATO";
pub const FORMAT_VERSION: u16 = 1;

/// File kind discriminator stored after the version.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Projections = 1,
    DensityCache = 2,
    Image = 3,
    Sinogram = 4,
}

impl FileKind {
    fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(FileKind::Projections),
            2 => Some(FileKind::DensityCache),
            3 => Some(FileKind::Image),
            4 => Some(FileKind::Sinogram),
            _ => None,
        }
    }
}

/// Canonical 48-byte serialization of a geometry: four coordinates as f64
/// bit patterns and two point counts as u64, all little-endian.
pub fn geometry_bytes(geom: &AcquisitionGeometry) -> [u8; 48] {
    let mut out = [0u8; 48];
    let fields = [
        geom.r_roi.to_bits(),
        geom.r_arc.to_bits(),
        geom.x_right.to_bits(),
        geom.z_right.to_bits(),
        geom.n_detectors as u64,
        geom.n_collocation as u64,
    ];
    for (i, f) in fields.iter().enumerate() {
        out[8 * i..8 * (i + 1)].copy_from_slice(&f.to_le_bytes());
    }
    out
}

/// 64-bit FNV-1a over the canonical geometry serialization.
pub fn geometry_hash(geom: &AcquisitionGeometry) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in &geometry_bytes(geom) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

struct Writer<'a> {
    path: &'a Path,
    inner: BufWriter<File>,
}

impl<'a> Writer<'a> {
    fn bytes(&mut self, data: &[u8]) -> Result<()> {
        self.inner.write_all(data).map_err(|e| io_err(self.path, e))
    }

    fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    fn u16(&mut self, v: u16) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64_slice(&mut self, vs: &[f64]) -> Result<()> {
        for &v in vs {
            self.f64(v)?;
        }
        Ok(())
    }

    fn complex_slice(&mut self, vs: &[Complex64]) -> Result<()> {
        for v in vs {
            self.f64(v.re)?;
            self.f64(v.im)?;
        }
        Ok(())
    }

    fn header(&mut self, kind: FileKind, geom: &AcquisitionGeometry) -> Result<()> {
        self.bytes(MAGIC)?;
        self.u16(FORMAT_VERSION)?;
        self.u8(kind as u8)?;
        self.u64(geometry_hash(geom))?;
        let gb = geometry_bytes(geom);
        self.bytes(&gb)
    }
}

/// Write a file atomically: the payload goes to a temporary sibling which is
/// renamed over the target only after a successful flush.
fn atomic_write(path: &Path, body: impl FnOnce(&mut Writer) -> Result<()>) -> Result<()> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp: PathBuf = path.with_file_name(tmp_name);
    let file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    let mut w = Writer {
        path: &tmp,
        inner: BufWriter::new(file),
    };
    body(&mut w)?;
    w.inner.flush().map_err(|e| io_err(&tmp, e))?;
    drop(w);
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

struct Reader<'a> {
    path: &'a Path,
    inner: BufReader<File>,
}

impl<'a> Reader<'a> {
    fn open(path: &'a Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        Ok(Self {
            path,
            inner: BufReader::new(file),
        })
    }

    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| io_err(self.path, e))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| format_err(self.path, format!("count {v} overflows")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn complex_vec(&mut self, n: usize) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let re = self.f64()?;
            let im = self.f64()?;
            out.push(Complex64::new(re, im));
        }
        Ok(out)
    }

    /// Parse and validate the common header; returns the geometry.
    fn header(&mut self, expected: FileKind) -> Result<AcquisitionGeometry> {
        let magic = self.bytes::<4>()?;
        if &magic != MAGIC {
            return Err(format_err(self.path, "bad magic (not a TATO file)"));
        }
        let version = self.u16()?;
        if version != FORMAT_VERSION {
            return Err(format_err(
                self.path,
                format!("unsupported format version {version} (expected {FORMAT_VERSION})"),
            ));
        }
        let kind = self.u8()?;
        match FileKind::from_u8(kind) {
            Some(k) if k == expected => {}
            Some(k) => {
                return Err(format_err(
                    self.path,
                    format!("file kind {k:?} where {expected:?} was expected"),
                ))
            }
            None => return Err(format_err(self.path, format!("unknown file kind {kind}"))),
        }
        let stored_hash = self.u64()?;
        let r_roi = self.f64()?;
        let r_arc = self.f64()?;
        let x_right = self.f64()?;
        let z_right = self.f64()?;
        let n_detectors = self.usize()?;
        let n_collocation = self.usize()?;
        let geom = AcquisitionGeometry::with_collocation(
            r_roi,
            r_arc,
            x_right,
            z_right,
            n_detectors,
            n_collocation,
        )?;
        let hash = geometry_hash(&geom);
        if hash != stored_hash {
            return Err(format_err(
                self.path,
                format!("corrupt header: geometry hash {stored_hash:#018x} != {hash:#018x}"),
            ));
        }
        Ok(geom)
    }
}

/// Projection header metadata beyond the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionsMeta {
    pub noise_level: f64,
    pub seed: u64,
}

pub fn write_projections(path: &Path, proj: &Projections, meta: ProjectionsMeta) -> Result<()> {
    atomic_write(path, |w| {
        w.header(FileKind::Projections, &proj.geometry)?;
        w.f64(meta.noise_level)?;
        w.u64(meta.seed)?;
        w.u64(proj.n_radii() as u64)?;
        w.f64(proj.r_step())?;
        w.f64_slice(&proj.values)
    })
}

pub fn read_projections(path: &Path) -> Result<(Projections, ProjectionsMeta)> {
    let mut r = Reader::open(path)?;
    let geometry = r.header(FileKind::Projections)?;
    let noise_level = r.f64()?;
    let seed = r.u64()?;
    let n_radii = r.usize()?;
    let r_step = r.f64()?;
    if !(r_step > 0.0) || n_radii == 0 {
        return Err(format_err(path, "non-positive radial sampling"));
    }
    let radii = (1..=n_radii).map(|m| m as f64 * r_step).collect();
    let values = r.f64_vec(geometry.n_detectors * n_radii)?;
    Ok((
        Projections {
            geometry,
            radii,
            values,
        },
        ProjectionsMeta { noise_level, seed },
    ))
}

pub fn write_density_cache(path: &Path, set: &DensitySet) -> Result<()> {
    atomic_write(path, |w| {
        w.header(FileKind::DensityCache, &set.geometry)?;
        w.f64(set.k_reg)?;
        w.u64(set.lambdas.len() as u64)?;
        w.u64(set.thetas.len() as u64)?;
        w.f64_slice(&set.lambdas)?;
        w.f64_slice(&set.thetas)?;
        w.f64_slice(&set.residuals)?;
        for &j in &set.jmax {
            w.u64(j as u64)?;
        }
        w.complex_slice(&set.rho_j)?;
        w.complex_slice(&set.rho_y)
    })
}

pub fn read_density_cache(path: &Path) -> Result<DensitySet> {
    let mut r = Reader::open(path)?;
    let geometry = r.header(FileKind::DensityCache)?;
    let k_reg = r.f64()?;
    let nl = r.usize()?;
    let nt = r.usize()?;
    let lambdas = r.f64_vec(nl)?;
    let thetas = r.f64_vec(nt)?;
    let residuals = r.f64_vec(nl * nt)?;
    let mut jmax = Vec::with_capacity(nl * nt);
    for _ in 0..nl * nt {
        jmax.push(r.usize()?);
    }
    let n = nl * nt * geometry.n_detectors;
    let rho_j = r.complex_vec(n)?;
    let rho_y = r.complex_vec(n)?;
    Ok(DensitySet {
        geometry,
        lambdas,
        thetas,
        k_reg,
        rho_j,
        rho_y,
        residuals,
        jmax,
    })
}

pub fn write_image(path: &Path, img: &Image, geom: &AcquisitionGeometry) -> Result<()> {
    atomic_write(path, |w| {
        w.header(FileKind::Image, geom)?;
        w.f64(img.grid.half_width)?;
        w.u64(img.grid.n as u64)?;
        w.f64_slice(&img.values)
    })
}

pub fn read_image(path: &Path) -> Result<(Image, AcquisitionGeometry)> {
    let mut r = Reader::open(path)?;
    let geom = r.header(FileKind::Image)?;
    let half_width = r.f64()?;
    let n = r.usize()?;
    let grid = GridSpec::new(half_width, n)?;
    let values = r.f64_vec(n * n)?;
    Ok((Image { grid, values }, geom))
}

pub fn write_sinogram(path: &Path, sino: &Sinogram, geom: &AcquisitionGeometry) -> Result<()> {
    atomic_write(path, |w| {
        w.header(FileKind::Sinogram, geom)?;
        w.u64(sino.angles.len() as u64)?;
        w.u64(sino.offsets.len() as u64)?;
        w.f64_slice(&sino.angles)?;
        w.f64_slice(&sino.offsets)?;
        w.f64_slice(&sino.values)
    })
}

pub fn read_sinogram(path: &Path) -> Result<(Sinogram, AcquisitionGeometry)> {
    let mut r = Reader::open(path)?;
    let geom = r.header(FileKind::Sinogram)?;
    let na = r.usize()?;
    let no = r.usize()?;
    let angles = r.f64_vec(na)?;
    let offsets = r.f64_vec(no)?;
    let values = r.f64_vec(na * no)?;
    Ok((
        Sinogram {
            angles,
            offsets,
            values,
        },
        geom,
    ))
}

/// 8-bit binary PGM preview, linearly windowed min -> 0, max -> 255, top row
/// at the largest y. The window is recorded in a `<path>.window.txt` sidecar.
pub fn write_pgm_preview(path: &Path, img: &Image) -> Result<()> {
    let min = img.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = img.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let n = img.grid.n;
    atomic_write(path, |w| {
        w.bytes(format!("P5\n{n} {n}\n255\n").as_bytes())?;
        let mut row = vec![0u8; n];
        for iy in (0..n).rev() {
            for (ix, px) in row.iter_mut().enumerate() {
                let v = img.at(iy, ix);
                *px = if span > 0.0 {
                    ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                };
            }
            w.bytes(&row)?;
        }
        Ok(())
    })?;
    let mut sidecar = path.as_os_str().to_os_string();
    sidecar.push(".window.txt");
    let sidecar = PathBuf::from(sidecar);
    atomic_write(&sidecar, |w| {
        w.bytes(format!("min={min:.17e}\nmax={max:.17e}\n").as_bytes())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{default_radial_sampling, simulate};
    use crate::phantom::{Phantom, SmoothPhantom};

    fn tmp_path(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("tato-io-test-{}-{name}", std::process::id()));
        p
    }

    fn sample_geometry() -> AcquisitionGeometry {
        AcquisitionGeometry::reference_geometry_1(20)
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = sample_geometry();
        let b = AcquisitionGeometry::reference_geometry_1(21);
        assert_eq!(geometry_hash(&a), geometry_hash(&a));
        assert_ne!(geometry_hash(&a), geometry_hash(&b));
        let c = AcquisitionGeometry::new(1.0, 1.3, 1.0, 0.99, 20).unwrap();
        assert_ne!(geometry_hash(&a), geometry_hash(&c));
    }

    #[test]
    fn projections_roundtrip_bitwise() {
        let geom = sample_geometry();
        let (nr, dr) = default_radial_sampling(&geom, 17, false);
        let phantom = Phantom::Smooth(SmoothPhantom::two_bump());
        let proj = simulate(&phantom, &geom, nr, dr, 32).unwrap();
        let meta = ProjectionsMeta {
            noise_level: 0.15,
            seed: 42,
        };
        let path = tmp_path("proj.bin");
        write_projections(&path, &proj, meta).unwrap();
        let (back, meta_back) = read_projections(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(meta_back, meta);
        assert_eq!(back.geometry, proj.geometry);
        assert_eq!(back.values, proj.values);
        for (a, b) in back.radii.iter().zip(&proj.radii) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn density_cache_roundtrip_bitwise() {
        let geom = AcquisitionGeometry::reference_geometry_1(12);
        let lambdas = [2.0, 4.0];
        let thetas: Vec<f64> = (0..4)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / 4.0)
            .collect();
        let set = DensitySet::precompute(&geom, &lambdas, &thetas, 1.5).unwrap();
        let path = tmp_path("cache.bin");
        write_density_cache(&path, &set).unwrap();
        let back = read_density_cache(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(back.geometry, set.geometry);
        assert_eq!(back.k_reg, set.k_reg);
        assert_eq!(back.lambdas, set.lambdas);
        assert_eq!(back.thetas, set.thetas);
        assert_eq!(back.residuals, set.residuals);
        assert_eq!(back.jmax, set.jmax);
        assert_eq!(back.rho_j, set.rho_j);
        assert_eq!(back.rho_y, set.rho_y);
    }

    #[test]
    fn image_and_sinogram_roundtrip() {
        let geom = sample_geometry();
        let grid = GridSpec::new(1.0, 17).unwrap();
        let img = Image::from_fn(grid, |p| p[0] * 3.0 - p[1]);
        let path = tmp_path("img.bin");
        write_image(&path, &img, &geom).unwrap();
        let (back, geom_back) = read_image(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(back, img);
        assert_eq!(geom_back, geom);

        let sino = Sinogram {
            angles: vec![0.0, 1.0, 2.0],
            offsets: vec![-0.5, 0.0, 0.5, 1.0],
            values: (0..12).map(|i| i as f64 * 0.25).collect(),
        };
        let path = tmp_path("sino.bin");
        write_sinogram(&path, &sino, &geom).unwrap();
        let (back, _) = read_sinogram(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(back, sino);
    }

    #[test]
    fn rejects_bad_magic_version_and_kind() {
        let geom = sample_geometry();
        let grid = GridSpec::new(1.0, 3).unwrap();
        let img = Image::zeros(grid);
        let path = tmp_path("hdr.bin");
        write_image(&path, &img, &geom).unwrap();

        // wrong kind expectation
        assert!(matches!(
            read_projections(&path),
            Err(Error::Format { .. })
        ));

        // corrupt the magic
        let mut data = std::fs::read(&path).unwrap();
        data[0] = b'X';
        std::fs::write(&path, &data).unwrap();
        assert!(matches!(read_image(&path), Err(Error::Format { .. })));

        // bump the version
        data[0] = b'T';
        data[4] = 99;
        std::fs::write(&path, &data).unwrap();
        assert!(matches!(read_image(&path), Err(Error::Format { .. })));

        // corrupt the stored geometry hash
        data[4] = (FORMAT_VERSION & 0xff) as u8;
        data[7] ^= 0xff;
        std::fs::write(&path, &data).unwrap();
        assert!(matches!(read_image(&path), Err(Error::Format { .. })));

        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn writes_are_deterministic() {
        let geom = sample_geometry();
        let (nr, dr) = default_radial_sampling(&geom, 17, false);
        let phantom = Phantom::Smooth(SmoothPhantom::two_bump());
        let proj = simulate(&phantom, &geom, nr, dr, 32).unwrap();
        let meta = ProjectionsMeta {
            noise_level: 0.0,
            seed: 7,
        };
        let p1 = tmp_path("det1.bin");
        let p2 = tmp_path("det2.bin");
        write_projections(&p1, &proj, meta).unwrap();
        write_projections(&p2, &proj, meta).unwrap();
        let a = std::fs::read(&p1).unwrap();
        let b = std::fs::read(&p2).unwrap();
        std::fs::remove_file(&p1).unwrap();
        std::fs::remove_file(&p2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pgm_preview_and_sidecar() {
        let grid = GridSpec::new(1.0, 5).unwrap();
        let img = Image::from_fn(grid, |p| p[1]);
        let path = tmp_path("preview.pgm");
        write_pgm_preview(&path, &img).unwrap();
        let data = std::fs::read(&path).unwrap();
        let header = b"P5\n5 5\n255\n";
        assert_eq!(&data[..header.len()], header);
        let pixels = &data[header.len()..];
        assert_eq!(pixels.len(), 25);
        // top row is y = +1 (the maximum) -> 255; bottom row -> 0
        assert!(pixels[..5].iter().all(|&p| p == 255));
        assert!(pixels[20..].iter().all(|&p| p == 0));
        let sidecar = {
            let mut s = path.as_os_str().to_os_string();
            s.push(".window.txt");
            PathBuf::from(s)
        };
        let text = std::fs::read_to_string(&sidecar).unwrap();
        assert!(text.contains("min=") && text.contains("max="));
        std::fs::remove_file(&path).unwrap();
        std::fs::remove_file(&sidecar).unwrap();
    }
}
