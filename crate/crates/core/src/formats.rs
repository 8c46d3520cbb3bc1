//! On-disk documents: JSON state/matrix/record documents, CSV curves, the
//! mask PGM image with its JSON sidecar, and raw field dumps. Field names
//! are listed in `docs/FORMATS.md`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{GrayImage, GratingSpec, PhaseMask, SlitCoefficient, SlitGeometry, SlmWindow};
use crate::optics::{ComplexField, IntensityCurve, Plane};
use crate::state::{DensityMatrix, QuditState};
use crate::tomography::{MeasurementRecord, Projector, ProjectorLabel, RecordMode};
use crate::C64;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDoc {
    pub dimension: usize,
    /// `[re, im]` per slit.
    pub amplitudes: Vec<[f64; 2]>,
    pub digest: String,
}

impl StateDoc {
    pub fn from_state(state: &QuditState) -> Self {
        Self {
            dimension: state.dimension(),
            amplitudes: state.amplitudes().iter().map(|c| [c.re, c.im]).collect(),
            digest: state.digest(),
        }
    }

    pub fn to_state(&self) -> Result<QuditState> {
        if self.amplitudes.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: self.amplitudes.len() });
        }
        QuditState::from_amplitudes(self.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub dimension: usize,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

impl MatrixDoc {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let m = rho.entries();
        let d = rho.dimension();
        Self {
            dimension: d,
            real: (0..d).map(|r| (0..d).map(|c| m[(r, c)].re).collect()).collect(),
            imag: (0..d).map(|r| (0..d).map(|c| m[(r, c)].im).collect()).collect(),
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let d = self.dimension;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&self.real) || !shape_ok(&self.imag) {
            return Err(Error::Format(format!("matrix document is not {d}x{d}")));
        }
        DensityMatrix::new(nalgebra::DMatrix::from_fn(d, d, |r, c| C64::new(self.real[r][c], self.imag[r][c])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    /// `near:<slit>` or `far:<xi>`.
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordDoc {
    pub dimension: usize,
    /// `intensity` or `counts`.
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub total_counts: Option<u64>,
    pub entries: Vec<RecordEntry>,
}

impl RecordDoc {
    pub fn from_record(record: &MeasurementRecord) -> Self {
        let (mode, total_counts) = match record.mode() {
            RecordMode::Intensity => ("intensity", None),
            RecordMode::Counts { total } => ("counts", Some(total)),
        };
        Self {
            dimension: record.dimension(),
            mode: mode.into(),
            total_counts,
            entries: record
                .projectors()
                .iter()
                .zip(record.values())
                .map(|(p, v)| RecordEntry { label: p.label.to_string(), value: *v })
                .collect(),
        }
    }

    pub fn to_record(&self) -> Result<MeasurementRecord> {
        let mode = match (self.mode.as_str(), self.total_counts) {
            ("intensity", _) => RecordMode::Intensity,
            ("counts", Some(total)) => RecordMode::Counts { total },
            (m, _) => return Err(Error::Format(format!("unknown record mode `{m}`"))),
        };
        let projectors = self
            .entries
            .iter()
            .map(|e| Projector::new(e.label.parse::<ProjectorLabel>()?, self.dimension))
            .collect::<Result<Vec<_>>>()?;
        MeasurementRecord::new(projectors, self.entries.iter().map(|e| e.value).collect(), mode)
    }
}

/// Two-column CSV `position_um,intensity`.
pub fn write_curve_csv(path: &Path, curve: &IntensityCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["position_um", "intensity"])?;
    for (x, i) in curve.positions_um.iter().zip(&curve.intensity) {
        w.write_record([fmt_f64(*x), fmt_f64(*i)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<IntensityCurve> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["position_um", "intensity"] {
        return Err(Error::Format(format!("unexpected curve header in {}", path.display())));
    }
    let mut curve = IntensityCurve { positions_um: vec![], intensity: vec![] };
    for row in r.deserialize() {
        let (x, i): (f64, f64) = row?;
        curve.positions_um.push(x);
        curve.intensity.push(i);
    }
    Ok(curve)
}

/// CSV `slit,power`.
pub fn write_slit_powers_csv(path: &Path, powers: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["slit", "power"])?;
    for (l, p) in powers.iter().enumerate() {
        w.write_record([l.to_string(), fmt_f64(*p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Binary PGM (`P5`, maxval 255).
pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    if image.pixels.len() != image.width * image.height {
        return Err(Error::Format("pixel count does not match image size".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", image.width, image.height)?;
    w.write_all(&image.pixels)?;
    w.flush()?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let mut r = BufReader::new(File::open(path)?);
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("truncated PGM header".into()));
        }
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    if tokens[0] != "P5" || tokens.len() != 4 {
        return Err(Error::Format("not a binary PGM with a one-line-per-field header".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM header value `{s}`")));
    let (width, height, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    let mut pixels = vec![0u8; width * height];
    r.read_exact(&mut pixels)?;
    Ok(GrayImage { width, height, pixels })
}

/// Everything needed to interpret a mask image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSidecar {
    pub image: String,
    pub gray_levels: usize,
    pub geometry: SlitGeometry,
    pub grating: GratingSpec,
    pub window: SlmWindow,
    pub state_digest: String,
    pub background_phase: f64,
    pub depths: Vec<f64>,
    pub coefficients: Vec<SlitCoefficient>,
}

impl MaskSidecar {
    pub fn new(mask: &PhaseMask, image: &str, gray_levels: usize) -> Self {
        Self {
            image: image.into(),
            gray_levels,
            geometry: mask.geometry,
            grating: mask.grating,
            window: mask.window,
            state_digest: mask.state_digest.clone(),
            background_phase: mask.background_phase,
            depths: mask.depths.clone(),
            coefficients: mask.coefficients.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub rows: usize,
    pub cols: usize,
    pub pitch_um: f64,
    pub plane: String,
    pub wavelength_nm: f64,
    pub focal_mm: f64,
    /// Always `complex-f64-le-row-major`.
    pub layout: String,
    pub data: String,
}

const FIELD_LAYOUT: &str = "complex-f64-le-row-major";

/// Writes `<stem>.bin` (interleaved re/im, little endian) and `<stem>.json`.
pub fn write_field_dump(dir: &Path, stem: &str, field: &ComplexField) -> Result<PathBuf> {
    let data = format!("{stem}.bin");
    let mut w = BufWriter::new(File::create(dir.join(&data))?);
    for z in field.samples.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    let header = FieldHeader {
        rows: field.rows(),
        cols: field.cols(),
        pitch_um: field.pitch_um,
        plane: field.plane.name().into(),
        wavelength_nm: field.wavelength_nm,
        focal_mm: field.focal_mm,
        layout: FIELD_LAYOUT.into(),
        data,
    };
    let path = dir.join(format!("{stem}.json"));
    write_json(&path, &header)?;
    Ok(path)
}

pub fn read_field_dump(header_path: &Path) -> Result<ComplexField> {
    let header: FieldHeader = read_json(header_path)?;
    if header.layout != FIELD_LAYOUT {
        return Err(Error::Format(format!("unsupported field layout `{}`", header.layout)));
    }
    let plane = [Plane::Mask, Plane::Fourier, Plane::Image]
        .into_iter()
        .find(|p| p.name() == header.plane)
        .ok_or_else(|| Error::Format(format!("unknown plane `{}`", header.plane)))?;
    let dir = header_path.parent().unwrap_or(Path::new("."));
    let mut bytes = Vec::new();
    File::open(dir.join(&header.data))?.read_to_end(&mut bytes)?;
    if bytes.len() != header.rows * header.cols * 16 {
        return Err(Error::Format("field data size does not match header".into()));
    }
    let values: Vec<C64> = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    let samples = Array2::from_shape_vec((header.rows, header.cols), values).map_err(|e| Error::Format(e.to_string()))?;
    Ok(ComplexField {
        samples,
        pitch_um: header.pitch_um,
        plane,
        wavelength_nm: header.wavelength_nm,
        focal_mm: header.focal_mm,
    })
}
