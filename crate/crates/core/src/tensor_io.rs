//! `DDCS` measurement files and `DDPG` grid files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! DDCS:  "DDCS" | u32 version = 1 | u32 B, S, T, R, K | f64 fc | f64 Δf
//!        | f64 timestamps[B][S][T·R] | f32 (re, im) samples[B][S][T][R][K]
//! DDPG:  "DDPG" | u32 version = 1 | u32 rows | u32 cols | f32 values[rows][cols]
//! ```
//!
//! Samples are written one burst at a time so campaigns larger than memory can
//! be streamed through [`DdcsWriter`] and [`DdcsReader`].

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use num_complex::Complex32;

use crate::error::{Error, Result};
use crate::sounder::{BurstData, MeasurementTensor};

pub const DDCS_MAGIC: &[u8; 4] = b"DDCS";
pub const DDPG_MAGIC: &[u8; 4] = b"DDPG";
pub const FORMAT_VERSION: u32 = 1;

/// Everything in a `DDCS` file except the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DdcsHeader {
    pub dims: [usize; 5],
    pub center_frequency_hz: f64,
    pub tone_spacing_hz: f64,
    pub timestamps: Vec<f64>,
}

impl DdcsHeader {
    pub fn of(tensor: &MeasurementTensor) -> Self {
        Self {
            dims: tensor.dims,
            center_frequency_hz: tensor.center_frequency_hz,
            tone_spacing_hz: tensor.tone_spacing_hz,
            timestamps: tensor.timestamps.clone(),
        }
    }

    pub fn pairs(&self) -> usize {
        self.dims[2] * self.dims[3]
    }

    pub fn burst_samples(&self) -> usize {
        self.dims[1] * self.pairs() * self.dims[4]
    }

    fn timestamps_per_burst(&self) -> usize {
        self.dims[1] * self.pairs()
    }

    fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0 || d > u32::MAX as usize) {
            return Err(Error::Format(format!("invalid dimensions {:?}", self.dims)));
        }
        if self.timestamps.len() != self.dims[0] * self.timestamps_per_burst() {
            return Err(Error::Format("timestamp count does not match dimensions".into()));
        }
        Ok(())
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn read_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(truncated)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

/// Streaming writer; bursts must be pushed in order.
pub struct DdcsWriter<W: Write> {
    out: W,
    header: DdcsHeader,
    written: usize,
}

impl DdcsWriter<BufWriter<File>> {
    pub fn create(path: &Path, header: DdcsHeader) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), header)
    }
}

impl<W: Write> DdcsWriter<W> {
    pub fn new(mut out: W, header: DdcsHeader) -> Result<Self> {
        header.validate()?;
        out.write_all(DDCS_MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for d in header.dims {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        out.write_all(&header.center_frequency_hz.to_le_bytes())?;
        out.write_all(&header.tone_spacing_hz.to_le_bytes())?;
        for t in &header.timestamps {
            out.write_all(&t.to_le_bytes())?;
        }
        Ok(Self { out, header, written: 0 })
    }

    pub fn write_burst(&mut self, samples: &[Complex32]) -> Result<()> {
        if self.written >= self.header.dims[0] {
            return Err(Error::Format("more bursts than declared".into()));
        }
        if samples.len() != self.header.burst_samples() {
            return Err(Error::Format(format!(
                "burst has {} samples, expected {}",
                samples.len(),
                self.header.burst_samples()
            )));
        }
        let mut buf = Vec::with_capacity(samples.len() * 8);
        for s in samples {
            buf.extend_from_slice(&s.re.to_le_bytes());
            buf.extend_from_slice(&s.im.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    /// Flushes and checks that every declared burst was written.
    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.dims[0] {
            return Err(Error::Format(format!(
                "wrote {} of {} bursts",
                self.written, self.header.dims[0]
            )));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streaming reader over the bursts of a `DDCS` file.
pub struct DdcsReader<R: Read> {
    input: R,
    header: DdcsHeader,
    next: usize,
}

impl DdcsReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> DdcsReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        read_magic(&mut input, DDCS_MAGIC)?;
        let mut dims = [0usize; 5];
        for d in dims.iter_mut() {
            *d = read_u32(&mut input)? as usize;
        }
        if dims.contains(&0) {
            return Err(Error::Format(format!("invalid dimensions {dims:?}")));
        }
        let center_frequency_hz = read_f64(&mut input)?;
        let tone_spacing_hz = read_f64(&mut input)?;
        let n = dims[0] * dims[1] * dims[2] * dims[3];
        let mut raw = vec![0u8; n * 8];
        input.read_exact(&mut raw).map_err(truncated)?;
        let timestamps = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            input,
            header: DdcsHeader {
                dims,
                center_frequency_hz,
                tone_spacing_hz,
                timestamps,
            },
            next: 0,
        })
    }

    pub fn header(&self) -> &DdcsHeader {
        &self.header
    }

    /// Next burst, or `None` after the last one.
    pub fn next_burst(&mut self) -> Result<Option<BurstData>> {
        let h = &self.header;
        if self.next >= h.dims[0] {
            return Ok(None);
        }
        let mut raw = vec![0u8; h.burst_samples() * 8];
        self.input.read_exact(&mut raw).map_err(truncated)?;
        let responses = raw
            .chunks_exact(8)
            .map(|c| {
                Complex32::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()),
                    f32::from_le_bytes(c[4..].try_into().unwrap()),
                )
            })
            .collect();
        let per = h.timestamps_per_burst();
        let b = self.next;
        self.next += 1;
        Ok(Some(BurstData {
            index: b,
            responses,
            timestamps: h.timestamps[b * per..(b + 1) * per].to_vec(),
            snapshots: h.dims[1],
            pairs: h.pairs(),
            tones: h.dims[4],
        }))
    }
}

pub fn write_tensor(path: &Path, tensor: &MeasurementTensor) -> Result<()> {
    let mut w = DdcsWriter::create(path, DdcsHeader::of(tensor))?;
    for chunk in tensor.data.chunks(tensor.burst_len()) {
        w.write_burst(chunk)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<MeasurementTensor> {
    let mut r = DdcsReader::open(path)?;
    let h = r.header().clone();
    let mut data = Vec::with_capacity(h.dims[0] * h.burst_samples());
    while let Some(b) = r.next_burst()? {
        data.extend_from_slice(&b.responses);
    }
    Ok(MeasurementTensor {
        dims: h.dims,
        center_frequency_hz: h.center_frequency_hz,
        tone_spacing_hz: h.tone_spacing_hz,
        timestamps: h.timestamps,
        data,
    })
}

/// Row-major `f32` grid (e.g. PDP vs. time, Doppler vs. time).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Format(format!("{} values for a {rows}x{cols} grid", values.len())));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }
}

pub fn write_grid(path: &Path, grid: &Grid) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(DDPG_MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(grid.rows as u32).to_le_bytes())?;
    out.write_all(&(grid.cols as u32).to_le_bytes())?;
    for v in &grid.values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<Grid> {
    let mut r = BufReader::new(File::open(path)?);
    read_magic(&mut r, DDPG_MAGIC)?;
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let mut raw = vec![0u8; rows * cols * 4];
    r.read_exact(&mut raw).map_err(truncated)?;
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Grid::new(rows, cols, values)
}
