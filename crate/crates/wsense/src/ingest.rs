//! WISDM and PAMAP2 parsers.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use wsense_core::dataset::{Dataset, SensorStream, PAMAP2_ACTIVITY_IDS, WISDM_CLASSES};
use wsense_core::segment::{SegmentationConfig, Window};
use wsense_core::Tensor;

use crate::error::{AppError, Result};

#[derive(Debug, Clone)]
pub struct Loaded {
    pub streams: Vec<SensorStream>,
    /// Non-empty records that failed to parse.
    pub malformed: usize,
    /// Parsed rows excluded on purpose (non-protocol activity, long NaN gap).
    pub excluded: usize,
}

impl Loaded {
    pub fn samples(&self) -> usize {
        self.streams.iter().map(SensorStream::len).sum()
    }
}

struct WisdmRow {
    user: u32,
    label: usize,
    xyz: [f64; 3],
}

fn parse_wisdm_record(rec: &str) -> Option<WisdmRow> {
    let mut f: Vec<&str> = rec.split(',').map(str::trim).collect();
    // a few records carry a trailing comma before the terminator
    if f.len() == 7 && f[6].is_empty() {
        f.pop();
    }
    let [user, activity, ts, x, y, z] = f[..] else {
        return None;
    };
    ts.parse::<i64>().ok()?;
    let label = WISDM_CLASSES.iter().position(|&c| c == activity)?;
    let mut xyz = [0.0; 3];
    for (v, s) in xyz.iter_mut().zip([x, y, z]) {
        *v = s.parse::<f64>().ok().filter(|v| v.is_finite())?;
    }
    Some(WisdmRow {
        user: user.parse().ok()?,
        label,
        xyz,
    })
}

/// Parse the raw WISDM text (`user,activity,timestamp,x,y,z;` records).
///
/// Consecutive rows of one user form one stream, so activity runs keep
/// their order and windows never straddle users.
pub fn parse_wisdm(text: &str, path: &Path) -> Result<Loaded> {
    let mut malformed = 0;
    let mut runs: Vec<(u32, Vec<f64>, Vec<usize>)> = Vec::new();
    for rec in text.split([';', '\n']).map(str::trim).filter(|r| !r.is_empty()) {
        let Some(row) = parse_wisdm_record(rec) else {
            malformed += 1;
            continue;
        };
        match runs.last_mut() {
            Some((u, xs, ls)) if *u == row.user => {
                xs.extend(row.xyz);
                ls.push(row.label);
            }
            _ => runs.push((row.user, row.xyz.to_vec(), vec![row.label])),
        }
    }
    if runs.is_empty() {
        return Err(AppError::format(path, "no valid WISDM records"));
    }
    let streams = runs
        .into_iter()
        .map(|(user, xs, ls)| {
            let x = Tensor::new(vec![ls.len(), 3], xs)?;
            SensorStream::new(user, x, ls, Dataset::Wisdm.sample_rate())
        })
        .collect::<wsense_core::Result<_>>()?;
    Ok(Loaded {
        streams,
        malformed,
        excluded: 0,
    })
}

pub fn load_wisdm(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).map_err(AppError::io(path))?;
    parse_wisdm(&String::from_utf8_lossy(&bytes), path)
}

pub const PAMAP2_COLUMNS: usize = 54;
const IMU_OFFSETS: [usize; 3] = [3, 20, 37];
/// acc ±16g, acc ±6g, gyro, magnetometer; skips temperature and orientation.
const IMU_KEEP: std::ops::Range<usize> = 1..13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pamap2Options {
    /// Keep every `decimate`-th sample (1 keeps the native 100 Hz).
    pub decimate: usize,
    /// Longest NaN run, in samples, that is bridged by interpolation.
    pub max_gap: usize,
}

impl Default for Pamap2Options {
    fn default() -> Self {
        Self {
            decimate: 1,
            max_gap: 100,
        }
    }
}

/// Fill interior NaN runs of at most `max_gap` samples by linear
/// interpolation between the finite neighbours. Longer or edge runs stay NaN.
pub fn interpolate_gaps(values: &mut [f64], max_gap: usize) {
    let mut i = 0;
    while i < values.len() {
        if !values[i].is_nan() {
            i += 1;
            continue;
        }
        let start = i;
        while i < values.len() && values[i].is_nan() {
            i += 1;
        }
        let len = i - start;
        if start == 0 || i == values.len() || len > max_gap {
            continue;
        }
        let (a, b) = (values[start - 1], values[i]);
        for (j, v) in values[start..i].iter_mut().enumerate() {
            let t = (j + 1) as f64 / (len + 1) as f64;
            *v = a + (b - a) * t;
        }
    }
}

/// Subject number from a name such as `subject105.dat`.
fn subject_id(path: &Path) -> u32 {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.chars().filter(char::is_ascii_digit).collect::<String>())
        .and_then(|d| d.parse().ok())
        .unwrap_or(0)
}

/// Parse one subject file. Rows are grouped into runs of consecutive kept
/// rows; every excluded row or unbridgeable gap starts a new stream.
pub fn parse_pamap2(text: &str, path: &Path, opts: &Pamap2Options) -> Result<Loaded> {
    let channels = IMU_OFFSETS.len() * IMU_KEEP.len();
    let source = subject_id(path);
    let mut excluded = 0;
    let mut runs: Vec<(Vec<f64>, Vec<usize>)> = vec![(Vec::new(), Vec::new())];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_ascii_whitespace().collect();
        if cols.len() != PAMAP2_COLUMNS {
            return Err(AppError::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("expected {PAMAP2_COLUMNS} columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| AppError::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("'{s}' is not a number"),
            })
        };
        let activity = parse(cols[1])? as u32;
        let Some(label) = PAMAP2_ACTIVITY_IDS.iter().position(|&a| a == activity) else {
            excluded += 1;
            if !runs.last().unwrap().1.is_empty() {
                runs.push((Vec::new(), Vec::new()));
            }
            continue;
        };
        let (xs, ls) = runs.last_mut().unwrap();
        for off in IMU_OFFSETS {
            for c in IMU_KEEP {
                xs.push(parse(cols[off + c])?);
            }
        }
        ls.push(label);
    }

    let mut streams = Vec::new();
    let rate = Dataset::Pamap2.sample_rate() / opts.decimate as f64;
    for (mut xs, ls) in runs.into_iter().filter(|(_, ls)| !ls.is_empty()) {
        let n = ls.len();
        let mut column = vec![0.0; n];
        for c in 0..channels {
            for (r, v) in column.iter_mut().enumerate() {
                *v = xs[r * channels + c];
            }
            interpolate_gaps(&mut column, opts.max_gap);
            for (r, &v) in column.iter().enumerate() {
                xs[r * channels + c] = v;
            }
        }
        // split at rows that still hold NaN, then decimate each piece
        let mut piece: (Vec<f64>, Vec<usize>) = (Vec::new(), Vec::new());
        let mut flush = |piece: &mut (Vec<f64>, Vec<usize>)| -> Result<()> {
            if !piece.1.is_empty() {
                let (xs, ls) = std::mem::take(piece);
                let x = Tensor::new(vec![ls.len(), channels], xs)?;
                streams.push(SensorStream::new(source, x, ls, rate)?);
            }
            Ok(())
        };
        let mut kept_in_piece = 0usize;
        for r in 0..n {
            let row = &xs[r * channels..(r + 1) * channels];
            if row.iter().any(|v| v.is_nan()) {
                excluded += 1;
                flush(&mut piece)?;
                kept_in_piece = 0;
                continue;
            }
            if kept_in_piece % opts.decimate == 0 {
                piece.0.extend_from_slice(row);
                piece.1.push(ls[r]);
            }
            kept_in_piece += 1;
        }
        flush(&mut piece)?;
    }
    Ok(Loaded {
        streams,
        malformed: 0,
        excluded,
    })
}

/// All `*.dat` files under `dir` (one level, sorted), or `dir` itself when
/// it is a file.
pub fn pamap2_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(AppError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "dat"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(AppError::MissingData(dir.to_path_buf()));
    }
    Ok(files)
}

pub fn load_pamap2(dir: &Path, opts: &Pamap2Options) -> Result<Loaded> {
    if opts.decimate == 0 {
        return Err(AppError::Usage("--decimate must be at least 1".into()));
    }
    let parts = pamap2_files(dir)?
        .par_iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(AppError::io(p))?;
            parse_pamap2(&text, p, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Loaded {
        streams: Vec::new(),
        malformed: 0,
        excluded: 0,
    };
    for p in parts {
        out.streams.extend(p.streams);
        out.excluded += p.excluded;
    }
    Ok(out)
}

/// Default location of each corpus under a data root.
pub fn default_path(dataset: Dataset, root: &Path) -> PathBuf {
    match dataset {
        Dataset::Wisdm => root.join("WISDM_ar_v1.1").join("WISDM_ar_v1.1_raw.txt"),
        Dataset::Pamap2 => root.join("PAMAP2_Dataset").join("Protocol"),
    }
}

/// Look for the corpus at the default layout, then directly at `root`.
pub fn locate(dataset: Dataset, root: &Path) -> Result<PathBuf> {
    let nested = default_path(dataset, root);
    if nested.exists() {
        return Ok(nested);
    }
    let flat = match dataset {
        Dataset::Wisdm => root.join("WISDM_ar_v1.1_raw.txt"),
        Dataset::Pamap2 => root.join("Protocol"),
    };
    if flat.exists() {
        return Ok(flat);
    }
    if dataset == Dataset::Pamap2 && root.is_dir() && pamap2_files(root).is_ok() {
        return Ok(root.to_path_buf());
    }
    Err(AppError::MissingData(nested))
}

pub fn load(dataset: Dataset, root: &Path, opts: &Pamap2Options) -> Result<Loaded> {
    let path = locate(dataset, root)?;
    match dataset {
        Dataset::Wisdm => load_wisdm(&path),
        Dataset::Pamap2 => load_pamap2(&path, opts),
    }
}

/// Segment every stream in parallel, keeping stream order.
pub fn segment_streams(streams: &[SensorStream], cfg: &SegmentationConfig) -> Result<Vec<Window>> {
    let parts = streams
        .par_iter()
        .map(|s| s.segment(cfg))
        .collect::<wsense_core::Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}
