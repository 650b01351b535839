//! On-disk formats.
//!
//! * `.wsnt`: one tensor (`WSNT`, rank, extents, little-endian f64 payload).
//! * `.wsns`: a named set: `WSNS`, u64 count, then per entry a u64 name
//!   length, the UTF-8 name and an embedded `.wsnt` record.
//! * checkpoints: `model.wsns` plus a `manifest.txt` of `key=value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use wsense_core::dataset::{DatasetSplit, SensorStream};
use wsense_core::segment::Window;
use wsense_core::zoo::{build_model, Arch, ModelSpec};
use wsense_core::Tensor;

use crate::error::{AppError, Result};

const SET_MAGIC: &[u8; 4] = b"WSNS";

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(AppError::io(path))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(AppError::io(path))
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    write(path, &t.to_bytes())
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    Ok(Tensor::from_bytes(&read(path)?)?)
}

pub fn encode_named<'a>(entries: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let entries: Vec<_> = entries.into_iter().collect();
    let mut out = SET_MAGIC.to_vec();
    out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (name, t) in entries {
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        t.write_bytes(&mut out);
    }
    out
}

pub fn decode_named(bytes: &[u8]) -> std::result::Result<Vec<(String, Tensor)>, String> {
    fn take<'b>(b: &mut &'b [u8], n: usize) -> std::result::Result<&'b [u8], String> {
        if b.len() < n {
            return Err("truncated named set".into());
        }
        let (head, rest) = b.split_at(n);
        *b = rest;
        Ok(head)
    }
    fn u64_le(b: &mut &[u8]) -> std::result::Result<usize, String> {
        let raw: [u8; 8] = take(b, 8)?.try_into().unwrap();
        usize::try_from(u64::from_le_bytes(raw)).map_err(|e| e.to_string())
    }
    let mut b = bytes;
    if take(&mut b, 4)? != SET_MAGIC {
        return Err("bad magic, expected WSNS".into());
    }
    let count = u64_le(&mut b)?;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = u64_le(&mut b)?;
        let name = std::str::from_utf8(take(&mut b, len)?)
            .map_err(|e| e.to_string())?
            .to_owned();
        let (t, used) = Tensor::read_bytes(b).map_err(|e| e.to_string())?;
        b = &b[used..];
        out.push((name, t));
    }
    if !b.is_empty() {
        return Err(format!("{} trailing bytes", b.len()));
    }
    Ok(out)
}

pub fn write_named<'a>(path: &Path, entries: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Result<()> {
    write(path, &encode_named(entries))
}

pub fn read_named(path: &Path) -> Result<Vec<(String, Tensor)>> {
    decode_named(&read(path)?).map_err(|m| AppError::format(path, m))
}

fn labels_tensor(labels: &[usize]) -> Option<Tensor> {
    Tensor::new(vec![labels.len()], labels.iter().map(|&l| l as f64).collect()).ok()
}

pub fn write_stream(path: &Path, s: &SensorStream) -> Result<()> {
    let labels = labels_tensor(&s.labels).ok_or_else(|| AppError::format(path, "empty stream"))?;
    let meta = Tensor::vector(&[f64::from(s.source), s.sample_rate]);
    write_named(
        path,
        [("channels", &s.channels), ("labels", &labels), ("meta", &meta)],
    )
}

pub fn read_stream(path: &Path) -> Result<SensorStream> {
    let mut map: BTreeMap<String, Tensor> = read_named(path)?.into_iter().collect();
    let mut get = |k: &str| map.remove(k).ok_or_else(|| AppError::format(path, format!("missing '{k}'")));
    let (channels, labels, meta) = (get("channels")?, get("labels")?, get("meta")?);
    let labels = labels.data().iter().map(|&v| v as usize).collect();
    Ok(SensorStream::new(
        meta.data()[0] as u32,
        channels,
        labels,
        meta.data()[1],
    )?)
}

fn manifest(pairs: &[(&str, String)]) -> String {
    pairs.iter().fold(String::new(), |mut s, (k, v)| {
        let _ = writeln!(s, "{k}={v}");
        s
    })
}

fn parse_manifest(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(AppError::io(path))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .collect())
}

/// Save every model tensor plus the information needed to rebuild it.
pub fn save_checkpoint(dir: &Path, model: &ModelSpec) -> Result<()> {
    fs::create_dir_all(dir).map_err(AppError::io(dir))?;
    let named = model.named_tensors();
    write_named(
        &dir.join("model.wsns"),
        named.iter().map(|(n, t)| (n.as_str(), *t)),
    )?;
    let text = manifest(&[
        ("arch", model.arch.to_string()),
        ("window", model.window_size.to_string()),
        ("channels", model.in_channels.to_string()),
        ("classes", model.n_classes.to_string()),
        ("seed", model.rng_seed.to_string()),
    ]);
    write(&dir.join("manifest.txt"), text.as_bytes())
}

pub fn load_checkpoint(dir: &Path) -> Result<ModelSpec> {
    let path = dir.join("manifest.txt");
    let m = parse_manifest(&path)?;
    let field = |k: &str| -> Result<&str> {
        m.get(k)
            .map(String::as_str)
            .ok_or_else(|| AppError::format(&path, format!("missing '{k}'")))
    };
    let num = |k: &str| -> Result<u64> {
        field(k)?
            .parse()
            .map_err(|_| AppError::format(&path, format!("'{k}' is not an integer")))
    };
    let arch: Arch = field("arch")?.parse()?;
    let mut model = build_model(
        arch,
        num("window")? as usize,
        num("channels")? as usize,
        num("classes")? as usize,
        num("seed")?,
    )?;
    for (name, t) in read_named(&dir.join("model.wsns"))? {
        model.set_tensor(&name, t)?;
    }
    Ok(model)
}

fn write_windows(dir: &Path, stem: &str, windows: &[Window]) -> Result<()> {
    let mut index = String::from("start,label,source\n");
    for w in windows {
        let _ = writeln!(index, "{},{},{}", w.start, w.label, w.source);
    }
    write(&dir.join(format!("{stem}_windows.csv")), index.as_bytes())?;
    if let Some(first) = windows.first() {
        let shape = first.values.shape();
        let data: Vec<f64> = windows.iter().flat_map(|w| w.values.data().iter().copied()).collect();
        let t = Tensor::new(vec![windows.len(), shape[0], shape[1]], data)?;
        write_tensor(&dir.join(format!("{stem}.wsnt")), &t)?;
    }
    Ok(())
}

/// Split manifest (seed, fraction, per-class counts, normalization vectors)
/// plus window index files and payloads.
pub fn save_split(dir: &Path, split: &DatasetSplit) -> Result<()> {
    fs::create_dir_all(dir).map_err(AppError::io(dir))?;
    let k = split.n_classes();
    let hist = |ws: &[Window]| {
        let h = wsense_core::dataset::class_histogram(ws, k);
        h.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    };
    let floats = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
    let text = manifest(&[
        ("seed", split.seed.to_string()),
        ("test_fraction", split.test_fraction.to_string()),
        ("train_windows", split.train.len().to_string()),
        ("test_windows", split.test.len().to_string()),
        ("classes", split.class_names.join(",")),
        ("train_per_class", hist(&split.train)),
        ("test_per_class", hist(&split.test)),
        ("normalization", "z-score fitted on train".into()),
        ("mean", floats(&split.normalizer.mean)),
        ("std", floats(&split.normalizer.std)),
    ]);
    write(&dir.join("split.txt"), text.as_bytes())?;
    write_windows(dir, "train", &split.train)?;
    write_windows(dir, "test", &split.test)
}
