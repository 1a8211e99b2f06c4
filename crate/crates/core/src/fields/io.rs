//! Field persistence.
//!
//! Binary layout: 16 magic bytes ("NSFIELD1" + u32 version + 4 reserved),
//! a u64 little-endian JSON header length, the JSON header (axes, label,
//! real flag), then the payload as little-endian f64 interleaved (re, im)
//! pairs in row-major node order. Lossless for f64 values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid1D, SampledField};
use crate::error::{NsError, Result};

const MAGIC: &[u8; 8] = b"NSFIELD1";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    axes: Vec<Grid1D>,
    label: String,
    real: bool,
}

pub fn store_field(field: &SampledField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ctx = || path.display().to_string();
    let file = File::create(path).map_err(|e| NsError::io(ctx(), e))?;
    let mut w = BufWriter::new(file);

    w.write_all(MAGIC).map_err(|e| NsError::io(ctx(), e))?;
    w.write_all(&VERSION.to_le_bytes())
        .map_err(|e| NsError::io(ctx(), e))?;
    w.write_all(&[0u8; 4]).map_err(|e| NsError::io(ctx(), e))?;

    let header = FieldHeader {
        axes: field.axes.clone(),
        label: field.label.clone(),
        real: field.real,
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| NsError::Config(format!("header encode: {e}")))?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())
        .map_err(|e| NsError::io(ctx(), e))?;
    w.write_all(&header_bytes).map_err(|e| NsError::io(ctx(), e))?;

    for v in &field.values {
        w.write_all(&v.re.to_le_bytes())
            .map_err(|e| NsError::io(ctx(), e))?;
        w.write_all(&v.im.to_le_bytes())
            .map_err(|e| NsError::io(ctx(), e))?;
    }
    w.flush().map_err(|e| NsError::io(ctx(), e))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<SampledField> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| NsError::io(name.clone(), e))?;
    let mut r = BufReader::new(file);
    let mut pos: u64 = 0;

    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, &name, &mut pos)?;
    if &magic != MAGIC {
        return Err(NsError::MalformedFile {
            path: name,
            position: 0,
            detail: "bad magic bytes".into(),
        });
    }
    let mut word = [0u8; 4];
    read_exact(&mut r, &mut word, &name, &mut pos)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(NsError::MalformedFile {
            path: name,
            position: 8,
            detail: format!("unsupported version {version}"),
        });
    }
    read_exact(&mut r, &mut word, &name, &mut pos)?; // reserved

    let mut len8 = [0u8; 8];
    read_exact(&mut r, &mut len8, &name, &mut pos)?;
    let header_len = u64::from_le_bytes(len8) as usize;
    if header_len > 1 << 20 {
        return Err(NsError::MalformedFile {
            path: name,
            position: pos,
            detail: format!("implausible header length {header_len}"),
        });
    }
    let mut header_bytes = vec![0u8; header_len];
    read_exact(&mut r, &mut header_bytes, &name, &mut pos)?;
    let header: FieldHeader =
        serde_json::from_slice(&header_bytes).map_err(|e| NsError::MalformedFile {
            path: name.clone(),
            position: pos,
            detail: format!("bad header JSON: {e}"),
        })?;

    let count: usize = header.axes.iter().map(|a| a.count).product();
    let mut values = Vec::with_capacity(count);
    let mut pair = [0u8; 16];
    for _ in 0..count {
        read_exact(&mut r, &mut pair, &name, &mut pos)?;
        let re = f64::from_le_bytes(pair[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(pair[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }

    let mut field = SampledField::new(header.axes, values, header.label)?;
    field.real = header.real;
    Ok(field)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &str, pos: &mut u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            NsError::MalformedFile {
                path: path.to_string(),
                position: *pos,
                detail: "truncated payload".into(),
            }
        } else {
            NsError::io(path.to_string(), e)
        }
    })?;
    *pos += buf.len() as u64;
    Ok(())
}

/// One row per node: axis coordinates, then re and im.
pub fn export_csv(field: &SampledField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ctx = || path.display().to_string();
    let file = File::create(path).map_err(|e| NsError::io(ctx(), e))?;
    let mut w = BufWriter::new(file);

    let mut header: Vec<String> = (0..field.rank()).map(|d| format!("x{d}")).collect();
    header.push("re".into());
    header.push("im".into());
    writeln!(w, "{}", header.join(",")).map_err(|e| NsError::io(ctx(), e))?;

    let shape = field.shape();
    let mut idx = vec![0usize; shape.len()];
    for (flat, v) in field.values.iter().enumerate() {
        super::unflatten(flat, &shape, &mut idx);
        let mut row: Vec<String> = idx
            .iter()
            .enumerate()
            .map(|(d, &i)| format!("{}", field.axes[d].node(i)))
            .collect();
        row.push(format!("{}", v.re));
        row.push(format!("{}", v.im));
        writeln!(w, "{}", row.join(",")).map_err(|e| NsError::io(ctx(), e))?;
    }
    w.flush().map_err(|e| NsError::io(ctx(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("nsflows-io-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn roundtrip_is_bit_identical() {
        let g1 = Grid1D::new(-0.3, 0.17, 5, true).unwrap();
        let g2 = Grid1D::new(2.0, 0.01, 3, false).unwrap();
        let mut f = SampledField::from_fn(vec![g1, g2], "probe", |c| {
            Complex64::new(c[0] * 1.700000000000001, -c[1] / 3.0)
        })
        .unwrap();
        f.real = false;
        let path = tmp("roundtrip.nsf");
        store_field(&f, &path).unwrap();
        let g = load_field(&path).unwrap();
        assert_eq!(g.axes, f.axes);
        assert_eq!(g.label, f.label);
        assert_eq!(g.values.len(), f.values.len());
        for (a, b) in g.values.iter().zip(&f.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn wrong_magic_rejected() {
        let path = tmp("magic.nsf");
        let mut file = File::create(&path).unwrap();
        file.write_all(b"NOTAFLD1xxxxxxxxxxxxxxxx").unwrap();
        drop(file);
        match load_field(&path) {
            Err(NsError::MalformedFile { detail, .. }) => assert!(detail.contains("magic")),
            other => panic!("expected malformed-file error, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn truncated_payload_rejected() {
        let g = Grid1D::new(0.0, 1.0, 4, false).unwrap();
        let f = SampledField::zeros(vec![g], "u").unwrap();
        let path = tmp("trunc.nsf");
        store_field(&f, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        match load_field(&path) {
            Err(NsError::MalformedFile { detail, .. }) => assert!(detail.contains("truncated")),
            other => panic!("expected malformed-file error, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }
}
