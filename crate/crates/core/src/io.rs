//! On-disk formats.
//!
//! * image: ASCII line `rimg v1 H W\n`, then `H*W` little-endian `f64`, row-major.
//! * k-space data: ASCII line `kdat v1 M\n`, then `M` pairs of little-endian
//!   `f64` `(re, im)`.
//! * sampling pattern: text, `pattern v1 H W M` then `M` lines `row col`
//!   (0-based, DFT layout, in pattern order).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::mri::{KSpaceData, SamplingPattern};

fn read_header_line<R: BufRead>(r: &mut R, what: &'static str) -> Result<String> {
    let mut buf = Vec::new();
    r.read_until(b'\n', &mut buf)?;
    if buf.last() != Some(&b'\n') {
        return Err(Error::format(what, "missing header line"));
    }
    buf.pop();
    String::from_utf8(buf).map_err(|_| Error::format(what, "header is not ASCII"))
}

fn parse_header(line: &str, magic: &str, fields: usize, what: &'static str) -> Result<Vec<usize>> {
    let mut parts = line.split_ascii_whitespace();
    if parts.next() != Some(magic) || parts.next() != Some("v1") {
        return Err(Error::format(what, format!("expected '{magic} v1' header, got '{line}'")));
    }
    let nums = parts
        .map(|p| p.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::format(what, format!("bad header field: {e}")))?;
    if nums.len() != fields {
        return Err(Error::format(what, format!("expected {fields} header fields, got {}", nums.len())));
    }
    Ok(nums)
}

fn read_f64s<R: Read>(r: &mut R, count: usize, what: &'static str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format(what, format!("expected {count} float values")))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::format(what, format!("{} trailing bytes", rest.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn write_image<W: Write>(mut w: W, img: &Image) -> Result<()> {
    writeln!(w, "rimg v1 {} {}", img.height(), img.width())?;
    for v in img.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_image<R: Read>(r: R) -> Result<Image> {
    let mut r = BufReader::new(r);
    let header = read_header_line(&mut r, "image")?;
    let dims = parse_header(&header, "rimg", 2, "image")?;
    let data = read_f64s(&mut r, dims[0] * dims[1], "image")?;
    Image::from_vec(dims[0], dims[1], data)
}

pub fn write_kspace<W: Write>(mut w: W, d: &KSpaceData) -> Result<()> {
    writeln!(w, "kdat v1 {}", d.len())?;
    for z in d.values() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_kspace<R: Read>(r: R) -> Result<KSpaceData> {
    let mut r = BufReader::new(r);
    let header = read_header_line(&mut r, "k-space data")?;
    let m = parse_header(&header, "kdat", 1, "k-space data")?[0];
    let raw = read_f64s(&mut r, 2 * m, "k-space data")?;
    KSpaceData::new(raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

pub fn write_pattern<W: Write>(mut w: W, p: &SamplingPattern) -> Result<()> {
    let (h, width) = p.shape();
    writeln!(w, "pattern v1 {} {} {}", h, width, p.len())?;
    for &i in p.indices() {
        writeln!(w, "{} {}", i / width, i % width)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pattern<R: Read>(r: R) -> Result<SamplingPattern> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("pattern", "empty file"))??;
    let dims = parse_header(&header, "pattern", 3, "pattern")?;
    let (h, w, m) = (dims[0], dims[1], dims[2]);
    let mut indices = Vec::with_capacity(m);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_ascii_whitespace().map(str::parse::<usize>);
        let (Some(Ok(row)), Some(Ok(col)), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::format("pattern", format!("bad entry on line {}: '{line}'", k + 2)));
        };
        if row >= h || col >= w {
            return Err(Error::format("pattern", format!("cell ({row}, {col}) outside {h}x{w}")));
        }
        indices.push(row * w + col);
    }
    if indices.len() != m {
        return Err(Error::format(
            "pattern",
            format!("header announces {m} samples, found {}", indices.len()),
        ));
    }
    SamplingPattern::new(h, w, indices)
}

pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    write_image(BufWriter::new(File::create(path)?), img)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    read_image(File::open(path)?)
}

pub fn save_kspace(path: impl AsRef<Path>, d: &KSpaceData) -> Result<()> {
    write_kspace(BufWriter::new(File::create(path)?), d)
}

pub fn load_kspace(path: impl AsRef<Path>) -> Result<KSpaceData> {
    read_kspace(File::open(path)?)
}

pub fn save_pattern(path: impl AsRef<Path>, p: &SamplingPattern) -> Result<()> {
    write_pattern(BufWriter::new(File::create(path)?), p)
}

pub fn load_pattern(path: impl AsRef<Path>) -> Result<SamplingPattern> {
    read_pattern(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_layout_is_exact() {
        let img = Image::from_vec(1, 2, vec![1.0, -0.5]).unwrap();
        let mut buf = Vec::new();
        write_image(&mut buf, &img).unwrap();
        let mut expected = b"rimg v1 1 2\n".to_vec();
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&(-0.5f64).to_le_bytes());
        assert_eq!(buf, expected);
        assert_eq!(read_image(&buf[..]).unwrap(), img);
    }

    #[test]
    fn kspace_layout_is_exact() {
        let d = KSpaceData::new(vec![Complex64::new(1.5, -2.0)]).unwrap();
        let mut buf = Vec::new();
        write_kspace(&mut buf, &d).unwrap();
        assert!(buf.starts_with(b"kdat v1 1\n"));
        assert_eq!(buf.len(), 10 + 16);
        assert_eq!(read_kspace(&buf[..]).unwrap(), d);
    }

    #[test]
    fn pattern_text_is_exact() {
        let p = SamplingPattern::new(3, 4, vec![5, 0, 11]).unwrap();
        let mut buf = Vec::new();
        write_pattern(&mut buf, &p).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "pattern v1 3 4 3\n1 1\n0 0\n2 3\n");
        assert_eq!(read_pattern(&buf[..]).unwrap(), p);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_image(&b"rimg v2 1 1\n"[..]).is_err());
        assert!(read_image(&b"rimg v1 2 2\n\0\0"[..]).is_err());
        let mut extra = b"rimg v1 1 1\n".to_vec();
        extra.extend_from_slice(&[0u8; 9]);
        assert!(read_image(&extra[..]).is_err());
        assert!(read_kspace(&b"kdat v1 x\n"[..]).is_err());
        assert!(read_pattern(&b"pattern v1 2 2 2\n0 0\n"[..]).is_err());
        assert!(read_pattern(&b"pattern v1 2 2 1\n2 0\n"[..]).is_err());
        assert!(read_pattern(&b"pattern v1 2 2 1\n0 0 1\n"[..]).is_err());
    }
}
