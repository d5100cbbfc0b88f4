//! FMAP serialization and PNG export.
//!
//! FMAP layout, all little-endian, no padding:
//! magic `"FMAP"` (4 ASCII bytes), `u32` height, `u32` width, then
//! `height * width` IEEE-754 binary32 values row-major, top row first.
//! Trailing bytes are rejected so the format round-trips bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::maps::FloatMap;

const MAGIC: [u8; 4] = *b"FMAP";

pub fn write_fmap<W: Write>(map: &FloatMap, out: &mut W) -> Result<()> {
    let (h, w) = map.dims();
    let h32 = u32::try_from(h)
        .map_err(|_| Error::FormatError(format!("height {h} exceeds u32")))?;
    let w32 = u32::try_from(w)
        .map_err(|_| Error::FormatError(format!("width {w} exceeds u32")))?;
    out.write_all(&MAGIC)?;
    out.write_all(&h32.to_le_bytes())?;
    out.write_all(&w32.to_le_bytes())?;
    let mut buf = Vec::with_capacity(map.data().len() * 4);
    for v in map.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_fmap<R: Read>(input: &mut R) -> Result<FloatMap> {
    let mut header = [0u8; 12];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::FormatError("truncated header".into()))?;
    if header[..4] != MAGIC {
        return Err(Error::FormatError(format!(
            "bad magic {:?}, expected \"FMAP\"",
            &header[..4]
        )));
    }
    let h = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    if h == 0 || w == 0 {
        return Err(Error::FormatError(format!("zero dimension {h}x{w}")));
    }
    let count = h
        .checked_mul(w)
        .ok_or_else(|| Error::FormatError(format!("dimensions {h}x{w} overflow")))?;
    let bytes = count
        .checked_mul(4)
        .ok_or_else(|| Error::FormatError(format!("payload size for {h}x{w} overflows")))?;
    let mut payload = vec![0u8; bytes];
    input
        .read_exact(&mut payload)
        .map_err(|_| Error::FormatError(format!("truncated payload, expected {bytes} bytes")))?;
    let mut probe = [0u8; 1];
    match input.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(Error::FormatError("trailing bytes after payload".into())),
        Err(e) => return Err(e.into()),
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FloatMap::from_vec(h, w, data)
}

pub fn write_fmap_file<P: AsRef<Path>>(map: &FloatMap, path: P) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_fmap(map, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn read_fmap_file<P: AsRef<Path>>(path: P) -> Result<FloatMap> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_fmap(&mut f)
}

/// Export as 8-bit grayscale PNG: pixel = `round(255 * v)`.
///
/// Every value must lie in `[0, 1]`.
pub fn write_png_file<P: AsRef<Path>>(map: &FloatMap, path: P) -> Result<()> {
    let (h, w) = map.dims();
    let mut pixels = Vec::with_capacity(h * w);
    for (i, &v) in map.data().iter().enumerate() {
        let v = v as f64;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::RangeError(format!(
                "value {v} at index {i} outside [0, 1], cannot export png"
            )));
        }
        pixels.push((255.0 * v).round() as u8);
    }
    image::save_buffer(
        path.as_ref(),
        &pixels,
        w as u32,
        h as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| Error::FormatError(format!("png encode: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> FloatMap {
        let data: Vec<f32> = (0..12).map(|i| i as f32 * 0.25 - 1.0).collect();
        FloatMap::from_vec(3, 4, data).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let map = sample_map();
        let mut buf = Vec::new();
        write_fmap(&map, &mut buf).unwrap();
        assert_eq!(buf.len(), 12 + 12 * 4);
        let back = read_fmap(&mut &buf[..]).unwrap();
        assert_eq!(back.dims(), (3, 4));
        for (a, b) in map.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let mut buf = Vec::new();
        write_fmap(&sample_map(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            read_fmap(&mut &buf[..]),
            Err(Error::FormatError(_))
        ));
    }

    #[test]
    fn truncation_rejected() {
        let mut buf = Vec::new();
        write_fmap(&sample_map(), &mut buf).unwrap();
        buf.pop();
        assert!(matches!(
            read_fmap(&mut &buf[..]),
            Err(Error::FormatError(_))
        ));
        assert!(matches!(
            read_fmap(&mut &buf[..6]),
            Err(Error::FormatError(_))
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut buf = Vec::new();
        write_fmap(&sample_map(), &mut buf).unwrap();
        buf.push(0);
        assert!(matches!(
            read_fmap(&mut &buf[..]),
            Err(Error::FormatError(_))
        ));
    }

    #[test]
    fn overflowing_dims_rejected() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"FMAP");
        buf.extend_from_slice(&u32::MAX.to_le_bytes());
        buf.extend_from_slice(&u32::MAX.to_le_bytes());
        let err = read_fmap(&mut &buf[..]).unwrap_err();
        assert!(matches!(err, Error::FormatError(_)));
    }

    #[test]
    fn zero_dims_rejected() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"FMAP");
        buf.extend_from_slice(&0u32.to_le_bytes());
        buf.extend_from_slice(&4u32.to_le_bytes());
        assert!(matches!(
            read_fmap(&mut &buf[..]),
            Err(Error::FormatError(_))
        ));
    }

    #[test]
    fn png_rejects_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let neg = FloatMap::from_vec(1, 2, vec![-0.1, 0.5]).unwrap();
        assert!(matches!(
            write_png_file(&neg, &path),
            Err(Error::RangeError(_))
        ));
        let big = FloatMap::from_vec(1, 2, vec![0.1, 1.5]).unwrap();
        assert!(matches!(
            write_png_file(&big, &path),
            Err(Error::RangeError(_))
        ));
    }

    #[test]
    fn png_written_for_valid_map() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let map = FloatMap::from_vec(2, 2, vec![0.0, 0.5, 0.25, 1.0]).unwrap();
        write_png_file(&map, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
    }
}
