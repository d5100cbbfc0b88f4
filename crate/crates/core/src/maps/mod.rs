//! Dense per-pixel maps and polygon rasterization.
//!
//! `FloatMap` stores binary32 values row-major, top row first; `BinaryMap`
//! is its boolean counterpart. Pixel `(i, j)` covers the unit square whose
//! center is `(x, y) = (j + 0.5, i + 0.5)`, and every rasterization
//! decision in the crate samples that center with the same half-open
//! even-odd rule as [`Polygon::contains`](crate::geometry::Polygon::contains).

mod io;

pub use io::{read_fmap, read_fmap_file, write_fmap, write_fmap_file, write_png_file};

use crate::error::{Error, Result};
use crate::geometry::{offset_polygon, point_polygon_distance, Point, Polygon};

/// Row-major single-channel f32 image.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatMap {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FloatMap {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(FloatMap {
            height,
            width,
            data: vec![0.0; height * width],
        })
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(height, width)?;
        if data.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                got: (data.len(), 1),
            });
        }
        Ok(FloatMap {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.data[row * self.width + col] = v;
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }
}

/// Row-major single-channel boolean image.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMap {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMap {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(BinaryMap {
            height,
            width,
            data: vec![false; height * width],
        })
    }

    pub fn ones(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(BinaryMap {
            height,
            width,
            data: vec![true; height * width],
        })
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(height, width)?;
        if data.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                got: (data.len(), 1),
            });
        }
        Ok(BinaryMap {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.data[row * self.width + col] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// 1.0 where set, 0.0 elsewhere.
    pub fn to_float(&self) -> FloatMap {
        FloatMap {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter(format!(
            "map dimensions must be positive, got {height}x{width}"
        )));
    }
    height.checked_mul(width).ok_or_else(|| {
        Error::InvalidParameter(format!("map dimensions {height}x{width} overflow"))
    })?;
    Ok(())
}

/// Rasterize the union of `polys` onto an `height x width` canvas: a pixel
/// is set iff its center lies inside at least one polygon (even-odd rule).
/// Geometry outside the canvas is clipped.
pub fn rasterize_polygons(
    polys: &[Polygon],
    height: usize,
    width: usize,
) -> Result<BinaryMap> {
    let mut out = BinaryMap::zeros(height, width)?;
    for poly in polys {
        rasterize_into(poly, &mut out);
    }
    Ok(out)
}

/// OR a single polygon's even-odd scanline fill into `out`.
pub(crate) fn rasterize_into(poly: &Polygon, out: &mut BinaryMap) {
    let (height, width) = out.dims();
    let bbox = poly.bbox();
    let row_lo = (bbox.min_y - 0.5).ceil().max(0.0) as usize;
    let row_hi = (bbox.max_y.floor() as isize).min(height as isize - 1);
    if row_hi < 0 {
        return;
    }
    let verts = poly.vertices();
    let n = verts.len();
    let mut xs: Vec<f64> = Vec::with_capacity(8);
    for row in row_lo..=row_hi as usize {
        let y = row as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (a, b) = (verts[i], verts[(i + 1) % n]);
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        if xs.len() < 2 {
            continue;
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for span in xs.chunks_exact(2) {
            // Pixel centers in [span0, span1): left-closed to match the
            // even-odd containment test.
            let lo = (span[0] - 0.5).ceil().max(0.0) as usize;
            let hi = ((span[1] - 0.5).ceil().max(0.0) as usize).min(width);
            for col in lo..hi {
                out.set(row, col, true);
            }
        }
    }
}

/// Two-sided distance ramp around the boundary of `poly`.
///
/// For every pixel whose center lies inside the polygon dilated by `d`,
/// the value is `clamp(1 - dist/d, 0, 1)` where `dist` is the distance
/// from the pixel center to the boundary of `poly`; pixels outside the
/// dilated polygon are 0. The maximum 1 occurs exactly on the boundary.
pub fn distance_band(poly: &Polygon, d: f64, height: usize, width: usize) -> Result<FloatMap> {
    Ok(distance_band_masked(poly, d, height, width)?.0)
}

/// [`distance_band`] plus the dilated-polygon footprint it was evaluated
/// on. The footprint is the mask labelgen accumulates into `band_mask`.
pub(crate) fn distance_band_masked(
    poly: &Polygon,
    d: f64,
    height: usize,
    width: usize,
) -> Result<(FloatMap, BinaryMap)> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "band distance must be positive, got {d}"
        )));
    }
    let mut band = FloatMap::zeros(height, width)?;
    let dilated = offset_polygon(poly, d);
    let footprint = rasterize_polygons(&dilated, height, width)?;
    for row in 0..height {
        let y = row as f64 + 0.5;
        for col in 0..width {
            if !footprint.get(row, col) {
                continue;
            }
            let dist = point_polygon_distance(Point::new(col as f64 + 0.5, y), poly);
            band.set(row, col, (1.0 - dist / d).clamp(0.0, 1.0) as f32);
        }
    }
    Ok((band, footprint))
}
