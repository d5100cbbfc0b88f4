//! Connected-component labeling of binary maps.
//!
//! Two-pass labeling with union-find. Region ids start at 1 and are
//! assigned in raster-scan order of each region's first pixel; 0 is
//! background.

use crate::maps::BinaryMap;

/// Pixel adjacency rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Summary of one labeled region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionInfo {
    /// Label id, 1-based.
    pub id: u32,
    pub pixel_count: usize,
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
    /// First pixel of the region in raster-scan order, as (row, col).
    pub first_pixel: (usize, usize),
}

/// A labeled map plus per-region summaries, indexed by `id - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeled {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    regions: Vec<RegionInfo>,
}

impl Labeled {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Row-major per-pixel region ids, 0 for background.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn regions(&self) -> &[RegionInfo] {
        &self.regions
    }

    pub fn label_at(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }
}

struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new() -> Self {
        // Slot 0 is a dummy so provisional labels can be used directly.
        Dsu { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Label maximal connected foreground regions of `map`.
pub fn connected_components(map: &BinaryMap, connectivity: Connectivity) -> Labeled {
    let (height, width) = map.dims();
    let data = map.data();
    let mut provisional = vec![0u32; data.len()];
    let mut dsu = Dsu::new();

    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            if !data[idx] {
                continue;
            }
            let mut label = 0u32;
            let visit = |p: u32, dsu: &mut Dsu, label: &mut u32| {
                if p == 0 {
                    return;
                }
                if *label == 0 {
                    *label = p;
                } else {
                    dsu.union(*label, p);
                }
            };
            if col > 0 {
                visit(provisional[idx - 1], &mut dsu, &mut label);
            }
            if row > 0 {
                visit(provisional[idx - width], &mut dsu, &mut label);
                if connectivity == Connectivity::Eight {
                    if col > 0 {
                        visit(provisional[idx - width - 1], &mut dsu, &mut label);
                    }
                    if col + 1 < width {
                        visit(provisional[idx - width + 1], &mut dsu, &mut label);
                    }
                }
            }
            if label == 0 {
                label = dsu.make();
            }
            provisional[idx] = label;
        }
    }

    // Second pass: compact roots to final ids in raster order and gather
    // region statistics.
    let mut root_to_id = vec![0u32; dsu.parent.len()];
    let mut labels = vec![0u32; data.len()];
    let mut regions: Vec<RegionInfo> = Vec::new();
    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            if provisional[idx] == 0 {
                continue;
            }
            let root = dsu.find(provisional[idx]) as usize;
            let id = if root_to_id[root] == 0 {
                let id = regions.len() as u32 + 1;
                root_to_id[root] = id;
                regions.push(RegionInfo {
                    id,
                    pixel_count: 0,
                    min_row: row,
                    min_col: col,
                    max_row: row,
                    max_col: col,
                    first_pixel: (row, col),
                });
                id
            } else {
                root_to_id[root]
            };
            labels[idx] = id;
            let info = &mut regions[(id - 1) as usize];
            info.pixel_count += 1;
            info.min_row = info.min_row.min(row);
            info.min_col = info.min_col.min(col);
            info.max_row = info.max_row.max(row);
            info.max_col = info.max_col.max(col);
        }
    }

    Labeled {
        height,
        width,
        labels,
        regions,
    }
}
