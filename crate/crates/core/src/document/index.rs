//! Horizontal band index over node boxes.
//!
//! Pages are tall and narrow, so bucketing by y alone prunes most nodes.
//! Band height grows with the page extent so hostile coordinates cannot
//! blow up the bucket count.

use super::LayoutRect;

const MIN_BAND_PX: f64 = 256.0;
const MAX_BANDS: usize = 4096;

#[derive(Debug, Clone)]
pub(crate) struct BandIndex {
    top: f64,
    band_h: f64,
    /// Document positions per band, ascending within each band.
    bands: Vec<Vec<usize>>,
}

impl BandIndex {
    pub fn build(boxes: impl Iterator<Item = LayoutRect> + Clone) -> Self {
        let (mut top, mut bottom) = (f64::INFINITY, f64::NEG_INFINITY);
        for b in boxes.clone() {
            top = top.min(b.y);
            bottom = bottom.max(b.bottom());
        }
        if !top.is_finite() || !bottom.is_finite() {
            return Self {
                top: 0.0,
                band_h: MIN_BAND_PX,
                bands: Vec::new(),
            };
        }
        let extent = bottom - top;
        let band_h = MIN_BAND_PX.max(extent / (MAX_BANDS - 1) as f64);
        let count = ((extent / band_h).floor() as usize + 1).min(MAX_BANDS);
        let mut index = Self {
            top,
            band_h,
            bands: vec![Vec::new(); count],
        };
        for (pos, b) in boxes.enumerate() {
            let (lo, hi) = (index.band_of(b.y), index.band_of(b.bottom()));
            for band in &mut index.bands[lo..=hi] {
                band.push(pos);
            }
        }
        index
    }

    fn band_of(&self, y: f64) -> usize {
        let raw = ((y - self.top) / self.band_h).floor();
        if raw <= 0.0 || raw.is_nan() {
            0
        } else {
            (raw as usize).min(self.bands.len().saturating_sub(1))
        }
    }

    fn in_range(&self, y: f64) -> bool {
        !self.bands.is_empty() && y >= self.top && y <= self.top + self.band_h * self.bands.len() as f64
    }

    /// Positions whose vertical extent may include `y`.
    pub fn candidates_at(&self, y: f64) -> impl Iterator<Item = usize> + '_ {
        let band = if self.in_range(y) {
            self.bands[self.band_of(y)].as_slice()
        } else {
            &[]
        };
        band.iter().copied()
    }

    /// Positions whose vertical extent may overlap `[y0, y1]`, deduplicated.
    pub fn candidates_in(&self, y0: f64, y1: f64) -> Vec<usize> {
        if self.bands.is_empty() || y1 < self.top || y0.is_nan() || y1.is_nan() {
            return Vec::new();
        }
        let (lo, hi) = (self.band_of(y0), self.band_of(y1));
        if lo == hi {
            return self.bands[lo].clone();
        }
        let mut out: Vec<usize> = self.bands[lo..=hi].iter().flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}
