//! Grayscale heatmaps of single signals as binary PGM (P5) images.
//!
//! Columns are cycles, rows are phases with phase 0 at the bottom. Pixel
//! intensity is `round(255 · m / max)`, so the largest point is white and an
//! all-zero signal renders black.

use crate::signal::PrpdSignal;

pub fn heatmap_pixels(signal: &PrpdSignal) -> Vec<u8> {
    let dims = signal.dims();
    let max = signal.values().iter().copied().fold(0.0, f64::max);
    let mut pixels = Vec::with_capacity(dims.len());
    for row in 0..dims.phases {
        let phase = dims.phases - 1 - row;
        for &v in signal.phase_row(phase) {
            let level = if max > 0.0 { (255.0 * v / max).round() } else { 0.0 };
            pixels.push(level as u8);
        }
    }
    pixels
}

pub fn heatmap_pgm(signal: &PrpdSignal) -> Vec<u8> {
    let dims = signal.dims();
    let mut out = format!("P5\n{} {}\n255\n", dims.cycles, dims.phases).into_bytes();
    out.extend(heatmap_pixels(signal));
    out
}
