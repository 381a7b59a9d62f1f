//! Fitness scape plots, their compilation, and the structureness indicator.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use super::fitness::fitness;
use crate::error::{arg_err, Result};

/// Fitness of every segment, indexed by (center, duration) in frames.
/// Cells outside the triangle of valid segments hold NaN.
#[derive(Debug, Clone)]
pub struct ScapePlot {
    n: usize,
    frame_ms: u64,
    /// Row-major `[duration - 1][center]`.
    cells: Vec<f64>,
}

impl PartialEq for ScapePlot {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.frame_ms == other.frame_ms
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }
}

pub fn segment_center(start: usize, duration: usize) -> usize {
    start + (duration - 1) / 2
}

impl ScapePlot {
    pub fn empty(n: usize, frame_ms: u64) -> Self {
        Self {
            n,
            frame_ms,
            cells: vec![f64::NAN; n * n],
        }
    }

    pub fn frames(&self) -> usize {
        self.n
    }

    pub fn frame_ms(&self) -> u64 {
        self.frame_ms
    }

    pub fn get(&self, center: usize, duration: usize) -> Option<f64> {
        if duration == 0 || duration > self.n || center >= self.n {
            return None;
        }
        let v = self.cells[(duration - 1) * self.n + center];
        (!v.is_nan()).then_some(v)
    }

    pub fn set(&mut self, center: usize, duration: usize, value: f64) {
        self.cells[(duration - 1) * self.n + center] = value;
    }

    /// Present cells as (center, duration, fitness), by duration then center.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.n).flat_map(move |d| {
            (0..self.n).filter_map(move |c| self.get(c, d).map(|v| (c, d, v)))
        })
    }

    /// Grow to `n` frames, filling new cells with NaN.
    pub fn padded(&self, n: usize) -> ScapePlot {
        if n <= self.n {
            return self.clone();
        }
        let mut out = ScapePlot::empty(n, self.frame_ms);
        for (c, d, v) in self.cells() {
            out.set(c, d, v);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["center", "duration", "fitness"])?;
        for (c, d, v) in self.cells() {
            w.write_record([c.to_string(), d.to_string(), format!("{v:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Grayscale pixels, duration rising upward, darker for higher fitness;
    /// `None` where the cell is absent.
    fn pixels(&self) -> Vec<Option<u8>> {
        let mut px = Vec::with_capacity(self.n * self.n);
        for y in 0..self.n {
            let duration = self.n - y;
            for x in 0..self.n {
                px.push(
                    self.get(x, duration)
                        .map(|v| ((1.0 - v.clamp(0.0, 1.0)) * 255.0).round() as u8),
                );
            }
        }
        px
    }

    /// Gray+alpha PNG with absent cells fully transparent.
    pub fn write_png<W: Write>(&self, out: W) -> Result<()> {
        let side = self.n.max(1) as u32;
        let mut enc = png::Encoder::new(out, side, side);
        enc.set_color(png::ColorType::GrayscaleAlpha);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        let data: Vec<u8> = if self.n == 0 {
            vec![255, 0]
        } else {
            self.pixels()
                .into_iter()
                .flat_map(|p| match p {
                    Some(g) => [g, 255],
                    None => [255, 0],
                })
                .collect()
        };
        writer.write_image_data(&data)?;
        writer.finish()?;
        Ok(())
    }

    /// Binary PGM; absent cells render white.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.n, self.n)?;
        let data: Vec<u8> = self.pixels().into_iter().map(|p| p.unwrap_or(255)).collect();
        out.write_all(&data)?;
        Ok(())
    }
}

/// Fitness for every (start, duration) segment of the matrix.
pub fn scape_plot(s: &Array2<f64>, frame_ms: u64) -> Result<ScapePlot> {
    let n = s.nrows();
    if s.ncols() != n {
        return arg_err("similarity matrix must be square");
    }
    let rows: Vec<Vec<(usize, f64)>> = (1..=n)
        .into_par_iter()
        .map(|duration| {
            (0..=n - duration)
                .map(|start| {
                    let f = fitness(s, start, start + duration - 1)
                        .expect("segment bounds are valid by construction");
                    (segment_center(start, duration), f.fitness)
                })
                .collect()
        })
        .collect();
    let mut plot = ScapePlot::empty(n, frame_ms);
    for (i, row) in rows.into_iter().enumerate() {
        for (center, v) in row {
            plot.set(center, i + 1, v);
        }
    }
    Ok(plot)
}

/// Cellwise maximum over plots, ignoring absent cells; shorter plots are
/// padded with absent cells.
pub fn compile_plots(plots: &[ScapePlot]) -> Result<ScapePlot> {
    let first = match plots.first() {
        Some(p) => p,
        None => return arg_err("cannot compile an empty list of scape plots"),
    };
    if plots.iter().any(|p| p.frame_ms != first.frame_ms) {
        return arg_err("scape plots have different frame sizes");
    }
    let n = plots.iter().map(|p| p.n).max().unwrap_or(0);
    let mut out = ScapePlot::empty(n, first.frame_ms);
    for p in plots {
        for (c, d, v) in p.cells() {
            let cur = out.get(c, d);
            if cur.is_none_or(|cur| v > cur) {
                out.set(c, d, v);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiValue {
    pub value: f64,
    /// The band starts beyond the piece's length.
    pub out_of_range: bool,
}

/// Largest fitness among segments whose duration in seconds lies in
/// `[low_s, high_s)`. Pass `f64::INFINITY` as `high_s` for an open band.
pub fn si(plot: &ScapePlot, low_s: f64, high_s: f64) -> Result<SiValue> {
    if low_s.is_nan() || high_s.is_nan() || low_s >= high_s {
        return arg_err(format!("SI band [{low_s}, {high_s}) is empty"));
    }
    let sec_per_frame = plot.frame_ms as f64 / 1000.0;
    let length_s = plot.n as f64 * sec_per_frame;
    if low_s > length_s {
        log::warn!("SI band starting at {low_s} s exceeds piece length {length_s} s");
        return Ok(SiValue {
            value: 0.0,
            out_of_range: true,
        });
    }
    let value = plot
        .cells()
        .filter(|&(_, d, _)| {
            let secs = d as f64 * sec_per_frame;
            secs >= low_s && secs < high_s
        })
        .map(|(_, _, v)| v)
        .fold(0.0, f64::max);
    Ok(SiValue {
        value,
        out_of_range: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::chroma::ChromaSequence;
    use crate::metrics::ssm::{ssm, SsmParams};

    fn repeated(period: usize, times: usize) -> Array2<f64> {
        let n = period * times;
        Array2::from_shape_fn((n, n), |(i, j)| {
            if (i as i64 - j as i64) % period as i64 == 0 {
                1.0
            } else {
                -2.0
            }
        })
    }

    #[test]
    fn plot_has_triangle_shape() {
        let plot = scape_plot(&repeated(2, 3), 1000).unwrap();
        assert_eq!(plot.cells().count(), 6 * 7 / 2);
        assert!(plot.get(0, 6).is_none());
        assert!(plot.get(2, 6).is_some());
        assert!(plot.cells().all(|(_, _, v)| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn compile_identity_idempotence_commutativity() {
        let a = scape_plot(&repeated(2, 3), 1000).unwrap();
        let b = scape_plot(&repeated(3, 3), 1000).unwrap();
        assert_eq!(compile_plots(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(compile_plots(&[a.clone(), a.clone()]).unwrap(), a);
        let ab = compile_plots(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab, compile_plots(&[b.clone(), a.clone()]).unwrap());
        for p in [&a, &b] {
            for (c, d, v) in p.cells() {
                assert!(ab.get(c, d).unwrap() >= v);
            }
        }
        assert_eq!(ab.frames(), 9);
        assert!(compile_plots(&[]).is_err());
    }

    #[test]
    fn si_band_selection() {
        let plot = scape_plot(&repeated(3, 4), 1000).unwrap();
        let short = si(&plot, 3.0, 4.0).unwrap().value;
        assert!((short - 0.75).abs() < 1e-12);
        let long = si(&plot, 4.0, f64::INFINITY).unwrap().value;
        assert!(long < short);
        let beyond = si(&plot, 15.0, f64::INFINITY).unwrap();
        assert!(beyond.out_of_range);
        assert_eq!(beyond.value, 0.0);
        assert!(si(&plot, 8.0, 3.0).is_err());
    }

    #[test]
    fn silence_scores_zero() {
        let c = ChromaSequence {
            frames: vec![[0.0; 12]; 20],
            frame_ms: 1000,
        };
        let plot = scape_plot(&ssm(&c, &SsmParams::default()), 1000).unwrap();
        for (lo, hi) in [(3.0, 8.0), (8.0, 15.0), (15.0, f64::INFINITY)] {
            assert_eq!(si(&plot, lo, hi).unwrap().value, 0.0);
        }
    }

    #[test]
    fn image_outputs() {
        let plot = scape_plot(&repeated(2, 2), 500).unwrap();
        let mut png_bytes = Vec::new();
        plot.write_png(&mut png_bytes).unwrap();
        assert_eq!(&png_bytes[1..4], b"PNG");
        let mut pgm = Vec::new();
        plot.write_pgm(&mut pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n4 4\n255\n"));
        assert_eq!(pgm.len(), 11 + 16);
        let mut csv_bytes = Vec::new();
        plot.write_csv(&mut csv_bytes).unwrap();
        let text = String::from_utf8(csv_bytes).unwrap();
        assert!(text.starts_with("center,duration,fitness\n"));
        assert_eq!(text.lines().count(), 1 + 10);
    }
}
