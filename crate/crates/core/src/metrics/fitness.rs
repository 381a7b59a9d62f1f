//! Segment fitness from an optimal path family over a self-similarity matrix.
//!
//! For a segment `[start, end]` the matrix is restricted to the segment's
//! columns while rows span the whole piece. A path runs through every
//! segment column from first to last using steps (1,1), (2,1) or (1,2)
//! (row, column); a path family is a set of paths whose row ranges do not
//! overlap. Dynamic programming finds the family of maximal total
//! similarity; fitness is the harmonic mean of its normalized score and
//! normalized coverage, both with the segment's trivial self-match removed.

use ndarray::Array2;

use crate::error::{arg_err, Result};

/// Cells `(row, segment_column)` of one path, in order.
pub type Path = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Fitness {
    pub score: f64,
    pub score_norm: f64,
    pub coverage: usize,
    pub coverage_norm: f64,
    pub fitness: f64,
    pub family: Vec<Path>,
}

#[derive(Clone, Copy)]
enum Pred {
    None,
    /// from (n-1, m-1)
    Diag,
    /// from (n-2, m-1)
    SkipRow,
    /// from (n-1, m-2)
    SkipCol,
    /// outside state carried from (n-1, 0)
    Idle,
    /// outside state entered after a path ended at (n-1, M)
    Closed,
}

/// Best total similarity of a path family for the segment, plus the family.
pub fn optimal_path_family(s: &Array2<f64>, start: usize, end: usize) -> Result<(f64, Vec<Path>)> {
    let n_rows = s.nrows();
    if s.ncols() != n_rows {
        return arg_err("similarity matrix must be square");
    }
    if start > end || end >= n_rows {
        return arg_err(format!(
            "segment [{start}, {end}] invalid for {n_rows} frames"
        ));
    }
    let m_len = end - start + 1;
    let width = m_len + 1;
    let neg = f64::NEG_INFINITY;
    let mut d = vec![neg; n_rows * width];
    let mut pred = vec![Pred::None; n_rows * width];
    let at = |n: usize, m: usize| n * width + m;
    let seg = |n: usize, m: usize| s[[n, start + m - 1]];

    d[at(0, 0)] = 0.0;
    d[at(0, 1)] = seg(0, 1);
    for n in 1..n_rows {
        let (idle, closed) = (d[at(n - 1, 0)], d[at(n - 1, m_len)]);
        if closed > idle {
            d[at(n, 0)] = closed;
            pred[at(n, 0)] = Pred::Closed;
        } else {
            d[at(n, 0)] = idle;
            pred[at(n, 0)] = Pred::Idle;
        }
        d[at(n, 1)] = d[at(n, 0)] + seg(n, 1);
        for m in 2..=m_len {
            let mut best = d[at(n - 1, m - 1)];
            let mut p = Pred::Diag;
            if n >= 2 && d[at(n - 2, m - 1)] > best {
                best = d[at(n - 2, m - 1)];
                p = Pred::SkipRow;
            }
            if m >= 3 && d[at(n - 1, m - 2)] > best {
                best = d[at(n - 1, m - 2)];
                p = Pred::SkipCol;
            }
            if best > neg {
                d[at(n, m)] = best + seg(n, m);
                pred[at(n, m)] = p;
            }
        }
    }

    let last = n_rows - 1;
    let (score, mut n, mut m) = if d[at(last, m_len)] >= d[at(last, 0)] {
        (d[at(last, m_len)], last, m_len)
    } else {
        (d[at(last, 0)], last, 0)
    };

    let mut family: Vec<Path> = Vec::new();
    let mut current: Path = Vec::new();
    loop {
        if m == 0 {
            if n == 0 {
                break;
            }
            if let Pred::Closed = pred[at(n, 0)] {
                m = m_len;
            }
            n -= 1;
            continue;
        }
        current.push((n, m - 1));
        if m == 1 {
            current.reverse();
            family.push(std::mem::take(&mut current));
            m = 0;
            continue;
        }
        match pred[at(n, m)] {
            Pred::Diag => {
                n -= 1;
                m -= 1;
            }
            Pred::SkipRow => {
                n -= 2;
                m -= 1;
            }
            Pred::SkipCol => {
                n -= 1;
                m -= 2;
            }
            _ => unreachable!("reachable cell without predecessor"),
        }
    }
    family.reverse();
    Ok((score, family))
}

/// Normalized score and coverage of a given family for a segment of
/// `segment_len` frames in a piece of `n_frames` frames.
pub fn family_fitness(score: f64, family: &[Path], segment_len: usize, n_frames: usize) -> (f64, usize, f64, f64) {
    let cells: usize = family.iter().map(Vec::len).sum();
    let coverage: usize = family
        .iter()
        .map(|p| p.last().unwrap().0 - p.first().unwrap().0 + 1)
        .sum();
    let m = segment_len as f64;
    let score_norm = if cells > 0 {
        ((score - m) / cells as f64).max(0.0)
    } else {
        0.0
    };
    let coverage_norm = ((coverage as f64 - m) / n_frames as f64).max(0.0);
    let fitness = if score_norm + coverage_norm > 0.0 {
        (2.0 * score_norm * coverage_norm / (score_norm + coverage_norm)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (score_norm, coverage, coverage_norm, fitness)
}

pub fn fitness(s: &Array2<f64>, start: usize, end: usize) -> Result<Fitness> {
    let (score, family) = optimal_path_family(s, start, end)?;
    let (score_norm, coverage, coverage_norm, fitness) =
        family_fitness(score, &family, end - start + 1, s.nrows());
    Ok(Fitness {
        score,
        score_norm,
        coverage,
        coverage_norm,
        fitness,
        family,
    })
}
