//! `(X, Y, Z)` sample sets.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::seed;

/// One of the three variable blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Block {
    X,
    Y,
    Z,
}

impl Block {
    fn prefix(self) -> &'static str {
        match self {
            Block::X => "x",
            Block::Y => "y",
            Block::Z => "z",
        }
    }
}

/// `n` i.i.d. samples of `(X, Y, Z)`; `d_z = 0` means no conditioning block.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    x: RowMatrix,
    y: RowMatrix,
    z: RowMatrix,
}

/// Row-disjoint train/eval halves of a [`SampleSet`].
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: SampleSet,
    pub eval: SampleSet,
}

impl SampleSet {
    pub fn new(x: RowMatrix, y: RowMatrix, z: RowMatrix) -> Result<Self> {
        let n = x.rows();
        for m in [&y, &z] {
            if m.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.rows(),
                });
            }
        }
        for (m, name) in [(&x, "x"), (&y, "y"), (&z, "z")] {
            if !m.is_finite() {
                return Err(Error::NonFinite(format!("{name} block")));
            }
        }
        Ok(Self { x, y, z })
    }

    /// Sample set without a conditioning block.
    pub fn unconditional(x: RowMatrix, y: RowMatrix) -> Result<Self> {
        let n = x.rows();
        Self::new(x, y, RowMatrix::zeros(n, 0))
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// `(d_x, d_y, d_z)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x.cols(), self.y.cols(), self.z.cols())
    }

    pub fn x(&self) -> &RowMatrix {
        &self.x
    }

    pub fn y(&self) -> &RowMatrix {
        &self.y
    }

    pub fn z(&self) -> &RowMatrix {
        &self.z
    }

    pub fn block(&self, b: Block) -> &RowMatrix {
        match b {
            Block::X => &self.x,
            Block::Y => &self.y,
            Block::Z => &self.z,
        }
    }

    pub fn into_blocks(self) -> (RowMatrix, RowMatrix, RowMatrix) {
        (self.x, self.y, self.z)
    }

    /// Concatenate the requested blocks in canonical `X | Y | Z` order.
    pub fn project(&self, blocks: &[Block]) -> Result<RowMatrix> {
        if blocks.is_empty() {
            return Err(Error::Empty("block selection"));
        }
        let mut sel = blocks.to_vec();
        sel.sort_unstable();
        sel.dedup();
        let parts: Vec<&RowMatrix> = sel.iter().map(|&b| self.block(b)).collect();
        RowMatrix::hstack(&parts)
    }

    pub fn select_rows(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            x: self.x.select_rows(indices),
            y: self.y.select_rows(indices),
            z: self.z.select_rows(indices),
        }
    }

    /// Randomly permute the rows and cut them into halves; the training half
    /// receives the extra row when `n` is odd.
    pub fn split_half(&self, seed: u64) -> Result<SplitPair> {
        let (train, eval) = split_indices(self.n(), seed)?;
        Ok(SplitPair {
            train: self.select_rows(&train),
            eval: self.select_rows(&eval),
        })
    }

    /// Keep `x` in place and move every `(y, z)` row jointly by a random
    /// derangement, so no sample keeps its own partner. Emulates draws from
    /// `p(x) p(y, z)`.
    pub fn product_shuffle(&self, seed: u64) -> Result<SampleSet> {
        let pi = derangement(self.n(), &mut seed::rng(seed))?;
        Ok(SampleSet {
            x: self.x.clone(),
            y: self.y.select_rows(&pi),
            z: self.z.select_rows(&pi),
        })
    }

    /// Replace the `y` block, keeping `x` and `z`.
    pub fn with_y(&self, y: RowMatrix) -> Result<SampleSet> {
        SampleSet::new(self.x.clone(), y, self.z.clone())
    }

    /// Column names in file order: `x0.., y0.., z0..`.
    pub fn header(dims: (usize, usize, usize)) -> Vec<String> {
        let (dx, dy, dz) = dims;
        [(Block::X, dx), (Block::Y, dy), (Block::Z, dz)]
            .iter()
            .flat_map(|&(b, d)| (0..d).map(move |i| format!("{}{i}", b.prefix())))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        let header = Self::header(self.dims());
        w.write_record(&header).map_err(csv_write_err)?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.n() {
            record.clear();
            for m in [&self.x, &self.y, &self.z] {
                // `Display` for f64 prints the shortest string that round-trips
                record.extend(m.row(i).iter().map(|v| v.to_string()));
            }
            w.write_record(&record).map_err(csv_write_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Parse a CSV with header `x0..x{d_x−1},y0..,z0..`.
    pub fn read_csv<R: Read>(input: R, dx: usize, dy: usize, dz: usize) -> Result<SampleSet> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .quoting(false)
            .from_reader(input);
        let expected = Self::header((dx, dy, dz));
        let header = r.headers().map_err(|e| csv_read_err(e, 1))?.clone();
        let got: Vec<&str> = header.iter().map(str::trim).collect();
        if got != expected {
            return Err(Error::Csv {
                line: 1,
                message: format!(
                    "header mismatch: expected [{}], found [{}]",
                    expected.join(","),
                    got.join(",")
                ),
            });
        }
        let width = dx + dy + dz;
        let (mut xs, mut ys, mut zs) = (Vec::new(), Vec::new(), Vec::new());
        let mut n = 0;
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_read_err(e, n as u64 + 2))?;
            let line = rec.position().map_or(n as u64 + 2, |p| p.line());
            if rec.len() != width {
                return Err(Error::Csv {
                    line,
                    message: format!("expected {width} fields, found {}", rec.len()),
                });
            }
            for (j, cell) in rec.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Csv {
                    line,
                    message: format!("column {}: cannot parse {cell:?} as a number", expected[j]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        line,
                        message: format!("column {}: non-finite value {cell:?}", expected[j]),
                    });
                }
                if j < dx {
                    xs.push(v);
                } else if j < dx + dy {
                    ys.push(v);
                } else {
                    zs.push(v);
                }
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::Empty("no samples"));
        }
        SampleSet::new(
            RowMatrix::new(n, dx, xs)?,
            RowMatrix::new(n, dy, ys)?,
            RowMatrix::new(n, dz, zs)?,
        )
    }

    pub fn load_csv(path: impl AsRef<Path>, dx: usize, dy: usize, dz: usize) -> Result<SampleSet> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), dx, dy, dz)
    }
}

fn csv_write_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn csv_read_err(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Csv {
        line,
        message: e.to_string(),
    }
}

/// Shuffle `0..n` and cut it into `(ceil(n/2), floor(n/2))` index sets.
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let eval = idx.split_off(n.div_ceil(2));
    Ok((idx, eval))
}

/// Split the rows of a matrix into random halves (`ceil`, `floor`).
pub fn split_rows(m: &RowMatrix, seed: u64) -> Result<(RowMatrix, RowMatrix)> {
    let (a, b) = split_indices(m.rows(), seed)?;
    Ok((m.select_rows(&a), m.select_rows(&b)))
}

/// A uniformly random permutation of `0..n` with no fixed points, by
/// rejection: redraw until no index maps to itself.
pub fn derangement(n: usize, rng: &mut seed::Rng) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut pi: Vec<usize> = (0..n).collect();
    loop {
        pi.shuffle(rng);
        if pi.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(pi);
        }
    }
}
