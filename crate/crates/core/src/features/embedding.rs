use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, LineError, Result};
use crate::nn::{Mat, Scalar};

/// String keys mapped to dense row ids. Row 0 is reserved for unknown keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds from keys in order; repeated keys keep their first position.
    pub fn new<S: AsRef<str>>(keys: impl IntoIterator<Item = S>) -> Self {
        let mut v = Vocab::default();
        for k in keys {
            v.push(k.as_ref());
        }
        v
    }

    fn push(&mut self, key: &str) -> bool {
        if self.index.contains_key(key) {
            return false;
        }
        self.items.push(key.to_string());
        self.index.insert(key.to_string(), self.items.len());
        true
    }

    /// Row for `key`, 0 when absent.
    pub fn id(&self, key: &str) -> usize {
        self.index.get(key).copied().unwrap_or(0)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    /// Number of rows including the unknown row.
    pub fn rows(&self) -> usize {
        self.items.len() + 1
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

/// Embedding rows keyed by string; lookup of an absent key yields the unknown row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<F> {
    pub vocab: Vocab,
    /// `vocab.rows() x dim`, row 0 is the unknown vector.
    pub vectors: Mat<F>,
    pub trainable: bool,
}

impl<F: Scalar> EmbeddingTable<F> {
    pub fn dim(&self) -> usize {
        self.vectors.cols
    }

    pub fn lookup(&self, key: &str) -> &[F] {
        self.vectors.row(self.vocab.id(key))
    }

    pub fn unk(&self) -> &[F] {
        self.vectors.row(0)
    }

    /// Uniform `[-scale, scale]` rows for every key and the unknown row.
    pub fn random<R: Rng>(vocab: Vocab, dim: usize, scale: f64, rng: &mut R) -> Self {
        let vectors = Mat::uniform(vocab.rows(), dim, scale, rng);
        EmbeddingTable {
            vocab,
            vectors,
            trainable: true,
        }
    }

    /// A table over `keys` whose rows are copied from `self`; keys this table
    /// lacks start from the unknown vector.
    pub fn project<S: AsRef<str>>(&self, keys: impl IntoIterator<Item = S>) -> Self {
        let vocab = Vocab::new(keys);
        let mut vectors = Mat::zeros(vocab.rows(), self.dim());
        vectors.row_mut(0).copy_from_slice(self.unk());
        for (i, k) in vocab.items().iter().enumerate() {
            vectors.row_mut(i + 1).copy_from_slice(self.lookup(k));
        }
        EmbeddingTable {
            vocab,
            vectors,
            trainable: self.trainable,
        }
    }
}

/// A loaded table plus the lines that were skipped.
#[derive(Debug, Clone)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable<f32>,
    pub rejected: Vec<LineError>,
}

/// Reads `word v1 ... v_dim` lines. Rows with the wrong width, unparsable
/// values or a repeated word are rejected; the unknown vector is the mean of
/// the accepted rows.
pub fn load_word_embeddings(path: &Path, dim: usize) -> Result<LoadedEmbeddings> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_word_embeddings(BufReader::new(file), dim).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_word_embeddings<R: BufRead>(reader: R, dim: usize) -> Result<LoadedEmbeddings> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    let mut vocab = Vocab::default();
    let mut data: Vec<f32> = Vec::new();
    let mut rejected = Vec::new();
    let mut seen_lines = 0;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Data(e.to_string()))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        seen_lines += 1;
        let reject = |message: String| LineError { line: n + 1, message };
        let values: std::result::Result<Vec<f32>, _> = parts.map(str::parse::<f32>).collect();
        let values = match values {
            Ok(v) if v.len() == dim && v.iter().all(|x| x.is_finite()) => v,
            Ok(v) if v.len() != dim => {
                rejected.push(reject(format!("expected {dim} values, found {}", v.len())));
                continue;
            }
            Ok(_) => {
                rejected.push(reject("non-finite value".into()));
                continue;
            }
            Err(e) => {
                rejected.push(reject(format!("bad value: {e}")));
                continue;
            }
        };
        if !vocab.push(word) {
            rejected.push(reject(format!("duplicate word {word:?}")));
            continue;
        }
        data.extend(values);
    }
    if seen_lines == 0 {
        return Err(Error::Data("embedding file is empty".into()));
    }
    let n = vocab.items().len();
    if n == 0 {
        return Err(Error::Data(format!("no row has dimension {dim}")));
    }
    let mut vectors = Mat::zeros(n + 1, dim);
    let mut mean = vec![0f64; dim];
    for r in 0..n {
        let row = &data[r * dim..(r + 1) * dim];
        vectors.row_mut(r + 1).copy_from_slice(row);
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    for (u, m) in vectors.row_mut(0).iter_mut().zip(&mean) {
        *u = (*m / n as f64) as f32;
    }
    Ok(LoadedEmbeddings {
        table: EmbeddingTable {
            vocab,
            vectors,
            trainable: true,
        },
        rejected,
    })
}

/// `out[t] = [e(t-1); e(t); e(t+1)]` with zero rows past either end.
pub fn window_concat<F: Scalar>(e: &Mat<F>) -> Mat<F> {
    let (t_len, d) = (e.rows, e.cols);
    let mut out = Mat::zeros(t_len, 3 * d);
    for t in 0..t_len {
        let row = out.row_mut(t);
        if t > 0 {
            row[..d].copy_from_slice(e.row(t - 1));
        }
        row[d..2 * d].copy_from_slice(e.row(t));
        if t + 1 < t_len {
            row[2 * d..].copy_from_slice(e.row(t + 1));
        }
    }
    out
}

/// Gradient of [`window_concat`]: folds each `3d` row back onto the three
/// source positions.
pub fn window_backward<F: Scalar>(d_out: &Mat<F>, d: usize) -> Mat<F> {
    let t_len = d_out.rows;
    let mut de = Mat::zeros(t_len, d);
    for t in 0..t_len {
        let g = d_out.row(t);
        let mut add = |dst: usize, src: &[F]| {
            for (a, &b) in de.row_mut(dst).iter_mut().zip(src) {
                *a = *a + b;
            }
        };
        if t > 0 {
            add(t - 1, &g[..d]);
        }
        add(t, &g[d..2 * d]);
        if t + 1 < t_len {
            add(t + 1, &g[2 * d..3 * d]);
        }
    }
    de
}
