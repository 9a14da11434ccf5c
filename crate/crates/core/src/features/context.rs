use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    id: String,
    vectors: Vec<Vec<f32>>,
}

/// Precomputed per-token contextual vectors keyed by tweet id. The file is
/// JSONL: a `{"dim": N}` header line, then one `{"id", "vectors"}` record
/// per tweet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextualVectors {
    pub dim: usize,
    order: Vec<String>,
    by_id: HashMap<String, Vec<Vec<f32>>>,
}

impl ContextualVectors {
    pub fn new(dim: usize) -> Self {
        ContextualVectors {
            dim,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, id: &str, vectors: Vec<Vec<f32>>) -> Result<()> {
        if let Some(bad) = vectors.iter().position(|v| v.len() != self.dim) {
            return Err(Error::Data(format!(
                "contextual vectors for {id}: token {bad} has length {}, expected {}",
                vectors[bad].len(),
                self.dim
            )));
        }
        if self.by_id.insert(id.to_string(), vectors).is_none() {
            self.order.push(id.to_string());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Vectors for `id`, which must cover exactly `n_tokens` tokens.
    pub fn get(&self, id: &str, n_tokens: usize) -> Result<&[Vec<f32>]> {
        let v = self
            .by_id
            .get(id)
            .ok_or_else(|| Error::Data(format!("contextual vectors missing tweet id {id}")))?;
        if v.len() != n_tokens {
            return Err(Error::Data(format!(
                "contextual vectors for {id} cover {} tokens, record has {n_tokens}",
                v.len()
            )));
        }
        Ok(v)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let bad = |n: usize, m: String| Error::Data(format!("{}:{}: {m}", path.display(), n + 1));
        let header = loop {
            match lines.next() {
                None => return Err(Error::Data(format!("{}: missing header", path.display()))),
                Some((n, line)) => {
                    let line = line.map_err(|e| Error::io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str::<Header>(&line).map_err(|e| bad(n, e.to_string()))?;
                }
            }
        };
        let mut out = ContextualVectors::new(header.dim);
        for (n, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: Entry = serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?;
            if out.by_id.contains_key(&e.id) {
                return Err(bad(n, format!("duplicate tweet id {}", e.id)));
            }
            out.insert(&e.id, e.vectors).map_err(|e| bad(n, e.to_string()))?;
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e: std::io::Error| Error::io(path, e);
        let json = |e: serde_json::Error| Error::Data(e.to_string());
        writeln!(w, "{}", serde_json::to_string(&Header { dim: self.dim }).map_err(json)?).map_err(io)?;
        for id in &self.order {
            let entry = Entry {
                id: id.clone(),
                vectors: self.by_id[id].clone(),
            };
            writeln!(w, "{}", serde_json::to_string(&entry).map_err(json)?).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn missing_id_and_length_mismatch() {
        let mut c = ContextualVectors::new(2);
        c.insert("t1", vec![vec![0.5, 1.0]]).unwrap();
        assert!(c.get("t1", 1).is_ok());
        assert!(c.get("t1", 2).is_err());
        assert!(c.get("t2", 1).is_err());
        assert!(c.insert("t3", vec![vec![1.0]]).is_err());
    }

    #[test]
    fn header_required() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ctx.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"vectors\":[]}\n").unwrap();
        assert!(ContextualVectors::read(&p).is_err());
        std::fs::write(&p, "").unwrap();
        assert!(ContextualVectors::read(&p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bit_exact(
            dim in 1usize..5,
            raw in prop::collection::vec(prop::collection::vec(any::<u32>(), 0..20), 1..6),
        ) {
            let mut c = ContextualVectors::new(dim);
            for (i, bits) in raw.iter().enumerate() {
                let vals: Vec<f32> = bits
                    .iter()
                    .map(|&b| f32::from_bits(b))
                    .map(|v| if v.is_finite() { v } else { 0.25 })
                    .collect();
                let vecs = vals.chunks(dim).filter(|c| c.len() == dim).map(<[f32]>::to_vec).collect();
                c.insert(&format!("id{i}"), vecs).unwrap();
            }
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("ctx.jsonl");
            c.write(&p).unwrap();
            let back = ContextualVectors::read(&p).unwrap();
            for id in &c.order {
                let a: Vec<u32> = c.by_id[id].iter().flatten().map(|v| v.to_bits()).collect();
                let b: Vec<u32> = back.by_id[id].iter().flatten().map(|v| v.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
            let p2 = dir.path().join("again.jsonl");
            back.write(&p2).unwrap();
            prop_assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
        }
    }
}
