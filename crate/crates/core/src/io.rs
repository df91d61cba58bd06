//! On-disk formats.
//!
//! Pattern file (JSON Lines, UTF-8, LF-terminated):
//!
//! ```text
//! {"meta":{"n":2,"k":2,"d":1,"W":3}}
//! {"id":0,"points":[[0.0],[1.0]],"weights":[2,1]}
//! {"id":1,"points":[[0.0],[1.0]],"weights":[1,2]}
//! ```
//!
//! `W` and `weights` are omitted for unweighted instances. The instance
//! fingerprint is FNV-1a 64 over exactly these bytes, in lowercase hex.
//!
//! Coreset sidecar: a `{"meta":{...}}` line followed by one
//! `{"index":i,"weight":w}` line per sampled entry.

use std::fs::File;
use std::hash::Hasher;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coreset::{Coreset, CoresetEntry};
use crate::error::{Error, Result};
use crate::pattern::{Instance, Pattern};

#[derive(Debug, Serialize, Deserialize)]
struct MetaLine<T> {
    meta: T,
}

#[derive(Debug, Serialize, Deserialize)]
struct PatternMeta {
    n: usize,
    k: usize,
    d: usize,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    total_weight: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PatternLine {
    id: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<u64>>,
}

pub fn write_patterns<W: Write>(inst: &Instance, mut out: W) -> Result<()> {
    let meta = MetaLine { meta: PatternMeta { n: inst.n(), k: inst.k(), d: inst.d(), total_weight: inst.total_weight() } };
    serde_json::to_writer(&mut out, &meta)?;
    out.write_all(b"\n")?;
    for (id, p) in inst.patterns().iter().enumerate() {
        let line = PatternLine { id, points: p.to_points(), weights: p.weights().map(<[u64]>::to_vec) };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn pattern_bytes(inst: &Instance) -> Vec<u8> {
    let mut buf = Vec::new();
    write_patterns(inst, &mut buf).expect("writing to memory cannot fail");
    buf
}

pub fn read_patterns<R: BufRead>(input: R) -> Result<Instance> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Data("empty pattern file".into()))??;
    let meta: MetaLine<PatternMeta> =
        serde_json::from_str(&header).map_err(|e| Error::Data(format!("pattern file header: {e}")))?;
    let meta = meta.meta;

    let mut patterns = Vec::with_capacity(meta.n);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let rec: PatternLine =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("pattern line {}: {e}", lineno + 2)))?;
        if rec.id != patterns.len() {
            return Err(Error::Data(format!("pattern id {} out of order (expected {})", rec.id, patterns.len())));
        }
        let p = match rec.weights {
            Some(w) => Pattern::weighted(rec.points, w)?,
            None => Pattern::new(rec.points)?,
        };
        patterns.push(p);
    }
    if patterns.len() != meta.n {
        return Err(Error::Data(format!("header says n={}, file has {} patterns", meta.n, patterns.len())));
    }
    let inst = Instance::new(patterns)?;
    if inst.k() != meta.k || inst.d() != meta.d || inst.total_weight() != meta.total_weight {
        return Err(Error::Data("pattern shape disagrees with header".into()));
    }
    Ok(inst)
}

pub fn load_patterns(path: &Path) -> Result<Instance> {
    read_patterns(BufReader::new(File::open(path)?))
}

pub fn save_patterns(inst: &Instance, path: &Path) -> Result<()> {
    write_atomic(path, |w| write_patterns(inst, w))
}

/// FNV-1a 64 of the canonical pattern-file bytes.
pub fn fingerprint(inst: &Instance) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(&pattern_bytes(inst));
    h.finish()
}

pub fn fingerprint_hex(fp: u64) -> String {
    format!("{fp:016x}")
}

#[derive(Debug, Serialize, Deserialize)]
struct CoresetMeta {
    r: usize,
    #[serde(rename = "T")]
    t_sum: f64,
    alpha: f64,
    pivot: usize,
    delta_tilde: f64,
    #[serde(default)]
    seed: Option<u64>,
    fingerprint: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoresetLine {
    index: usize,
    weight: f64,
}

pub fn write_coreset<W: Write>(cs: &Coreset, mut out: W) -> Result<()> {
    let meta = MetaLine {
        meta: CoresetMeta {
            r: cs.r,
            t_sum: cs.t_sum,
            alpha: cs.alpha,
            pivot: cs.pivot,
            delta_tilde: cs.delta_tilde,
            seed: cs.seed,
            fingerprint: fingerprint_hex(cs.fingerprint),
        },
    };
    serde_json::to_writer(&mut out, &meta)?;
    out.write_all(b"\n")?;
    for e in &cs.entries {
        serde_json::to_writer(&mut out, &CoresetLine { index: e.index, weight: e.weight })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_coreset<R: BufRead>(input: R) -> Result<Coreset> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Data("empty coreset file".into()))??;
    let meta: MetaLine<CoresetMeta> =
        serde_json::from_str(&header).map_err(|e| Error::Data(format!("coreset header: {e}")))?;
    let meta = meta.meta;
    let fingerprint = u64::from_str_radix(&meta.fingerprint, 16)
        .map_err(|_| Error::Data(format!("bad fingerprint `{}`", meta.fingerprint)))?;
    let mut entries = Vec::with_capacity(meta.r);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let rec: CoresetLine = serde_json::from_str(&line)?;
        if !(rec.weight > 0.0 && rec.weight.is_finite()) {
            return Err(Error::Data(format!("coreset weight {} must be positive", rec.weight)));
        }
        entries.push(CoresetEntry { index: rec.index, weight: rec.weight });
    }
    if entries.len() != meta.r {
        return Err(Error::Data(format!("coreset header says r={}, found {} entries", meta.r, entries.len())));
    }
    Ok(Coreset {
        entries,
        r: meta.r,
        t_sum: meta.t_sum,
        alpha: meta.alpha,
        pivot: meta.pivot,
        delta_tilde: meta.delta_tilde,
        seed: meta.seed,
        fingerprint,
    })
}

pub fn load_coreset(path: &Path) -> Result<Coreset> {
    read_coreset(BufReader::new(File::open(path)?))
}

pub fn save_coreset(cs: &Coreset, path: &Path) -> Result<()> {
    write_atomic(path, |w| write_coreset(cs, w))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Instance {
        let a = Pattern::weighted(vec![vec![0.0], vec![1.0]], vec![2, 1]).unwrap();
        let b = Pattern::weighted(vec![vec![0.0], vec![1.0]], vec![1, 2]).unwrap();
        Instance::new(vec![a, b]).unwrap()
    }

    #[test]
    fn canonical_bytes() {
        let text = String::from_utf8(pattern_bytes(&sample())).unwrap();
        assert_eq!(
            text,
            "{\"meta\":{\"n\":2,\"k\":2,\"d\":1,\"W\":3}}\n\
             {\"id\":0,\"points\":[[0.0],[1.0]],\"weights\":[2,1]}\n\
             {\"id\":1,\"points\":[[0.0],[1.0]],\"weights\":[1,2]}\n"
        );
    }

    #[test]
    fn fnv1a_reference_values() {
        let mut h = fnv::FnvHasher::default();
        h.write(b"");
        assert_eq!(h.finish(), 0xcbf29ce484222325);
        let mut h = fnv::FnvHasher::default();
        h.write(b"a");
        assert_eq!(h.finish(), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn rejects_bad_header() {
        let err = read_patterns("{\"meta\":{\"n\":3,\"k\":1,\"d\":1}}\n{\"id\":0,\"points\":[[1.0]]}\n".as_bytes());
        assert!(matches!(err, Err(Error::Data(_))));
    }

    #[test]
    fn rejects_mixed_total_weight() {
        let text = "{\"meta\":{\"n\":2,\"k\":1,\"d\":1,\"W\":2}}\n\
                    {\"id\":0,\"points\":[[1.0]],\"weights\":[2]}\n\
                    {\"id\":1,\"points\":[[1.0]],\"weights\":[3]}\n";
        assert!(matches!(read_patterns(text.as_bytes()), Err(Error::WeightMismatch { .. })));
    }
}
