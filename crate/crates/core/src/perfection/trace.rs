use super::PerfectionError;
use crate::complex::{check_quasi_iso_above, verify_certificate_above, ChainMap, FComplex, FMod, QuasiIsoCertificate};
use crate::linalg::{Howell, Mat, Modulus};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

/// A matrix over `Z/q`, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<u64>,
}

impl MatJson {
    pub fn of(m: &Mat) -> MatJson {
        MatJson { rows: m.rows, cols: m.cols, entries: m.data.clone() }
    }

    pub fn to_mat(&self, md: Modulus) -> Result<Mat, String> {
        if self.entries.len() != self.rows * self.cols {
            return Err(format!("matrix {}x{} has {} entries", self.rows, self.cols, self.entries.len()));
        }
        Ok(Mat { md, rows: self.rows, cols: self.cols, data: self.entries.iter().map(|&x| md.red(x)).collect() })
    }
}

/// A finite module `S/R` with its operators; spans as generating rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModJson {
    pub dim: usize,
    pub sub: Vec<Vec<u64>>,
    pub rel: Vec<Vec<u64>>,
    pub ops: Vec<MatJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub modulus: Modulus,
    pub lo: i32,
    pub n_ring_ops: usize,
    pub nops: usize,
    pub terms: Vec<ModJson>,
    pub diffs: Vec<MatJson>,
}

impl ComplexJson {
    pub fn of(c: &FComplex) -> ComplexJson {
        ComplexJson {
            modulus: c.md,
            lo: c.lo,
            n_ring_ops: c.n_ring_ops,
            nops: c.nops,
            terms: c
                .terms
                .iter()
                .map(|t| ModJson { dim: t.dim, sub: t.sub.rows(), rel: t.rel.rows(), ops: t.ops.iter().map(MatJson::of).collect() })
                .collect(),
            diffs: c.diffs.iter().map(MatJson::of).collect(),
        }
    }

    pub fn to_complex(&self) -> Result<FComplex, String> {
        let md = self.modulus;
        let span = |rows: &Vec<Vec<u64>>, dim: usize| -> Result<Howell, String> {
            if rows.iter().any(|r| r.len() != dim) {
                return Err("span row of wrong length".into());
            }
            Ok(Howell::of_rows(md, dim, rows.clone()))
        };
        let mut terms = vec![];
        for t in &self.terms {
            let ops = t.ops.iter().map(|o| o.to_mat(md)).collect::<Result<Vec<_>, _>>()?;
            if ops.iter().any(|o| o.rows != t.dim || o.cols != t.dim) || ops.len() != self.nops {
                return Err("operator shape".into());
            }
            terms.push(FMod { md, dim: t.dim, sub: span(&t.sub, t.dim)?, rel: span(&t.rel, t.dim)?, ops, n_ring_ops: self.n_ring_ops });
        }
        let diffs = self.diffs.iter().map(|d| d.to_mat(md)).collect::<Result<Vec<_>, _>>()?;
        if diffs.len() + 1 != terms.len().max(1) {
            return Err("need one differential between consecutive terms".into());
        }
        let c = FComplex { md, lo: self.lo, terms, diffs, nops: self.nops, n_ring_ops: self.n_ring_ops };
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

/// Hex SHA-256 of the canonical JSON form.
pub fn hash_complex(c: &ComplexJson) -> String {
    let s = serde_json::to_string(c).expect("serialisable");
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// The map goes from the leg's `from` complex to its `to` complex.
    Forward,
    /// The map goes from `to` back to `from`.
    Backward,
}

/// One quasi-isomorphism of the zig-zag, certified in degrees `>= check_from`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub stage: String,
    pub from: String,
    pub to: String,
    pub direction: Direction,
    pub map_lo: i32,
    pub maps: Vec<MatJson>,
    pub check_from: i32,
    pub certificate: QuasiIsoCertificate,
}

/// Zig-zag of certified quasi-isomorphisms from the input to the output,
/// with every complex stored under its hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub input: String,
    pub output: String,
    pub complexes: BTreeMap<String, ComplexJson>,
    pub legs: Vec<Leg>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("leg {leg} ({stage}): {reason}")]
    Leg { leg: usize, stage: String, reason: String },
    #[error("trace: {0}")]
    Trace(String),
}

impl PipelineTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialisable")
    }

    pub fn from_json(s: &str) -> Result<PipelineTrace, TraceError> {
        serde_json::from_str(s).map_err(|e| TraceError::Trace(e.to_string()))
    }

    fn complex(&self, h: &str) -> Result<FComplex, String> {
        let c = self.complexes.get(h).ok_or_else(|| format!("no complex with hash {h}"))?;
        if hash_complex(c) != h {
            return Err(format!("complex {} does not match its hash", &h[..12.min(h.len())]));
        }
        c.to_complex()
    }

    /// Replays every leg; reports the first one that fails.
    pub fn verify(&self) -> Result<(), TraceError> {
        let mut cur = self.input.clone();
        if self.legs.is_empty() {
            self.complex(&cur).map_err(TraceError::Trace)?;
        }
        for (k, leg) in self.legs.iter().enumerate() {
            let fail = |reason: String| TraceError::Leg { leg: k, stage: leg.stage.clone(), reason };
            if leg.from != cur {
                return Err(fail("does not start where the previous leg ended".into()));
            }
            let a = self.complex(&leg.from).map_err(fail)?;
            let b = self.complex(&leg.to).map_err(fail)?;
            let (src, dst) = match leg.direction {
                Direction::Forward => (a, b),
                Direction::Backward => (b, a),
            };
            let maps = leg.maps.iter().map(|m| m.to_mat(src.md)).collect::<Result<Vec<_>, _>>().map_err(fail)?;
            let f = ChainMap::new(&src, &dst, |i| {
                let j = i - leg.map_lo;
                if j >= 0 && (j as usize) < maps.len() {
                    maps[j as usize].clone()
                } else {
                    Mat::zeros(src.md, src.dim(i), dst.dim(i))
                }
            });
            if let Err(e) = f.validate() {
                return Err(fail(format!("not a chain map: {e}")));
            }
            if !verify_certificate_above(&f, &leg.certificate, leg.check_from) {
                return Err(fail("quasi-isomorphism certificate does not verify".into()));
            }
            cur = leg.to.clone();
        }
        if cur != self.output {
            return Err(TraceError::Trace("last leg does not end at the output".into()));
        }
        Ok(())
    }
}

/// Accumulates legs while the passes run.
pub(crate) struct TraceBuilder {
    trace: PipelineTrace,
    current: FComplex,
    current_hash: String,
    from: i32,
}

impl TraceBuilder {
    pub fn new(input: &FComplex, from: i32) -> TraceBuilder {
        let j = ComplexJson::of(input);
        let h = hash_complex(&j);
        let mut complexes = BTreeMap::new();
        complexes.insert(h.clone(), j);
        TraceBuilder {
            trace: PipelineTrace { input: h.clone(), output: h.clone(), complexes, legs: vec![] },
            current: input.clone(),
            current_hash: h,
            from,
        }
    }

    pub fn current(&self) -> &FComplex {
        &self.current
    }

    fn push(&mut self, stage: &str, next: FComplex, map: ChainMap, direction: Direction) -> Result<(), PerfectionError> {
        let certificate = match check_quasi_iso_above(&map, self.from)? {
            Ok(c) => c,
            Err(refutation) => return Err(PerfectionError::NotQuasiIso { stage: stage.into(), refutation }),
        };
        let j = ComplexJson::of(&next);
        let h = hash_complex(&j);
        self.trace.complexes.insert(h.clone(), j);
        self.trace.legs.push(Leg {
            stage: stage.into(),
            from: self.current_hash.clone(),
            to: h.clone(),
            direction,
            map_lo: map.lo,
            maps: map.maps.iter().map(MatJson::of).collect(),
            check_from: self.from,
            certificate,
        });
        self.current = next;
        self.current_hash = h;
        Ok(())
    }

    /// `map: current -> next`.
    pub fn forward(&mut self, stage: &str, next: FComplex, map: ChainMap) -> Result<(), PerfectionError> {
        self.push(stage, next, map, Direction::Forward)
    }

    /// `map: next -> current`.
    pub fn backward(&mut self, stage: &str, next: FComplex, map: ChainMap) -> Result<(), PerfectionError> {
        self.push(stage, next, map, Direction::Backward)
    }

    pub fn finish(mut self) -> (FComplex, PipelineTrace) {
        self.trace.output = self.current_hash.clone();
        (self.current, self.trace)
    }
}
