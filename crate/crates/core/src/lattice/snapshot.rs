//! Field snapshots: text header, then row-major little-endian f64 payload.
//!
//! ```text
//! isodyn-snapshot 1
//! shape <n1> <n2> <n3> <k_inner> <d_inner>
//! extents <l1> <l2> <l3> <l_inner>
//! spacings <h1> <h2> <h3> <dX>
//! lambda <Λ>
//! dt <dt>
//! t <t>
//! endianness little
//! fields <name> <name> ...
//! payload <bytes>
//! end
//! ```
//! Each field contributes D components back to back.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{AlgebraField, LatticeSpec, ScalarField};
use crate::error::{IsoError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub spec: LatticeSpec,
    pub t: f64,
    pub fields: Vec<(String, AlgebraField)>,
}

fn bad(m: impl Into<String>) -> IsoError {
    IsoError::Snapshot(m.into())
}

impl Snapshot {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let s = &self.spec;
        let names: Vec<&str> = self.fields.iter().map(|(n, _)| n.as_str()).collect();
        if names.iter().any(|n| n.is_empty() || n.contains(char::is_whitespace)) {
            return Err(bad("field names must be non-empty and contain no whitespace"));
        }
        let count = self.fields.len() * s.d_inner * s.len();
        writeln!(w, "isodyn-snapshot 1")?;
        writeln!(w, "shape {} {} {} {} {}", s.n1, s.n2, s.n3, s.k_inner, s.d_inner)?;
        writeln!(w, "extents {:?} {:?} {:?} {:?}", s.l1, s.l2, s.l3, s.l_inner)?;
        writeln!(w, "spacings {:?} {:?} {:?} {:?}", s.h1(), s.h2(), s.h3(), s.dx_inner())?;
        writeln!(w, "lambda {:?}", s.lambda)?;
        writeln!(w, "dt {:?}", s.dt)?;
        writeln!(w, "t {:?}", self.t)?;
        writeln!(w, "endianness little")?;
        writeln!(w, "fields {}", names.join(" "))?;
        writeln!(w, "payload {}", count * 8)?;
        writeln!(w, "end")?;
        let mut bytes = Vec::with_capacity(count * 8);
        for (_, f) in &self.fields {
            if !f.spec().same_shape(s) || f.dim() != s.d_inner {
                return Err(IsoError::Shape("snapshot field does not match spec".into()));
            }
            for c in &f.comps {
                for v in &c.values {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut lines = Vec::new();
        loop {
            let mut line = String::new();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("truncated header"));
            }
            let line = line.trim_end().to_string();
            if line == "end" {
                break;
            }
            lines.push(line);
            if lines.len() > 64 {
                return Err(bad("header too long"));
            }
        }
        if lines.first().map(String::as_str) != Some("isodyn-snapshot 1") {
            return Err(bad("missing magic line"));
        }
        let get = |key: &str| -> Result<Vec<String>> {
            lines
                .iter()
                .find_map(|l| {
                    let mut it = l.split_whitespace();
                    (it.next() == Some(key)).then(|| it.map(String::from).collect())
                })
                .ok_or_else(|| bad(format!("missing header key {key}")))
        };
        let nums = |key: &str, n: usize| -> Result<Vec<f64>> {
            let v = get(key)?;
            if v.len() != n {
                return Err(bad(format!("{key}: expected {n} values")));
            }
            v.iter().map(|x| x.parse::<f64>().map_err(|_| bad(format!("{key}: bad number {x}")))).collect()
        };
        let shape: Vec<usize> = {
            let v = get("shape")?;
            if v.len() != 5 {
                return Err(bad("shape: expected 5 values"));
            }
            v.iter().map(|x| x.parse().map_err(|_| bad("shape: bad integer"))).collect::<Result<_>>()?
        };
        let ext = nums("extents", 4)?;
        let spec = LatticeSpec {
            n1: shape[0],
            n2: shape[1],
            n3: shape[2],
            k_inner: shape[3],
            d_inner: shape[4],
            l1: ext[0],
            l2: ext[1],
            l3: ext[2],
            l_inner: ext[3],
            lambda: nums("lambda", 1)?[0],
            dt: nums("dt", 1)?[0],
        };
        spec.validate().map_err(|e| bad(e.to_string()))?;
        let t = nums("t", 1)?[0];
        if get("endianness")? != ["little"] {
            return Err(bad("only little-endian payloads are supported"));
        }
        let names = get("fields")?;
        let payload: usize = get("payload")?
            .first()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("payload: bad size"))?;
        let n = spec.len();
        if payload != names.len() * spec.d_inner * n * 8 {
            return Err(bad("payload size inconsistent with shape"));
        }
        let mut bytes = vec![0u8; payload];
        r.read_exact(&mut bytes).map_err(|_| bad("truncated payload"))?;
        let mut vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut fields = Vec::new();
        for name in names {
            let comps = (0..spec.d_inner)
                .map(|_| ScalarField { spec, values: vals.by_ref().take(n).collect() })
                .collect();
            fields.push((name, AlgebraField { comps }));
        }
        Ok(Snapshot { spec, t, fields })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }

    pub fn field(&self, name: &str) -> Option<&AlgebraField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}
