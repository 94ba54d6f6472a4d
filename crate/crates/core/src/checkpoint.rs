//! Binary checkpoints: an 8-byte little-endian header length, a JSON
//! header, then every field as little-endian `(re, im)` f64 pairs.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::field::{MatrixField, Twist};
use crate::C64;

pub const FORMAT: &str = "hymflow-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub row_charges: Vec<Vec<i64>>,
    pub col_charges: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub dims: Vec<usize>,
    pub t: f64,
    pub log_det_shift: f64,
    pub steps: usize,
    pub config: Option<ScenarioConfig>,
    pub fields: Vec<FieldHeader>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub log_det_shift: f64,
    pub steps: usize,
    pub config: Option<ScenarioConfig>,
    /// Named fields on a common grid, e.g. `h`, `k`, `beta0`.
    pub fields: Vec<(String, MatrixField)>,
}

impl Checkpoint {
    pub fn field(&self, name: &str) -> Option<&MatrixField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let dims = self.fields.first().map(|(_, f)| f.dims().to_vec()).unwrap_or_default();
        if self.fields.iter().any(|(_, f)| f.dims() != dims.as_slice()) {
            return Err(Error::Checkpoint("fields live on different grids".into()));
        }
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            dims,
            t: self.t,
            log_det_shift: self.log_det_shift,
            steps: self.steps,
            config: self.config.clone(),
            fields: self
                .fields
                .iter()
                .map(|(name, f)| FieldHeader {
                    name: name.clone(),
                    rows: f.rows(),
                    cols: f.cols(),
                    row_charges: f.twist().row.clone(),
                    col_charges: f.twist().col.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let body: usize = self.fields.iter().map(|(_, f)| f.data().len() * 16).sum();
        let mut out = Vec::with_capacity(8 + json.len() + body);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, f) in &self.fields {
            for z in f.data() {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let len = bytes.get(..8).ok_or_else(|| bad("truncated header length"))?;
        let len = u64::from_le_bytes(len.try_into().unwrap()) as usize;
        let json = bytes.get(8..8usize.checked_add(len).ok_or_else(|| bad("bad header length"))?);
        let header: Header = serde_json::from_slice(json.ok_or_else(|| bad("truncated header"))?)?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(bad(&format!("unsupported format {} v{}", header.format, header.version)));
        }
        let npts: usize = header.dims.iter().product();
        let mut pos = 8 + len;
        let mut fields = Vec::with_capacity(header.fields.len());
        for fh in &header.fields {
            let count = npts * fh.rows * fh.cols;
            let raw = bytes.get(pos..pos + 16 * count).ok_or_else(|| bad(&format!("field {} is truncated", fh.name)))?;
            let data = raw
                .chunks_exact(16)
                .map(|c| {
                    C64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap()))
                })
                .collect();
            let twist = Twist { row: fh.row_charges.clone(), col: fh.col_charges.clone() };
            fields.push((fh.name.clone(), MatrixField::from_raw(header.dims.clone(), fh.rows, fh.cols, twist, data)?));
            pos += 16 * count;
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes after the last field"));
        }
        Ok(Self { t: header.t, log_det_shift: header.log_det_shift, steps: header.steps, config: header.config, fields })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Twist;
    use crate::lattice::make_torus;
    use crate::sample::random_metric;
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let lat = make_torus(1, 8).unwrap();
        let tw = Twist::endomorphism(&[vec![1], vec![-1]]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = random_metric(&lat, &tw, &mut rng, 0.7, None);
        let mut odd = h.clone();
        odd.data_mut()[0] = C64::new(-0.0, f64::MIN_POSITIVE / 4.0);
        let cp = Checkpoint { t: 1.0 / 3.0, log_det_shift: -1e-17, steps: 7, config: None, fields: vec![("h".into(), h), ("k".into(), odd)] };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        cp.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.t.to_bits(), cp.t.to_bits());
        for ((_, a), (_, b)) in cp.fields.iter().zip(&back.fields) {
            assert_eq!(a.twist(), b.twist());
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        }
        assert_eq!(back.to_bytes().unwrap(), cp.to_bytes().unwrap());
    }

    #[test]
    fn rejects_damaged_files() {
        let lat = make_torus(1, 8).unwrap();
        let h = MatrixField::identity(&lat, 1, &Twist::trivial(1, 1));
        let cp = Checkpoint { t: 0.0, log_det_shift: 0.0, steps: 0, config: None, fields: vec![("h".into(), h)] };
        let bytes = cp.to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..4]).is_err());
    }
}
