use std::path::Path;

use super::graph::ModelGraph;
use crate::artifact::write_atomic;
use crate::nn::{Network, Real};
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"WKCK";
const VERSION: u32 = 1;

/// One named tensor of a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

/// Trained parameters and batch-norm running statistics of one graph.
///
/// Layout (little-endian): magic `WKCK`, version `u32`, graph name, layer
/// count `u32`, class count `u32`, config hash, record count `u32`, then per
/// record its name, rank `u32`, dims `u32 x rank` and the `f32` payload.
/// Strings are a `u32` byte length followed by UTF-8.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    pub graph_name: String,
    pub layer_count: usize,
    pub num_classes: usize,
    pub config_hash: String,
    pub records: Vec<WeightRecord>,
}

fn stat_names(gamma: &str) -> (String, String) {
    let prefix = gamma.strip_suffix(".gamma").unwrap_or(gamma);
    (format!("{prefix}.running_mean"), format!("{prefix}.running_var"))
}

fn to_f32<T: Real>(v: &[T]) -> Vec<f32> {
    v.iter().map(|x| x.as_f64() as f32).collect()
}

impl WeightStore {
    pub fn from_network<T: Real>(graph: &ModelGraph, net: &Network<T>, config_hash: &str) -> Self {
        let mut records: Vec<WeightRecord> = net
            .params()
            .into_iter()
            .map(|p| WeightRecord {
                name: p.name.clone(),
                shape: p.shape.clone(),
                values: to_f32(&p.value),
            })
            .collect();
        for bn in net.batch_norms() {
            let (mean, var) = stat_names(&bn.gamma.name);
            records.push(WeightRecord {
                name: mean,
                shape: vec![bn.channels],
                values: to_f32(&bn.running_mean),
            });
            records.push(WeightRecord {
                name: var,
                shape: vec![bn.channels],
                values: to_f32(&bn.running_var),
            });
        }
        WeightStore {
            graph_name: graph.name.clone(),
            layer_count: graph.layers.len(),
            num_classes: graph.num_classes,
            config_hash: config_hash.to_string(),
            records,
        }
    }

    /// Copies every record into `net`, which must have been built from `graph`.
    pub fn load_into<T: Real>(&self, graph: &ModelGraph, net: &mut Network<T>) -> Result<()> {
        if self.graph_name != graph.name
            || self.layer_count != graph.layers.len()
            || self.num_classes != graph.num_classes
        {
            return Err(Error::Incompatible(format!(
                "checkpoint holds {} ({} layers, {} classes), graph is {} ({} layers, {} classes)",
                self.graph_name,
                self.layer_count,
                self.num_classes,
                graph.name,
                graph.layers.len(),
                graph.num_classes
            )));
        }
        let mut records = self.records.iter();
        let mut next = |name: &str, shape: &[usize]| -> Result<&WeightRecord> {
            let r = records
                .next()
                .ok_or_else(|| Error::Incompatible(format!("checkpoint lacks {name}")))?;
            if r.name != name || r.shape != shape {
                return Err(Error::Incompatible(format!(
                    "checkpoint record {} {:?} does not match {name} {shape:?}",
                    r.name, r.shape
                )));
            }
            Ok(r)
        };
        for p in net.params_mut() {
            let r = next(&p.name, &p.shape)?;
            p.value = r.values.iter().map(|&v| T::of(v as f64)).collect();
        }
        for bn in net.batch_norms_mut() {
            let (mean, var) = stat_names(&bn.gamma.name);
            let shape = [bn.channels];
            bn.running_mean = next(&mean, &shape)?.values.iter().map(|&v| T::of(v as f64)).collect();
            bn.running_var = next(&var, &shape)?.values.iter().map(|&v| T::of(v as f64)).collect();
        }
        if let Some(extra) = records.next() {
            return Err(Error::Incompatible(format!("unexpected record {}", extra.name)));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let put_u32 = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        let put_str = |out: &mut Vec<u8>, s: &str| {
            put_u32(out, s.len());
            out.extend_from_slice(s.as_bytes());
        };
        out.extend_from_slice(&MAGIC);
        put_u32(&mut out, VERSION as usize);
        put_str(&mut out, &self.graph_name);
        put_u32(&mut out, self.layer_count);
        put_u32(&mut out, self.num_classes);
        put_str(&mut out, &self.config_hash);
        put_u32(&mut out, self.records.len());
        for r in &self.records {
            put_str(&mut out, &r.name);
            put_u32(&mut out, r.shape.len());
            for &d in &r.shape {
                put_u32(&mut out, d);
            }
            for v in &r.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::format("checkpoint", "bad magic"));
        }
        let version = cur.u32()?;
        if version != VERSION as usize {
            return Err(Error::format("checkpoint", format!("unsupported version {version}")));
        }
        let graph_name = cur.string()?;
        let layer_count = cur.u32()?;
        let num_classes = cur.u32()?;
        let config_hash = cur.string()?;
        let n = cur.u32()?;
        let mut records = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let name = cur.string()?;
            let rank = cur.u32()?;
            let shape = (0..rank).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
            let len = shape.iter().product::<usize>();
            let values = cur
                .take(len.checked_mul(4).ok_or_else(|| Error::format("checkpoint", "oversized record"))?)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                .collect();
            records.push(WeightRecord { name, shape, values });
        }
        if cur.pos != bytes.len() {
            return Err(Error::format("checkpoint", "trailing bytes"));
        }
        Ok(WeightStore {
            graph_name,
            layer_count,
            num_classes,
            config_hash,
            records,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("checkpoint", "truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::format("checkpoint", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::graph::build_student;
    use rand::SeedableRng;

    #[test]
    fn round_trip_restores_weights_and_stats() {
        let g = build_student(5, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut net = g.build::<f32>(&mut rng).unwrap();
        net.batch_norms_mut()[1].running_var[3] = 7.5;
        let store = WeightStore::from_network(&g, &net, "abc");
        let back = WeightStore::from_bytes(&store.to_bytes()).unwrap();
        assert_eq!(back, store);

        let mut fresh = g.build::<f32>(&mut rand_chacha::ChaCha8Rng::seed_from_u64(99)).unwrap();
        back.load_into(&g, &mut fresh).unwrap();
        for (a, b) in fresh.params().iter().zip(net.params()) {
            assert_eq!(a.value, b.value);
        }
        assert_eq!(fresh.batch_norms()[1].running_var[3], 7.5);
    }

    #[test]
    fn rejects_mismatched_graph() {
        let g = build_student(5, 1).unwrap();
        let net = g.build::<f32>(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1)).unwrap();
        let store = WeightStore::from_network(&g, &net, "abc");
        let other = build_student(6, 1).unwrap();
        let mut other_net = other.build::<f32>(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(
            store.load_into(&other, &mut other_net),
            Err(Error::Incompatible(_))
        ));
        let mut bytes = store.to_bytes();
        bytes.truncate(bytes.len() - 3);
        assert!(WeightStore::from_bytes(&bytes).is_err());
    }
}
