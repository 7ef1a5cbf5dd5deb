use std::io::{Read, Write};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Magic bytes opening every parameter container.
pub const PARAM_MAGIC: &[u8; 5] = b"NREG1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<S> {
    names: Vec<String>,
    tensors: Vec<Tensor<S>>,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<S>) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<S> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<S> {
        &mut self.tensors[id.0]
    }

    pub fn by_index(&self, i: usize) -> &Tensor<S> {
        &self.tensors[i]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<S>)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &str, &mut Tensor<S>)> {
        self.names
            .iter()
            .zip(self.tensors.iter_mut())
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn cast<T: Scalar>(&self) -> ParamStore<T> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }
}

/// Dense gradients aligned with a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<S> {
    tensors: Vec<Tensor<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn zeros_like(store: &ParamStore<S>) -> Self {
        Gradients {
            tensors: store.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<S> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<S> {
        &mut self.tensors[id.0]
    }

    pub fn by_index(&self, i: usize) -> &Tensor<S> {
        &self.tensors[i]
    }

    pub fn by_index_mut(&mut self, i: usize) -> &mut Tensor<S> {
        &mut self.tensors[i]
    }

    pub fn add_assign(&mut self, other: &Gradients<S>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
                *x = *x + y;
            }
        }
    }

    pub fn scale(&mut self, c: S) {
        for t in &mut self.tensors {
            for x in t.data_mut() {
                *x = *x * c;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data().iter())
            .map(|v| v.as_f64() * v.as_f64())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Contract(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

/// Writes `NREG1 | header_len | header | count | records`, each record being
/// `name_len | name | rank | dims.. | f32 values`, all integers u32 LE.
pub fn write_params<S: Scalar>(w: &mut impl Write, header: &[u8], store: &ParamStore<S>) -> Result<()> {
    w.write_all(PARAM_MAGIC)?;
    put_u32(w, header.len())?;
    w.write_all(header)?;
    put_u32(w, store.len())?;
    for (_, name, t) in store.iter() {
        put_u32(w, name.len())?;
        w.write_all(name.as_bytes())?;
        put_u32(w, t.rank())?;
        for &d in t.shape() {
            put_u32(w, d)?;
        }
        for &v in t.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a container written by [`write_params`], returning the header bytes
/// and the parameters.
pub fn read_params<S: Scalar>(r: &mut impl Read) -> Result<(Vec<u8>, ParamStore<S>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != PARAM_MAGIC {
        return Err(Error::parse("parameter file", format!("bad magic {magic:?}")));
    }
    let header_len = get_u32(r)?;
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header)?;
    let count = get_u32(r)?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = get_u32(r)?;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|e| Error::parse("parameter file", format!("name not UTF-8: {e}")))?;
        let rank = get_u32(r)?;
        let shape = (0..rank).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| S::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        store.add(name, Tensor::new(shape, data)?);
    }
    Ok((header, store))
}
