use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, FwalError, Result};

/// Primal iterate `x = (x⁽¹⁾, …, x⁽ᴷ⁾)` stored contiguously. Matrix blocks
/// are kept in their row-major flattening.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    data: Vec<f64>,
    offsets: Arc<[usize]>,
}

impl BlockVector {
    pub fn zeros(dims: &[usize]) -> Self {
        let offsets = offsets_for(dims);
        let total = *offsets.last().unwrap_or(&0);
        BlockVector {
            data: vec![0.0; total],
            offsets,
        }
    }

    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(FwalError::InvalidArgument(
                "block vector needs at least one block".into(),
            ));
        }
        let dims: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let offsets = offsets_for(&dims);
        Ok(BlockVector {
            data: blocks.concat(),
            offsets,
        })
    }

    /// Same layout as `self`, new contents.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        check_len(self.data.len(), data.len(), "block vector data")?;
        Ok(BlockVector {
            data,
            offsets: self.offsets.clone(),
        })
    }

    pub fn zeros_like(&self) -> Self {
        BlockVector {
            data: vec![0.0; self.data.len()],
            offsets: self.offsets.clone(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.data[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.offsets.windows(2).map(|w| &self.data[w[0]..w[1]])
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_blocks(&self) -> Vec<Vec<f64>> {
        self.blocks().map(<[f64]>::to_vec).collect()
    }
}

fn offsets_for(dims: &[usize]) -> Arc<[usize]> {
    let mut offsets = Vec::with_capacity(dims.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for d in dims {
        acc += d;
        offsets.push(acc);
    }
    offsets.into()
}

impl Serialize for BlockVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_blocks().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let blocks = Vec::<Vec<f64>>::deserialize(d)?;
        BlockVector::from_blocks(blocks).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_view_contiguous_storage() {
        let mut x = BlockVector::from_blocks(vec![vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]).unwrap();
        assert_eq!(x.num_blocks(), 2);
        assert_eq!(x.block_dims(), vec![2, 3]);
        assert_eq!(x.block(1), &[3.0, 4.0, 5.0]);
        x.block_mut(0)[1] = 7.0;
        assert_eq!(x.as_slice(), &[1.0, 7.0, 3.0, 4.0, 5.0]);
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, "[[1.0,7.0],[3.0,4.0,5.0]]");
        let back: BlockVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }
}
