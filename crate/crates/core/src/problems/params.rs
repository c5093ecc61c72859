use crate::error::{Error, Result};

/// One block of a flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamBlock {
    /// Row-major weight matrix.
    Weight { rows: usize, cols: usize },
    /// Shift (bias) vector.
    Shift { len: usize },
}

impl ParamBlock {
    pub fn size(&self) -> usize {
        match *self {
            ParamBlock::Weight { rows, cols } => rows * cols,
            ParamBlock::Shift { len } => len,
        }
    }
}

/// Ordered layout of parameter blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeMap {
    blocks: Vec<ParamBlock>,
    total: usize,
}

impl ShapeMap {
    pub fn new(blocks: Vec<ParamBlock>) -> Self {
        let total = blocks.iter().map(ParamBlock::size).sum();
        ShapeMap { blocks, total }
    }

    /// Single `(1, d)` weight row, used by linear models.
    pub fn linear(d: usize) -> Self {
        ShapeMap::new(vec![ParamBlock::Weight { rows: 1, cols: d }])
    }

    /// `W_j` then `ω_j` for every layer transition.
    pub fn mlp(sizes: &[usize]) -> Self {
        let blocks = sizes
            .windows(2)
            .flat_map(|w| {
                [
                    ParamBlock::Weight {
                        rows: w[1],
                        cols: w[0],
                    },
                    ParamBlock::Shift { len: w[1] },
                ]
            })
            .collect();
        ShapeMap::new(blocks)
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn check(&self, len: usize) -> Result<()> {
        if len != self.total {
            return Err(Error::Shape {
                expected: self.total,
                found: len,
            });
        }
        Ok(())
    }
}

/// Flat parameter vector together with its (immutable) block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    shape: ShapeMap,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, shape: ShapeMap) -> Result<Self> {
        shape.check(values.len())?;
        Ok(ParamVector { values, shape })
    }

    pub fn zeros(shape: ShapeMap) -> Self {
        ParamVector {
            values: vec![0.0; shape.total()],
            shape,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shape(&self) -> &ShapeMap {
        &self.shape
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Slice of the `j`-th block.
    pub fn block(&self, j: usize) -> &[f64] {
        let start: usize = self.shape.blocks[..j].iter().map(ParamBlock::size).sum();
        &self.values[start..start + self.shape.blocks[j].size()]
    }
}

impl std::ops::Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}
