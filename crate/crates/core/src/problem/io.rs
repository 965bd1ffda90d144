//! JSON form of a [`BlockProblem`]:
//!
//! ```json
//! {"N": 2, "m": 1, "c": [0.0],
//!  "blocks": [{"type": "quadratic", "H": [[1.0]], "q": [0.0], "A": [[1.0]]},
//!             {"type": "logistic_quad", "params": {"a": 1.0, "b": 0.5, "cshift": 0.0, "dshift": 1.0}, "A": [[1.0]]}]}
//! ```

use serde::{Deserialize, Serialize};

use crate::linalg::{DenseMatrix, DenseVector};

use super::{Block, BlockObjective, BlockProblem, LogisticQuadBlock, ProblemError, QuadraticBlock, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BlockDocument {
    Quadratic {
        #[serde(rename = "H")]
        h: DenseMatrix,
        q: DenseVector,
        #[serde(rename = "A")]
        a: DenseMatrix,
    },
    LogisticQuad {
        params: LogisticQuadBlock,
        #[serde(rename = "A")]
        a: DenseMatrix,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    #[serde(rename = "N")]
    pub n_blocks: usize,
    pub m: usize,
    pub c: DenseVector,
    pub blocks: Vec<BlockDocument>,
}

impl ProblemDocument {
    pub fn from_problem(p: &BlockProblem) -> Result<Self> {
        let blocks = p
            .blocks()
            .iter()
            .map(|b| match &b.objective {
                BlockObjective::Quadratic(q) => Ok(BlockDocument::Quadratic {
                    h: q.h().clone(),
                    q: q.q().clone(),
                    a: b.a.clone(),
                }),
                BlockObjective::LogisticQuad(l) => Ok(BlockDocument::LogisticQuad {
                    params: *l,
                    a: b.a.clone(),
                }),
                BlockObjective::Generic(_) => Err(ProblemError::Unserializable),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_blocks: p.n_blocks(),
            m: p.m(),
            c: p.c().clone(),
            blocks,
        })
    }

    pub fn to_problem(&self) -> Result<BlockProblem> {
        if self.blocks.len() != self.n_blocks {
            return Err(ProblemError::DimensionMismatch {
                what: "N",
                expected: self.n_blocks,
                got: self.blocks.len(),
            });
        }
        if self.c.len() != self.m {
            return Err(ProblemError::DimensionMismatch {
                what: "m",
                expected: self.m,
                got: self.c.len(),
            });
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| match b {
                BlockDocument::Quadratic { h, q, a } => Ok(Block {
                    objective: BlockObjective::Quadratic(QuadraticBlock::new(h.clone(), q.clone())?),
                    a: a.clone(),
                }),
                BlockDocument::LogisticQuad { params, a } => Ok(Block {
                    objective: BlockObjective::LogisticQuad(LogisticQuadBlock::new(
                        params.a,
                        params.b,
                        params.cshift,
                        params.dshift,
                    )?),
                    a: a.clone(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        BlockProblem::new(blocks, self.c.clone())
    }
}
