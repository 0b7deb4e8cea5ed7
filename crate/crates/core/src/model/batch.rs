use super::ModelError;
use crate::vocab::PAD;

/// One encoded training or evaluation instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub src: Option<Vec<usize>>,
    pub input: Vec<usize>,
    /// Output ids including the final end symbol.
    pub target: Vec<usize>,
}

/// Time-major padded id sequences: `steps[t][b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Padded {
    pub steps: Vec<Vec<usize>>,
    pub lengths: Vec<usize>,
}

impl Padded {
    pub fn new(seqs: &[&[usize]]) -> Result<Self, ModelError> {
        if seqs.is_empty() || seqs.iter().any(|s| s.is_empty()) {
            return Err(ModelError::EmptyInput);
        }
        let max = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
        let steps = (0..max)
            .map(|t| seqs.iter().map(|s| s.get(t).copied().unwrap_or(PAD)).collect())
            .collect();
        Ok(Padded {
            steps,
            lengths: seqs.iter().map(|s| s.len()).collect(),
        })
    }

    pub fn batch_size(&self) -> usize {
        self.lengths.len()
    }

    pub fn max_len(&self) -> usize {
        self.steps.len()
    }

    /// Which rows still hold a real token at step `t`.
    pub fn live(&self, t: usize) -> Vec<bool> {
        self.lengths.iter().map(|&l| t < l).collect()
    }

    pub fn row(&self, b: usize) -> Vec<usize> {
        (0..self.lengths[b]).map(|t| self.steps[t][b]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub src: Option<Padded>,
    pub input: Padded,
    pub target: Padded,
}

impl Batch {
    pub fn new(examples: &[&Example]) -> Result<Self, ModelError> {
        if examples.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let with_src = examples[0].src.is_some();
        if examples.iter().any(|e| e.src.is_some() != with_src) {
            return Err(ModelError::InvalidTarget("mixed examples with and without source".into()));
        }
        let src = if with_src {
            let s: Vec<&[usize]> = examples.iter().map(|e| e.src.as_deref().unwrap_or(&[])).collect();
            Some(Padded::new(&s)?)
        } else {
            None
        };
        let input: Vec<&[usize]> = examples.iter().map(|e| e.input.as_slice()).collect();
        let target: Vec<&[usize]> = examples.iter().map(|e| e.target.as_slice()).collect();
        Ok(Batch {
            src,
            input: Padded::new(&input)?,
            target: Padded::new(&target)?,
        })
    }

    pub fn size(&self) -> usize {
        self.input.batch_size()
    }
}
