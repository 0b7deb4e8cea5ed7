use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ModelError, ModelVocabs};
use crate::numcore::{Scalar, Tensor};
use crate::vocab::{Vocab, VocabKind};

pub const CHECKPOINT_MAGIC: &str = "APEDIT-CKPT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: ModelConfig,
    src_vocab: Option<Vec<String>>,
    input_vocab: Vec<String>,
    output_kind: VocabKind,
    output_vocab: Vec<String>,
    tensors: Vec<TensorEntry>,
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

/// Magic line, one JSON header line, then every tensor as little-endian
/// `f32` in header order.
pub fn write_checkpoint<T: Scalar>(model: &Model<T>, mut w: impl Write) -> Result<(), ModelError> {
    let vocabs = model.vocabs();
    let header = Header {
        version: VERSION,
        config: model.config().clone(),
        src_vocab: vocabs.src.as_ref().map(|v| v.symbols().to_vec()),
        input_vocab: vocabs.input.symbols().to_vec(),
        output_kind: vocabs.output.kind(),
        output_vocab: vocabs.output.symbols().to_vec(),
        tensors: model
            .params()
            .iter()
            .map(|p| TensorEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
            })
            .collect(),
    };
    writeln!(w, "{CHECKPOINT_MAGIC} {VERSION}")?;
    let json = serde_json::to_string(&header).map_err(|e| bad(e.to_string()))?;
    writeln!(w, "{json}")?;
    for p in model.params().iter() {
        for v in p.value.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar>(r: impl Read) -> Result<Model<T>, ModelError> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let expected = format!("{CHECKPOINT_MAGIC} {VERSION}");
    if line.trim_end() != expected {
        return Err(bad(format!("expected {expected:?}, found {:?}", line.trim_end())));
    }
    line.clear();
    r.read_line(&mut line)?;
    let header: Header = serde_json::from_str(&line).map_err(|e| bad(format!("header: {e}")))?;
    if header.version != VERSION {
        return Err(bad(format!("unsupported version {}", header.version)));
    }
    let vocabs = ModelVocabs {
        src: header
            .src_vocab
            .map(|s| Vocab::from_symbols(VocabKind::Words, s))
            .transpose()?,
        input: Vocab::from_symbols(VocabKind::Words, header.input_vocab)?,
        output: Vocab::from_symbols(header.output_kind, header.output_vocab)?,
    };
    let mut model = Model::<T>::new(header.config, vocabs)?;
    if header.tensors.len() != model.params().len() {
        return Err(bad(format!(
            "header lists {} tensors, config implies {}",
            header.tensors.len(),
            model.params().len()
        )));
    }
    let ids: Vec<_> = model.params().ids().collect();
    for (entry, id) in header.tensors.iter().zip(ids) {
        let p = model.params().get(id);
        if p.name != entry.name || p.value.shape() != entry.shape.as_slice() {
            return Err(bad(format!(
                "tensor {:?} {:?} does not match expected {:?} {:?}",
                entry.name,
                entry.shape,
                p.name,
                p.value.shape()
            )));
        }
        let n = p.value.numel();
        let mut bytes = vec![0u8; 4 * n];
        r.read_exact(&mut bytes)
            .map_err(|_| bad(format!("truncated data for tensor {:?}", entry.name)))?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        let value = Tensor::new(entry.shape.clone(), data)?;
        if !value.is_finite() {
            return Err(bad(format!("non-finite values in tensor {:?}", entry.name)));
        }
        model.params_mut().get_mut(id).value = value;
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes after the last tensor"));
    }
    Ok(model)
}

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, path: &Path) -> Result<(), ModelError> {
    write_checkpoint(model, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Model<T>, ModelError> {
    read_checkpoint(File::open(path)?)
}
