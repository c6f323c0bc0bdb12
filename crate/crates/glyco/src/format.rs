//! Binary model files.
//!
//! LSTM parameters use the `PCL1` layout:
//!
//! ```text
//! b"PCL1" | units: u32 LE | history: u32 LE | params: f64 LE * len
//! ```
//!
//! with the parameters in [`LstmParams`] flat order and three input channels.
//!
//! Any fitted model is stored as a tagged file:
//!
//! ```text
//! b"GLYM" | version: u8 = 1 | kind tag: u8 | model block
//! ```
//!
//! | kind   | block |
//! |--------|-------|
//! | naive  | empty |
//! | elm    | neurons u32, inputs u32, input weights (neurons x inputs), biases, output weights |
//! | gp     | inputs u32, weights, bias |
//! | svr    | support u32, inputs u32, gamma, support vectors (support x inputs), coefficients, bias |
//! | lstm, pclstm | a `PCL1` block |
//!
//! Every float is an f64 LE.

use std::path::Path;

use glyco_core::linalg::Matrix;
use glyco_core::models::{Elm, FittedModel, Gp, LstmModel, ModelKind, Predictor, Svr};
use glyco_core::nnet::LstmParams;
use glyco_core::preprocess::CHANNELS;

use crate::error::{Error, Result};

pub const PCL_MAGIC: &[u8; 4] = b"PCL1";
pub const MODEL_MAGIC: &[u8; 4] = b"GLYM";
pub const MODEL_VERSION: u8 = 1;

#[derive(Debug, Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }

    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("dimension exceeds u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| format!("truncated file: needed {n} bytes at offset {}", self.pos))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, String> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, String> {
        let bytes = self.take(n.checked_mul(8).ok_or("size overflow")?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }

    fn f64(&mut self) -> Result<f64, String> {
        Ok(self.f64s(1)?[0])
    }

    fn finish(&self) -> Result<(), String> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(format!("{} trailing bytes", self.data.len() - self.pos))
        }
    }
}

fn write_pcl(w: &mut Writer, params: &LstmParams, history: usize) {
    w.bytes(PCL_MAGIC);
    w.u32(params.units());
    w.u32(history);
    w.f64s(params.as_slice());
}

fn read_pcl(r: &mut Reader) -> Result<(LstmParams, usize), String> {
    if r.take(4)? != PCL_MAGIC {
        return Err("missing PCL1 magic".into());
    }
    let units = r.u32()?;
    let history = r.u32()?;
    let len = LstmParams::len_for(units, CHANNELS.len());
    let data = r.f64s(len)?;
    let params = LstmParams::from_flat(units, CHANNELS.len(), data).map_err(|e| e.to_string())?;
    Ok((params, history))
}

/// Encodes LSTM parameters as a `PCL1` block.
pub fn encode_pcl(params: &LstmParams, history: usize) -> Vec<u8> {
    let mut w = Writer::default();
    write_pcl(&mut w, params, history);
    w.0
}

/// Decodes a `PCL1` block into parameters and history length.
pub fn decode_pcl(bytes: &[u8]) -> Result<(LstmParams, usize), String> {
    let mut r = Reader { data: bytes, pos: 0 };
    let out = read_pcl(&mut r)?;
    r.finish()?;
    Ok(out)
}

pub fn encode_model(model: &FittedModel, history: usize) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(MODEL_MAGIC);
    w.bytes(&[MODEL_VERSION, model.kind().tag()]);
    match model {
        FittedModel::Naive => {}
        FittedModel::Elm(m) => {
            w.u32(m.input_weights.rows());
            w.u32(m.input_weights.cols());
            w.f64s(m.input_weights.as_slice());
            w.f64s(&m.biases);
            w.f64s(&m.output_weights);
        }
        FittedModel::Gp(m) => {
            w.u32(m.weights.len());
            w.f64s(&m.weights);
            w.f64s(&[m.bias]);
        }
        FittedModel::Svr(m) => {
            w.u32(m.support.rows());
            w.u32(m.support.cols());
            w.f64s(&[m.gamma]);
            w.f64s(m.support.as_slice());
            w.f64s(&m.coefficients);
            w.f64s(&[m.bias]);
        }
        FittedModel::Recurrent { model, .. } => write_pcl(&mut w, &model.params, history),
    }
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<FittedModel, String> {
    let mut r = Reader { data: bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err("not a model file (missing GLYM magic)".into());
    }
    let version = r.u8()?;
    if version != MODEL_VERSION {
        return Err(format!("unsupported model file version {version}"));
    }
    let tag = r.u8()?;
    let kind = ModelKind::from_tag(tag).ok_or_else(|| format!("unknown model kind tag {tag}"))?;
    let model = match kind {
        ModelKind::Naive => FittedModel::Naive,
        ModelKind::Elm => {
            let neurons = r.u32()?;
            let inputs = r.u32()?;
            let w = r.f64s(neurons.checked_mul(inputs).ok_or("size overflow")?)?;
            let input_weights = Matrix::from_vec(neurons, inputs, w).map_err(|e| e.to_string())?;
            FittedModel::Elm(Elm {
                input_weights,
                biases: r.f64s(neurons)?,
                output_weights: r.f64s(neurons)?,
            })
        }
        ModelKind::Gp => {
            let d = r.u32()?;
            FittedModel::Gp(Gp {
                weights: r.f64s(d)?,
                bias: r.f64()?,
            })
        }
        ModelKind::Svr => {
            let n = r.u32()?;
            let d = r.u32()?;
            let gamma = r.f64()?;
            let sv = r.f64s(n.checked_mul(d).ok_or("size overflow")?)?;
            FittedModel::Svr(Svr {
                gamma,
                support: Matrix::from_vec(n, d, sv).map_err(|e| e.to_string())?,
                coefficients: r.f64s(n)?,
                bias: r.f64()?,
            })
        }
        ModelKind::Lstm | ModelKind::PcLstm => {
            let (params, _) = read_pcl(&mut r)?;
            FittedModel::Recurrent {
                kind,
                model: LstmModel { params, log: None },
            }
        }
    };
    r.finish()?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &FittedModel, history: usize) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, encode_model(model, history)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<FittedModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}
