//! The action-recognition network: two recurrent layers feeding three dense
//! layers with dropout, classifying a `(W, 3K)` keypoint window into one of
//! `C` actions.
//!
//! Parameters are held as 64-bit floats internally and cross process
//! boundaries (checkpoints, federation wire) as 32-bit floats.

mod net;

pub use net::{backward, forward, infer, BackwardOutput, ForwardTrace, Mode};

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Network hyperparameters. `input_width` is the flattened feature count
/// (3K) and `window` the clip length the surrounding system feeds in.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    pub input_width: usize,
    pub window: usize,
    pub lstm1_units: usize,
    pub lstm2_units: usize,
    pub dense1_units: usize,
    pub dropout_rate: f64,
    pub dense2_units: usize,
    pub classes: usize,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_width: 99,
            window: 60,
            lstm1_units: 30,
            lstm2_units: 64,
            dense1_units: 64,
            dropout_rate: 0.2,
            dense2_units: 32,
            classes: 13,
            init_seed: 1,
        }
    }
}

impl ModelConfig {
    /// Config sized for a dataset with `joint_count` joints and `window`
    /// frames per clip.
    pub fn for_dataset(joint_count: usize, window: usize, classes: usize) -> Self {
        Self {
            input_width: 3 * joint_count,
            window,
            classes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let units = [
            self.input_width,
            self.window,
            self.lstm1_units,
            self.lstm2_units,
            self.dense1_units,
            self.dense2_units,
            self.classes,
        ];
        if units.iter().any(|&u| u == 0) {
            return Err(Error::InvalidArgument(
                "all layer sizes must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Total scalar parameter count across all layers.
    pub fn param_count(&self) -> usize {
        let lstm = |i: usize, h: usize| 4 * ((i + h) * h + h);
        let dense = |i: usize, o: usize| i * o + o;
        lstm(self.input_width, self.lstm1_units)
            + lstm(self.lstm1_units, self.lstm2_units)
            + dense(self.lstm2_units, self.dense1_units)
            + dense(self.dense1_units, self.dense2_units)
            + dense(self.dense2_units, self.classes)
    }
}

/// One recurrent layer: input kernel `(I, 4H)`, recurrent kernel `(H, 4H)`,
/// bias `(4H)`. Gate blocks are ordered input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_kernel: Array2<f64>,
    pub recurrent_kernel: Array2<f64>,
    pub bias: Array1<f64>,
}

/// One dense layer: kernel `(I, O)` plus bias `(O)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub kernel: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Full parameter set, in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub lstm1: LstmParams,
    pub lstm2: LstmParams,
    pub dense1: DenseParams,
    pub dense2: DenseParams,
    pub output: DenseParams,
}

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let lstm = |i: usize, h: usize| LstmParams {
            input_kernel: Array2::zeros((i, 4 * h)),
            recurrent_kernel: Array2::zeros((h, 4 * h)),
            bias: Array1::zeros(4 * h),
        };
        let dense = |i: usize, o: usize| DenseParams {
            kernel: Array2::zeros((i, o)),
            bias: Array1::zeros(o),
        };
        Self {
            lstm1: lstm(cfg.input_width, cfg.lstm1_units),
            lstm2: lstm(cfg.lstm1_units, cfg.lstm2_units),
            dense1: dense(cfg.lstm2_units, cfg.dense1_units),
            dense2: dense(cfg.dense1_units, cfg.dense2_units),
            output: dense(cfg.dense2_units, cfg.classes),
        }
    }

    pub fn param_count(&self) -> usize {
        self.for_each_array(|a| a.len()).iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit(|a| ok &= a.iter().all(|v| v.is_finite()));
        ok
    }

    /// `self += factor * other`, elementwise over every layer. The SGD
    /// update is `scaled_add(-lr, gradient)`.
    pub fn scaled_add(&mut self, factor: f64, other: &Self) {
        let pairs = [
            (&mut self.lstm1.input_kernel, &other.lstm1.input_kernel),
            (
                &mut self.lstm1.recurrent_kernel,
                &other.lstm1.recurrent_kernel,
            ),
            (&mut self.lstm2.input_kernel, &other.lstm2.input_kernel),
            (
                &mut self.lstm2.recurrent_kernel,
                &other.lstm2.recurrent_kernel,
            ),
            (&mut self.dense1.kernel, &other.dense1.kernel),
            (&mut self.dense2.kernel, &other.dense2.kernel),
            (&mut self.output.kernel, &other.output.kernel),
        ];
        for (dst, src) in pairs {
            dst.scaled_add(factor, src);
        }
        let bias_pairs = [
            (&mut self.lstm1.bias, &other.lstm1.bias),
            (&mut self.lstm2.bias, &other.lstm2.bias),
            (&mut self.dense1.bias, &other.dense1.bias),
            (&mut self.dense2.bias, &other.dense2.bias),
            (&mut self.output.bias, &other.output.bias),
        ];
        for (dst, src) in bias_pairs {
            dst.scaled_add(factor, src);
        }
    }

    fn visit(&self, mut f: impl FnMut(&[f64])) {
        for a in [
            &self.lstm1.input_kernel,
            &self.lstm1.recurrent_kernel,
            &self.lstm2.input_kernel,
            &self.lstm2.recurrent_kernel,
        ] {
            f(a.as_slice().expect("standard layout"));
        }
        for a in [&self.dense1.kernel, &self.dense2.kernel, &self.output.kernel] {
            f(a.as_slice().expect("standard layout"));
        }
        for b in [
            &self.lstm1.bias,
            &self.lstm2.bias,
            &self.dense1.bias,
            &self.dense2.bias,
            &self.output.bias,
        ] {
            f(b.as_slice().expect("standard layout"));
        }
    }

    fn for_each_array<T>(&self, f: impl Fn(&[f64]) -> T) -> Vec<T> {
        let mut out = Vec::new();
        self.visit(|a| out.push(f(a)));
        out
    }
}

fn glorot_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
}

/// Square orthogonal matrix via Gram-Schmidt on a Gaussian draw.
fn orthogonal_block(h: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((h, h), |_| rng.sample::<f64, _>(StandardNormal));
    for j in 0..h {
        for prev in 0..j {
            let proj = m.column(j).dot(&m.column(prev));
            let prev_col = m.column(prev).to_owned();
            m.column_mut(j).scaled_add(-proj, &prev_col);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        m.column_mut(j).mapv_inplace(|v| v / norm);
    }
    m
}

fn init_lstm(input: usize, units: usize, rng: &mut ChaCha8Rng) -> LstmParams {
    let input_kernel = glorot_uniform(input, 4 * units, rng);
    let mut recurrent_kernel = Array2::zeros((units, 4 * units));
    for gate in 0..4 {
        let block = orthogonal_block(units, rng);
        recurrent_kernel
            .slice_mut(s![.., gate * units..(gate + 1) * units])
            .assign(&block);
    }
    let mut bias = Array1::zeros(4 * units);
    // Forget-gate bias starts at 1 so early training retains cell state.
    bias.slice_mut(s![units..2 * units]).fill(1.0);
    LstmParams {
        input_kernel,
        recurrent_kernel,
        bias,
    }
}

/// Seeded initialization: Glorot-uniform kernels, per-gate orthogonal
/// recurrent blocks, zero biases except the recurrent forget gates at 1.
pub fn init_params(cfg: &ModelConfig) -> Result<ModelParams> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
    let lstm1 = init_lstm(cfg.input_width, cfg.lstm1_units, &mut rng);
    let lstm2 = init_lstm(cfg.lstm1_units, cfg.lstm2_units, &mut rng);
    let dense = |i: usize, o: usize, rng: &mut ChaCha8Rng| DenseParams {
        kernel: glorot_uniform(i, o, rng),
        bias: Array1::zeros(o),
    };
    Ok(ModelParams {
        lstm1,
        lstm2,
        dense1: dense(cfg.lstm2_units, cfg.dense1_units, &mut rng),
        dense2: dense(cfg.dense1_units, cfg.dense2_units, &mut rng),
        output: dense(cfg.dense2_units, cfg.classes, &mut rng),
    })
}

/// Serializes parameters into one array. Layer order: lstm1 input kernel,
/// lstm1 recurrent kernel, lstm1 bias, lstm2 likewise, then each dense
/// layer's kernel and bias; matrices row-major.
pub fn flatten(params: &ModelParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.param_count());
    let mut push_lstm = |l: &LstmParams| {
        out.extend(l.input_kernel.iter());
        out.extend(l.recurrent_kernel.iter());
        out.extend(l.bias.iter());
    };
    push_lstm(&params.lstm1);
    push_lstm(&params.lstm2);
    for d in [&params.dense1, &params.dense2, &params.output] {
        out.extend(d.kernel.iter());
        out.extend(d.bias.iter());
    }
    out
}

/// Inverse of [`flatten`]; rejects arrays whose length does not match the
/// config.
pub fn unflatten(cfg: &ModelConfig, flat: &[f64]) -> Result<ModelParams> {
    let expected = cfg.param_count();
    if flat.len() != expected {
        return Err(Error::FlatLengthMismatch {
            expected,
            found: flat.len(),
        });
    }
    let mut pos = 0usize;
    let mut take_matrix = |rows: usize, cols: usize| {
        let slice = &flat[pos..pos + rows * cols];
        pos += rows * cols;
        Array2::from_shape_vec((rows, cols), slice.to_vec()).expect("sized above")
    };
    let mut take_lstm = |i: usize, h: usize| {
        let input_kernel = take_matrix(i, 4 * h);
        let recurrent_kernel = take_matrix(h, 4 * h);
        let bias = Array1::from_vec(take_matrix(1, 4 * h).into_raw_vec_and_offset().0);
        LstmParams {
            input_kernel,
            recurrent_kernel,
            bias,
        }
    };
    let lstm1 = take_lstm(cfg.input_width, cfg.lstm1_units);
    let lstm2 = take_lstm(cfg.lstm1_units, cfg.lstm2_units);
    let mut take_dense = |i: usize, o: usize| {
        let kernel = take_matrix(i, o);
        let bias = Array1::from_vec(take_matrix(1, o).into_raw_vec_and_offset().0);
        DenseParams { kernel, bias }
    };
    Ok(ModelParams {
        lstm1,
        lstm2,
        dense1: take_dense(cfg.lstm2_units, cfg.dense1_units),
        dense2: take_dense(cfg.dense1_units, cfg.dense2_units),
        output: take_dense(cfg.dense2_units, cfg.classes),
    })
}

/// Wire form: [`flatten`] cast to f32.
pub fn flatten_f32(params: &ModelParams) -> Vec<f32> {
    flatten(params).into_iter().map(|v| v as f32).collect()
}

/// Rebuilds parameters from the f32 wire form.
pub fn unflatten_f32(cfg: &ModelConfig, flat: &[f32]) -> Result<ModelParams> {
    let widened: Vec<f64> = flat.iter().map(|&v| f64::from(v)).collect();
    unflatten(cfg, &widened)
}

pub(crate) const CHECKPOINT_MAGIC: [u8; 4] = *b"FGM1";
pub(crate) const CHECKPOINT_VERSION: u16 = 1;

/// Writes a checkpoint: magic "FGM1", version, config fields, the flattened
/// parameters as little-endian f32, and a CRC32 trailer over all preceding
/// bytes.
pub fn write_checkpoint<W: Write>(cfg: &ModelConfig, params: &ModelParams, mut w: W) -> Result<()> {
    cfg.validate()?;
    let mut buf = Vec::new();
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for field in [
        cfg.input_width,
        cfg.window,
        cfg.lstm1_units,
        cfg.lstm2_units,
        cfg.dense1_units,
        cfg.dense2_units,
        cfg.classes,
    ] {
        let v = u16::try_from(field)
            .map_err(|_| Error::InvalidArgument(format!("layer size {field} too large")))?;
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&cfg.dropout_rate.to_le_bytes());
    buf.extend_from_slice(&cfg.init_seed.to_le_bytes());
    for v in flatten_f32(params) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    w.write_all(&buf)?;
    Ok(())
}

/// Reads and verifies a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ModelConfig, ModelParams)> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 4 {
        return Err(Error::Truncated);
    }
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&buf[..4]);
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            expected: CHECKPOINT_MAGIC,
            found: magic,
        });
    }
    // magic + version + 7 u16 fields + f64 + u64 + crc
    const HEADER: usize = 4 + 2 + 14 + 8 + 8;
    if buf.len() < HEADER + 4 {
        return Err(Error::Truncated);
    }
    let (body, trailer) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let mut pos = 4;
    let mut take_u16 = |body: &[u8]| {
        let v = u16::from_le_bytes(body[pos..pos + 2].try_into().unwrap());
        pos += 2;
        v
    };
    let version = take_u16(body);
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let input_width = take_u16(body) as usize;
    let window = take_u16(body) as usize;
    let lstm1_units = take_u16(body) as usize;
    let lstm2_units = take_u16(body) as usize;
    let dense1_units = take_u16(body) as usize;
    let dense2_units = take_u16(body) as usize;
    let classes = take_u16(body) as usize;
    let dropout_rate = f64::from_le_bytes(body[pos..pos + 8].try_into().unwrap());
    let init_seed = u64::from_le_bytes(body[pos + 8..pos + 16].try_into().unwrap());
    let cfg = ModelConfig {
        input_width,
        window,
        lstm1_units,
        lstm2_units,
        dense1_units,
        dropout_rate,
        dense2_units,
        classes,
        init_seed,
    };
    cfg.validate()?;

    let payload = &body[HEADER..];
    let expected = cfg.param_count();
    if payload.len() != expected * 4 {
        return Err(Error::Truncated);
    }
    let flat: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = unflatten_f32(&cfg, &flat)?;
    Ok((cfg, params))
}

pub fn save_checkpoint(cfg: &ModelConfig, params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(cfg, params, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelConfig, ModelParams)> {
    read_checkpoint(File::open(path)?)
}
