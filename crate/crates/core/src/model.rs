//! Encoder / label-head / attribute-head parameter container and forwards.
//!
//! The encoder consumes the concatenation [x | a] so that the sensitive
//! attribute is available to leak — the adversarial phase then has something
//! real to remove. Both heads are affine maps from the latent space to two
//! logits; hard predictions are argmax with ties to class 0.

use std::io::{Read, Write};

use rand::Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl std::str::FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(format!("unknown activation '{other}' (expected relu|identity)")),
        }
    }
}

/// Which parameter groups a step trains. Frozen groups enter the tape as
/// constants, so a step cannot write to them even in principle.
#[derive(Clone, Copy, Debug, Default)]
pub struct GroupMask {
    pub u: bool,
    pub v: bool,
    pub w: bool,
}

impl GroupMask {
    pub const U: GroupMask = GroupMask { u: true, v: false, w: false };
    pub const W: GroupMask = GroupMask { u: false, v: false, w: true };
    pub const UV: GroupMask = GroupMask { u: true, v: true, w: false };
}

/// Tape handles for one step's view of the parameters.
#[derive(Clone, Copy, Debug)]
pub struct ModelVars {
    pub we: Var,
    pub be: Var,
    pub wg: Var,
    pub bg: Var,
    pub wh: Var,
    pub bh: Var,
}

/// Parameters (u, v, w): encoder u = (we, be), label head v = (wg, bg),
/// attribute head w = (wh, bh).
#[derive(Clone, Debug)]
pub struct FairModel<S: Scalar> {
    pub we: Tensor<S>, // (n+1) x z
    pub be: Tensor<S>, // 1 x z
    pub wg: Tensor<S>, // z x 2
    pub bg: Tensor<S>, // 1 x 2
    pub wh: Tensor<S>, // z x 2
    pub bh: Tensor<S>, // 1 x 2
    pub activation: Activation,
}

fn glorot<S: Scalar>(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor<S> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| S::c(rng.gen_range(-bound..bound))).collect();
    Tensor::from_vec(rows, cols, data)
}

impl<S: Scalar> FairModel<S> {
    /// Glorot-uniform weights, zero biases; deterministic in `seed`.
    /// `n_features` counts the encoded feature columns, the encoder input
    /// additionally carries the sensitive attribute.
    pub fn init(n_features: usize, z: usize, activation: Activation, seed: u64) -> Self {
        assert!(n_features >= 1 && z >= 1, "model needs n >= 1 and z >= 1");
        let mut r = rng::stream(seed, "model-init", 0);
        FairModel {
            we: glorot(n_features + 1, z, &mut r),
            be: Tensor::zeros(1, z),
            wg: glorot(z, 2, &mut r),
            bg: Tensor::zeros(1, 2),
            wh: glorot(z, 2, &mut r),
            bh: Tensor::zeros(1, 2),
            activation,
        }
    }

    pub fn latent_width(&self) -> usize {
        self.we.cols()
    }

    /// Encoder input width, i.e. feature count + 1 for the attribute column.
    pub fn input_width(&self) -> usize {
        self.we.rows()
    }

    /// Register all six parameters on a tape; groups outside `mask` become
    /// constants (the freezing contract).
    pub fn vars(&self, tape: &mut Tape<S>, mask: GroupMask) -> ModelVars {
        ModelVars {
            we: tape.input(self.we.clone(), mask.u),
            be: tape.input(self.be.clone(), mask.u),
            wg: tape.input(self.wg.clone(), mask.v),
            bg: tape.input(self.bg.clone(), mask.v),
            wh: tape.input(self.wh.clone(), mask.w),
            bh: tape.input(self.bh.clone(), mask.w),
        }
    }

    /// act(xa · we + be) recorded on the tape. `xa` is an m x (n+1) batch.
    pub fn encode_on(&self, tape: &mut Tape<S>, vars: &ModelVars, xa: Var) -> Var {
        let h = tape.matmul(xa, vars.we);
        let h = tape.add_rowwise(h, vars.be);
        match self.activation {
            Activation::Relu => tape.relu(h),
            Activation::Identity => h,
        }
    }

    pub fn label_logits_on(&self, tape: &mut Tape<S>, vars: &ModelVars, latent: Var) -> Var {
        let l = tape.matmul(latent, vars.wg);
        tape.add_rowwise(l, vars.bg)
    }

    pub fn attr_logits_on(&self, tape: &mut Tape<S>, vars: &ModelVars, latent: Var) -> Var {
        let l = tape.matmul(latent, vars.wh);
        tape.add_rowwise(l, vars.bh)
    }

    /// Gradient-free encoder forward for evaluation.
    pub fn encode(&self, xa: &Tensor<S>) -> Tensor<S> {
        let h = xa.matmul(&self.we).add_rowwise(&self.be);
        match self.activation {
            Activation::Relu => h.relu(),
            Activation::Identity => h,
        }
    }

    /// Label logits from a latent batch.
    pub fn predict_label(&self, latent: &Tensor<S>) -> Tensor<S> {
        latent.matmul(&self.wg).add_rowwise(&self.bg)
    }

    /// Attribute logits from a latent batch.
    pub fn predict_attribute(&self, latent: &Tensor<S>) -> Tensor<S> {
        latent.matmul(&self.wh).add_rowwise(&self.bh)
    }

    /// Hard label predictions for an encoded [x | a] batch.
    pub fn hard_labels(&self, xa: &Tensor<S>) -> Vec<u8> {
        self.predict_label(&self.encode(xa)).argmax2()
    }

    /// Hard attribute predictions for an encoded [x | a] batch.
    pub fn hard_attributes(&self, xa: &Tensor<S>) -> Vec<u8> {
        self.predict_attribute(&self.encode(xa)).argmax2()
    }

    pub fn u_params(&self) -> [&Tensor<S>; 2] {
        [&self.we, &self.be]
    }

    pub fn v_params(&self) -> [&Tensor<S>; 2] {
        [&self.wg, &self.bg]
    }

    pub fn w_params(&self) -> [&Tensor<S>; 2] {
        [&self.wh, &self.bh]
    }

    /// Combined bit hash of a parameter group, for freeze auditing.
    pub fn group_hash(&self, group: char) -> u64 {
        let pair = match group {
            'u' => [&self.we, &self.be],
            'v' => [&self.wg, &self.bg],
            'w' => [&self.wh, &self.bh],
            _ => panic!("unknown group {group}"),
        };
        pair[0].bit_hash() ^ pair[1].bit_hash().rotate_left(1)
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"FACK";
const CHECKPOINT_VERSION: u32 = 1;

impl FairModel<f64> {
    /// Binary checkpoint: magic, version, activation, then the six parameter
    /// tensors as (rows, cols, little-endian f64 data). Round-trips
    /// bit-exactly.
    pub fn save(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&[match self.activation {
            Activation::Relu => 0u8,
            Activation::Identity => 1u8,
        }])?;
        for t in [&self.we, &self.be, &self.wg, &self.bg, &self.wh, &self.bh] {
            w.write_all(&(t.rows() as u64).to_le_bytes())?;
            w.write_all(&(t.cols() as u64).to_le_bytes())?;
            for v in t.data() {
                w.write_all(&v.to_bits().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(mut r: impl Read) -> Result<Self> {
        let bad = |msg: &str| Error::Usage(format!("checkpoint: {msg}"));
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let mut ver = [0u8; 4];
        read_exact(&mut r, &mut ver)?;
        if u32::from_le_bytes(ver) != CHECKPOINT_VERSION {
            return Err(bad("unsupported version"));
        }
        let mut act = [0u8; 1];
        read_exact(&mut r, &mut act)?;
        let activation = match act[0] {
            0 => Activation::Relu,
            1 => Activation::Identity,
            _ => return Err(bad("unknown activation code")),
        };
        let mut tensors = Vec::with_capacity(6);
        for _ in 0..6 {
            let mut dim = [0u8; 8];
            read_exact(&mut r, &mut dim)?;
            let rows = u64::from_le_bytes(dim) as usize;
            read_exact(&mut r, &mut dim)?;
            let cols = u64::from_le_bytes(dim) as usize;
            if rows * cols > 100_000_000 {
                return Err(bad("implausible tensor size"));
            }
            let mut data = Vec::with_capacity(rows * cols);
            let mut buf = [0u8; 8];
            for _ in 0..rows * cols {
                read_exact(&mut r, &mut buf)?;
                data.push(f64::from_bits(u64::from_le_bytes(buf)));
            }
            tensors.push(Tensor::from_vec(rows, cols, data));
        }
        let [we, be, wg, bg, wh, bh]: [Tensor<f64>; 6] =
            tensors.try_into().expect("six tensors read");
        Ok(FairModel { we, be, wg, bg, wh, bh, activation })
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::Usage(format!("checkpoint: truncated file: {e}")))
}

/// Build the m x (n+1) encoder input [X | a] from a feature batch and its
/// attribute column.
pub fn concat_attribute<S: Scalar>(x: &Tensor<S>, a: &[u8]) -> Tensor<S> {
    assert_eq!(x.rows(), a.len(), "feature rows {} != attribute length {}", x.rows(), a.len());
    let (m, n) = x.shape();
    let mut out = Tensor::zeros(m, n + 1);
    for r in 0..m {
        for c in 0..n {
            out.set(r, c, x.get(r, c));
        }
        out.set(r, n, S::c(f64::from(a[r])));
    }
    out
}
