use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Array2, NeuroError, NodeId, Tape};

/// Gated recurrent unit weights for one layer.
///
/// `w_*` map the input (`hidden x input`), `u_*` map the previous state
/// (`hidden x hidden`), `b_*` are `hidden x 1` column biases.
#[derive(Clone, Debug, PartialEq)]
pub struct GruCell {
    pub w_z: Array2,
    pub w_r: Array2,
    pub w_h: Array2,
    pub u_z: Array2,
    pub u_r: Array2,
    pub u_h: Array2,
    pub b_z: Array2,
    pub b_r: Array2,
    pub b_h: Array2,
}

/// Input and hidden sizes of a [`GruCell`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GruDims {
    pub input: usize,
    pub hidden: usize,
}

pub const GRU_PARAM_NAMES: [&str; 9] = ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"];

impl GruCell {
    pub fn zeros(dims: GruDims) -> Self {
        let GruDims { input, hidden } = dims;
        GruCell {
            w_z: Array2::zeros(hidden, input),
            w_r: Array2::zeros(hidden, input),
            w_h: Array2::zeros(hidden, input),
            u_z: Array2::zeros(hidden, hidden),
            u_r: Array2::zeros(hidden, hidden),
            u_h: Array2::zeros(hidden, hidden),
            b_z: Array2::zeros(hidden, 1),
            b_r: Array2::zeros(hidden, 1),
            b_h: Array2::zeros(hidden, 1),
        }
    }

    /// Weights uniform in `(-scale, scale)`, biases zero.
    pub fn random(dims: GruDims, scale: f64, rng: &mut impl Rng) -> Self {
        let mut cell = Self::zeros(dims);
        for m in [
            &mut cell.w_z,
            &mut cell.w_r,
            &mut cell.w_h,
            &mut cell.u_z,
            &mut cell.u_r,
            &mut cell.u_h,
        ] {
            m.data_mut()
                .iter_mut()
                .for_each(|v| *v = rng.gen_range(-scale..scale));
        }
        cell
    }

    pub fn dims(&self) -> GruDims {
        GruDims {
            input: self.w_z.cols(),
            hidden: self.w_z.rows(),
        }
    }

    pub fn arrays(&self) -> [&Array2; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z,
            &self.b_r, &self.b_h,
        ]
    }

    pub fn arrays_mut(&mut self) -> [&mut Array2; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    pub fn bind<'a>(&'a self, tape: &mut Tape<'a>) -> BoundGru {
        BoundGru::from_nodes(&self.arrays().map(|a| tape.param(a)))
    }

    /// One untraced step.
    pub fn step(&self, x: &Array2, h_prev: &Array2) -> Result<Array2, NeuroError> {
        let mut tape = Tape::new();
        let cell = self.bind(&mut tape);
        let x = tape.constant(x.clone());
        let h = tape.constant(h_prev.clone());
        let out = gru_step(&mut tape, &cell, x, h)?;
        Ok(tape.value(out).clone())
    }
}

/// A [`GruCell`] whose arrays live on a tape.
#[derive(Clone, Copy, Debug)]
pub struct BoundGru {
    pub w_z: NodeId,
    pub w_r: NodeId,
    pub w_h: NodeId,
    pub u_z: NodeId,
    pub u_r: NodeId,
    pub u_h: NodeId,
    pub b_z: NodeId,
    pub b_r: NodeId,
    pub b_h: NodeId,
}

impl BoundGru {
    /// Builds from nine nodes in [`GRU_PARAM_NAMES`] order.
    pub fn from_nodes(nodes: &[NodeId; 9]) -> Self {
        let [w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h] = *nodes;
        BoundGru {
            w_z,
            w_r,
            w_h,
            u_z,
            u_r,
            u_h,
            b_z,
            b_r,
            b_h,
        }
    }
}

/// z = σ(W_z x + U_z h + b_z), r = σ(W_r x + U_r h + b_r),
/// h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h), h' = (1 − z) ⊙ h + z ⊙ h̃.
pub fn gru_step(tape: &mut Tape<'_>, cell: &BoundGru, x: NodeId, h: NodeId) -> Result<NodeId, NeuroError> {
    let gate = |tape: &mut Tape<'_>, w: NodeId, u: NodeId, b: NodeId, hh: NodeId| -> Result<NodeId, NeuroError> {
        let wx = tape.matmul(w, x)?;
        let uh = tape.matmul(u, hh)?;
        let s = tape.add(wx, uh)?;
        tape.add(s, b)
    };
    let z_pre = gate(tape, cell.w_z, cell.u_z, cell.b_z, h)?;
    let z = tape.sigmoid(z_pre);
    let r_pre = gate(tape, cell.w_r, cell.u_r, cell.b_r, h)?;
    let r = tape.sigmoid(r_pre);
    let rh = tape.elementwise_mul(r, h)?;
    let cand_pre = gate(tape, cell.w_h, cell.u_h, cell.b_h, rh)?;
    let cand = tape.tanh(cand_pre);
    let keep = tape.one_minus(z);
    let old = tape.elementwise_mul(keep, h)?;
    let new = tape.elementwise_mul(z, cand)?;
    tape.add(old, new)
}
