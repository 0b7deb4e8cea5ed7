use rand::Rng;

use super::{Init, NodeId, NumError, ParamId, ParamSet, Scalar, Tape};

/// One LSTM layer; gates are packed `[input | forget | cell | output]`.
#[derive(Clone, Copy, Debug)]
pub struct LstmParams {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

impl LstmParams {
    pub fn new<T: Scalar>(
        params: &mut ParamSet<T>,
        prefix: &str,
        input: usize,
        hidden: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, NumError> {
        Ok(LstmParams {
            wx: params.init(&format!("{prefix}.wx"), &[input, 4 * hidden], Init::Uniform(scale), rng)?,
            wh: params.init(&format!("{prefix}.wh"), &[hidden, 4 * hidden], Init::Uniform(scale), rng)?,
            b: params.init(
                &format!("{prefix}.b"),
                &[1, 4 * hidden],
                Init::ForgetBias { hidden, value: 1.0 },
                rng,
            )?,
            hidden,
        })
    }
}

/// Returns the next `(h, c)`.
pub fn lstm_step<T: Scalar>(
    tape: &mut Tape<'_, T>,
    p: &LstmParams,
    x: NodeId,
    h: NodeId,
    c: NodeId,
) -> Result<(NodeId, NodeId), NumError> {
    let hd = p.hidden;
    let (wx, wh, b) = (tape.param(p.wx), tape.param(p.wh), tape.param(p.b));
    let xi = tape.matmul(x, wx)?;
    let hh = tape.matmul(h, wh)?;
    let pre = tape.add(xi, hh)?;
    let pre = tape.add_bias(pre, b)?;
    let i = tape.slice_cols(pre, 0, hd)?;
    let i = tape.sigmoid(i)?;
    let f = tape.slice_cols(pre, hd, hd)?;
    let f = tape.sigmoid(f)?;
    let g = tape.slice_cols(pre, 2 * hd, hd)?;
    let g = tape.tanh(g)?;
    let o = tape.slice_cols(pre, 3 * hd, hd)?;
    let o = tape.sigmoid(o)?;
    let fc = tape.mul(f, c)?;
    let ig = tape.mul(i, g)?;
    let c_next = tape.add(fc, ig)?;
    let tc = tape.tanh(c_next)?;
    let h_next = tape.mul(o, tc)?;
    Ok((h_next, c_next))
}
