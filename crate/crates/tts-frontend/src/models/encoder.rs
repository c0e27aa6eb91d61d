//! Contextual token encoder: trainable embeddings into a 1-D convolution
//! bank followed by a bidirectional GRU. Every token comes out as a fixed
//! `2H` feature vector regardless of sentence length.

use crate::error::{Error, Result};
use crate::models::params::{Ctx, Init, Params};
use crate::models::tape::{concat_cols, stack_rows, Tape, Var};
use ndarray::{Array1, Array2};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    /// Embedding width.
    pub embed_dim: usize,
    /// Convolution bank kernel widths run 1..=bank_width_max.
    pub bank_width_max: usize,
    /// Channels produced by each kernel width.
    pub bank_channels: usize,
    /// GRU hidden size per direction.
    pub hidden: usize,
}

impl EncoderConfig {
    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    fn bank_dim(&self) -> usize {
        self.bank_width_max * self.bank_channels
    }

    /// Register all encoder parameters under `prefix`.
    pub fn init(&self, params: &mut Params, init: &mut Init, prefix: &str, vocab_size: usize) {
        params.insert(
            format!("{prefix}emb"),
            init.uniform2(vocab_size, self.embed_dim, 0.1),
        );
        for w in 1..=self.bank_width_max {
            params.insert(
                format!("{prefix}conv{w}.w"),
                init.xavier(w * self.embed_dim, self.bank_channels),
            );
            params.insert(
                format!("{prefix}conv{w}.b"),
                init.zeros1(self.bank_channels),
            );
        }
        for dir in ["gru_f", "gru_b"] {
            for gate in ["z", "r", "n"] {
                params.insert(
                    format!("{prefix}{dir}.w{gate}"),
                    init.xavier(self.hidden, self.bank_dim()).into_dyn(),
                );
                params.insert(
                    format!("{prefix}{dir}.u{gate}"),
                    init.xavier(self.hidden, self.hidden),
                );
                params.insert(format!("{prefix}{dir}.b{gate}"), init.zeros1(self.hidden));
                params.insert(format!("{prefix}{dir}.c{gate}"), init.zeros1(self.hidden));
            }
        }
    }

    /// Build the forward graph for one sentence of token ids.
    pub fn forward<'t>(&self, ctx: &Ctx<'t, '_>, prefix: &str, token_ids: &[usize]) -> Var<'t> {
        let n = token_ids.len();
        assert!(n > 0, "encoder forward on empty input");
        let emb = ctx.p(&format!("{prefix}emb")).gather_rows(token_ids);
        // Convolution bank: same-length conv of each width, ReLU, concat.
        let mut bank = Vec::new();
        for w in 1..=self.bank_width_max {
            let left = (w - 1) / 2;
            let windows: Vec<Var<'t>> = (0..w)
                .map(|o| emb.shift_rows(o as isize - left as isize))
                .collect();
            let stacked = if windows.len() == 1 {
                windows[0]
            } else {
                concat_cols(&windows)
            };
            let conv = stacked
                .matmul(ctx.p(&format!("{prefix}conv{w}.w")))
                .add_rowvec(ctx.p(&format!("{prefix}conv{w}.b")))
                .relu();
            bank.push(conv);
        }
        let features = if bank.len() == 1 {
            bank[0]
        } else {
            concat_cols(&bank)
        };
        let forward = self.gru_direction(ctx, prefix, "gru_f", features, n, false);
        let backward = self.gru_direction(ctx, prefix, "gru_b", features, n, true);
        concat_cols(&[forward, backward])
    }

    fn gru_direction<'t>(
        &self,
        ctx: &Ctx<'t, '_>,
        prefix: &str,
        dir: &str,
        features: Var<'t>,
        n: usize,
        reversed: bool,
    ) -> Var<'t> {
        let p = |name: &str| ctx.p(&format!("{prefix}{dir}.{name}"));
        let (wz, wr, wn) = (p("wz"), p("wr"), p("wn"));
        let (uz, ur, un) = (p("uz"), p("ur"), p("un"));
        let (bz, br, bn) = (p("bz"), p("br"), p("bn"));
        let (cz, cr, cn) = (p("cz"), p("cr"), p("cn"));
        let mut h = ctx.tape.leaf1(Array1::zeros(self.hidden));
        let mut states = vec![h; n];
        let order: Vec<usize> = if reversed {
            (0..n).rev().collect()
        } else {
            (0..n).collect()
        };
        for t in order {
            let x = features.row(t);
            let z = wz.matvec(x).add(bz).add(uz.matvec(h).add(cz)).sigmoid();
            let r = wr.matvec(x).add(br).add(ur.matvec(h).add(cr)).sigmoid();
            let cand = wn.matvec(x).add(bn).add(r.mul(un.matvec(h).add(cn))).tanh();
            // h' = (1 - z) * cand + z * h
            h = z.neg().add_scalar(1.0).mul(cand).add(z.mul(h));
            states[t] = h;
        }
        stack_rows(&states)
    }
}

/// Inference entry point: encode token ids to an `[n, 2H]` feature matrix.
/// Deterministic given parameters; the empty input yields an empty matrix.
pub fn encode(
    cfg: &EncoderConfig,
    params: &Params,
    prefix: &str,
    token_ids: &[usize],
) -> Result<Array2<f64>> {
    let vocab_size = params.get(&format!("{prefix}emb")).shape()[0];
    if let Some(&bad) = token_ids.iter().find(|&&id| id >= vocab_size) {
        return Err(Error::TokenIdOutOfRange(bad, vocab_size));
    }
    if token_ids.is_empty() {
        return Ok(Array2::zeros((0, cfg.output_dim())));
    }
    let tape = Tape::new();
    let ctx = Ctx::new(&tape, params);
    let out = cfg.forward(&ctx, prefix, token_ids);
    Ok(out
        .value()
        .into_dimensionality::<ndarray::Ix2>()
        .expect("2-d encoder output"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (EncoderConfig, Params) {
        let cfg = EncoderConfig {
            embed_dim: 4,
            bank_width_max: 2,
            bank_channels: 3,
            hidden: 5,
        };
        let mut params = Params::new();
        let mut init = Init::new(7);
        cfg.init(&mut params, &mut init, "enc.", 9);
        (cfg, params)
    }

    #[test]
    fn empty_input_gives_empty_matrix() {
        let (cfg, params) = tiny();
        let out = encode(&cfg, &params, "enc.", &[]).unwrap();
        assert_eq!(out.shape(), &[0, 10]);
    }

    #[test]
    fn output_shape_is_n_by_2h() {
        let (cfg, params) = tiny();
        let out = encode(&cfg, &params, "enc.", &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(out.shape(), &[5, 10]);
    }

    #[test]
    fn deterministic_bit_for_bit() {
        let (cfg, params) = tiny();
        let a = encode(&cfg, &params, "enc.", &[3, 1, 0]).unwrap();
        let b = encode(&cfg, &params, "enc.", &[3, 1, 0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_token_id_is_an_error() {
        let (cfg, params) = tiny();
        assert!(encode(&cfg, &params, "enc.", &[9]).is_err());
    }

    #[test]
    fn context_flows_both_directions() {
        let (cfg, params) = tiny();
        let a = encode(&cfg, &params, "enc.", &[1, 2, 3]).unwrap();
        let b = encode(&cfg, &params, "enc.", &[1, 2, 4]).unwrap();
        // Changing the last token changes the first token's features via the
        // backward GRU.
        assert_ne!(a.row(0), b.row(0));
    }
}
