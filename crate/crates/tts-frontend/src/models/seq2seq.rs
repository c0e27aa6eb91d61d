//! Character-to-phoneme encoder-decoder with multi-head attention and
//! length-bounded beam search.

use crate::core::inventory::{CharInventory, PhonemeInventory};
use crate::error::{Error, Result};
use crate::models::params::{Ctx, Init, Params};
use crate::models::tape::{concat_cols, Tape, Var};
use ndarray::Array2;

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2SeqConfig {
    /// Model width D.
    pub model_dim: usize,
    /// Attention head count A; must divide the model width.
    pub heads: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub ffn_dim: usize,
    /// Fixed decode length cap; `None` uses 4 × input length + 4, which no
    /// English word's phoneme count exceeds.
    pub max_len_override: Option<usize>,
}

impl Seq2SeqConfig {
    fn validate(&self) {
        assert!(self.model_dim > 0 && self.heads > 0);
        assert_eq!(
            self.model_dim % self.heads,
            0,
            "model dim must be divisible by head count"
        );
    }
}

/// A complete OOV phonemizer: frozen after construction or training, safe to
/// share across threads for decoding.
#[derive(Debug, Clone)]
pub struct Seq2SeqModel {
    pub cfg: Seq2SeqConfig,
    pub chars: CharInventory,
    pub phonemes: PhonemeInventory,
    pub params: Params,
}

const LN_EPS: f64 = 1e-5;

fn linear<'t>(ctx: &Ctx<'t, '_>, prefix: &str, x: Var<'t>) -> Var<'t> {
    x.matmul(ctx.p(&format!("{prefix}.w")))
        .add_rowvec(ctx.p(&format!("{prefix}.b")))
}

fn layer_norm<'t>(ctx: &Ctx<'t, '_>, prefix: &str, x: Var<'t>) -> Var<'t> {
    x.layer_norm(
        ctx.p(&format!("{prefix}.g")),
        ctx.p(&format!("{prefix}.b")),
        LN_EPS,
    )
}

fn init_linear(params: &mut Params, init: &mut Init, prefix: &str, d_in: usize, d_out: usize) {
    params.insert(format!("{prefix}.w"), init.xavier(d_in, d_out));
    params.insert(format!("{prefix}.b"), init.zeros1(d_out));
}

fn init_layer_norm(params: &mut Params, init: &mut Init, prefix: &str, d: usize) {
    params.insert(format!("{prefix}.g"), init.ones1(d));
    params.insert(format!("{prefix}.b"), init.zeros1(d));
}

fn init_mha(params: &mut Params, init: &mut Init, prefix: &str, d: usize) {
    for part in ["q", "k", "v", "o"] {
        init_linear(params, init, &format!("{prefix}.{part}"), d, d);
    }
}

/// Multi-head attention of `q_in` over `kv`; optionally causal (queries may
/// only look at keys at their own position or earlier).
fn mha<'t>(
    ctx: &Ctx<'t, '_>,
    prefix: &str,
    q_in: Var<'t>,
    kv: Var<'t>,
    heads: usize,
    causal: bool,
) -> Var<'t> {
    let d = q_in.shape()[1];
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = linear(ctx, &format!("{prefix}.q"), q_in);
    let k = linear(ctx, &format!("{prefix}.k"), kv);
    let v = linear(ctx, &format!("{prefix}.v"), kv);
    let n = q.shape()[0];
    let m = k.shape()[0];
    let causal_mask =
        causal.then(|| Array2::from_shape_fn((n, m), |(i, j)| j <= i));
    let mut heads_out = Vec::with_capacity(heads);
    for a in 0..heads {
        let qa = q.slice_cols(a * dh, (a + 1) * dh);
        let ka = k.slice_cols(a * dh, (a + 1) * dh);
        let va = v.slice_cols(a * dh, (a + 1) * dh);
        let mut scores = qa.matmul(ka.transpose()).mul_scalar(scale);
        if let Some(mask) = &causal_mask {
            scores = scores.mask_fill(mask, f64::NEG_INFINITY);
        }
        heads_out.push(scores.softmax_rows().matmul(va));
    }
    let merged = if heads_out.len() == 1 {
        heads_out[0]
    } else {
        concat_cols(&heads_out)
    };
    linear(ctx, &format!("{prefix}.o"), merged)
}

fn ffn<'t>(ctx: &Ctx<'t, '_>, prefix: &str, x: Var<'t>) -> Var<'t> {
    linear(
        ctx,
        &format!("{prefix}.2"),
        linear(ctx, &format!("{prefix}.1"), x).relu(),
    )
}

/// Sinusoidal position table; parameter-free so decoding length is unbounded.
fn positional(n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |(t, i)| {
        let rate = 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
        let angle = t as f64 / rate;
        if i % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

impl Seq2SeqModel {
    pub fn new(
        cfg: Seq2SeqConfig,
        chars: CharInventory,
        phonemes: PhonemeInventory,
        seed: u64,
    ) -> Self {
        cfg.validate();
        let mut params = Params::new();
        let mut init = Init::new(seed);
        let d = cfg.model_dim;
        params.insert("cenc.emb", init.uniform2(chars.len(), d, 0.1));
        for l in 0..cfg.enc_layers {
            init_layer_norm(&mut params, &mut init, &format!("cenc.l{l}.ln1"), d);
            init_mha(&mut params, &mut init, &format!("cenc.l{l}.attn"), d);
            init_layer_norm(&mut params, &mut init, &format!("cenc.l{l}.ln2"), d);
            init_linear(&mut params, &mut init, &format!("cenc.l{l}.ffn.1"), d, cfg.ffn_dim);
            init_linear(&mut params, &mut init, &format!("cenc.l{l}.ffn.2"), cfg.ffn_dim, d);
        }
        init_layer_norm(&mut params, &mut init, "cenc.ln", d);
        params.insert("dec.emb", init.uniform2(phonemes.total_symbols(), d, 0.1));
        for l in 0..cfg.dec_layers {
            init_layer_norm(&mut params, &mut init, &format!("dec.l{l}.ln1"), d);
            init_mha(&mut params, &mut init, &format!("dec.l{l}.self"), d);
            init_layer_norm(&mut params, &mut init, &format!("dec.l{l}.ln2"), d);
            init_mha(&mut params, &mut init, &format!("dec.l{l}.cross"), d);
            init_layer_norm(&mut params, &mut init, &format!("dec.l{l}.ln3"), d);
            init_linear(&mut params, &mut init, &format!("dec.l{l}.ffn.1"), d, cfg.ffn_dim);
            init_linear(&mut params, &mut init, &format!("dec.l{l}.ffn.2"), cfg.ffn_dim, d);
        }
        init_layer_norm(&mut params, &mut init, "dec.ln", d);
        init_linear(&mut params, &mut init, "dec.out", d, phonemes.total_symbols());
        Seq2SeqModel {
            cfg,
            chars,
            phonemes,
            params,
        }
    }

    /// Distribution width: content phonemes plus the sequence markers.
    pub fn output_vocab_size(&self) -> usize {
        self.phonemes.total_symbols()
    }

    /// Decode length cap for an input of `input_len` characters.
    pub fn max_decode_len(&self, input_len: usize) -> usize {
        self.cfg.max_len_override.unwrap_or(4 * input_len + 4)
    }

    fn check_char_ids(&self, char_ids: &[usize]) -> Result<()> {
        if char_ids.is_empty() {
            return Err(Error::EmptyWord(String::new()));
        }
        if let Some(&bad) = char_ids.iter().find(|&&c| c >= self.chars.len()) {
            return Err(Error::TokenIdOutOfRange(bad, self.chars.len()));
        }
        Ok(())
    }

    fn encode_graph<'t>(&self, ctx: &Ctx<'t, '_>, char_ids: &[usize]) -> Var<'t> {
        let d = self.cfg.model_dim;
        let emb = ctx.p("cenc.emb").gather_rows(char_ids);
        let pos = ctx.tape.leaf2(positional(char_ids.len(), d));
        let mut x = emb.add(pos);
        for l in 0..self.cfg.enc_layers {
            let pre = layer_norm(ctx, &format!("cenc.l{l}.ln1"), x);
            x = x.add(mha(ctx, &format!("cenc.l{l}.attn"), pre, pre, self.cfg.heads, false));
            let pre = layer_norm(ctx, &format!("cenc.l{l}.ln2"), x);
            x = x.add(ffn(ctx, &format!("cenc.l{l}.ffn"), pre));
        }
        layer_norm(ctx, "cenc.ln", x)
    }

    /// Logits `[t, V]` for a decoder input sequence (which starts with the
    /// begin marker).
    fn decoder_logits<'t>(
        &self,
        ctx: &Ctx<'t, '_>,
        memory: Var<'t>,
        decoder_input: &[usize],
    ) -> Var<'t> {
        let d = self.cfg.model_dim;
        let emb = ctx.p("dec.emb").gather_rows(decoder_input);
        let pos = ctx.tape.leaf2(positional(decoder_input.len(), d));
        let mut x = emb.add(pos);
        for l in 0..self.cfg.dec_layers {
            let pre = layer_norm(ctx, &format!("dec.l{l}.ln1"), x);
            x = x.add(mha(ctx, &format!("dec.l{l}.self"), pre, pre, self.cfg.heads, true));
            let pre = layer_norm(ctx, &format!("dec.l{l}.ln2"), x);
            x = x.add(mha(ctx, &format!("dec.l{l}.cross"), pre, memory, self.cfg.heads, false));
            let pre = layer_norm(ctx, &format!("dec.l{l}.ln3"), x);
            x = x.add(ffn(ctx, &format!("dec.l{l}.ffn"), pre));
        }
        linear(ctx, "dec.out", layer_norm(ctx, "dec.ln", x))
    }

    /// Next-symbol log-probabilities given the emitted prefix.
    pub fn step_logprobs(&self, char_ids: &[usize], prefix: &[usize]) -> Result<Vec<f64>> {
        self.check_char_ids(char_ids)?;
        let tape = Tape::new();
        let ctx = Ctx::new(&tape, &self.params);
        let memory = self.encode_graph(&ctx, char_ids);
        let mut input = Vec::with_capacity(prefix.len() + 1);
        input.push(self.phonemes.bos_id());
        input.extend_from_slice(prefix);
        let logits = self.decoder_logits(&ctx, memory, &input);
        let lp = logits.log_softmax_rows().row(input.len() - 1);
        Ok(lp.value().iter().copied().collect())
    }

    /// Teacher-forced mean token cross entropy of a gold phoneme sequence
    /// (the end marker is the final target), built on `ctx`'s tape.
    pub fn nll_tape<'t>(
        &self,
        ctx: &Ctx<'t, '_>,
        char_ids: &[usize],
        gold: &[usize],
    ) -> Result<Var<'t>> {
        self.check_char_ids(char_ids)?;
        if let Some(&bad) = gold.iter().find(|&&p| p >= self.phonemes.len()) {
            return Err(Error::TokenIdOutOfRange(bad, self.phonemes.len()));
        }
        if gold.len() > self.max_decode_len(char_ids.len()) {
            return Err(Error::EmptyWord(format!(
                " (gold length {} exceeds the decode cap {})",
                gold.len(),
                self.max_decode_len(char_ids.len())
            )));
        }
        let memory = self.encode_graph(ctx, char_ids);
        let mut input = Vec::with_capacity(gold.len() + 1);
        input.push(self.phonemes.bos_id());
        input.extend_from_slice(gold);
        let mut targets = gold.to_vec();
        targets.push(self.phonemes.eos_id());
        let logits = self.decoder_logits(ctx, memory, &input);
        let picked = logits.log_softmax_rows().select_per_row(&targets);
        Ok(picked.sum_all().mul_scalar(-1.0 / targets.len() as f64))
    }

    /// Loss as a plain number.
    pub fn nll_value(&self, char_ids: &[usize], gold: &[usize]) -> Result<f64> {
        let tape = Tape::new();
        let ctx = Ctx::new(&tape, &self.params);
        Ok(self.nll_tape(&ctx, char_ids, gold)?.scalar_value())
    }

    /// Length-bounded beam search. Keeps the top-`k` prefixes per step by
    /// cumulative log-probability; a hypothesis completes when it emits the
    /// end marker or reaches the length cap. Returns up to `k` completed
    /// hypotheses, best first; ties break toward the lower phoneme ids.
    pub fn beam_decode(&self, char_ids: &[usize], k: usize) -> Result<Vec<(Vec<usize>, f64)>> {
        assert!(k >= 1, "beam size must be >= 1");
        self.check_char_ids(char_ids)?;
        let cap = self.max_decode_len(char_ids.len());
        let eos = self.phonemes.eos_id();
        let content = self.phonemes.len();

        // (phoneme sequence, cumulative log-probability)
        let mut live: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 0.0)];
        let mut done: Vec<(Vec<usize>, f64)> = Vec::new();
        for _ in 0..cap {
            if live.is_empty() {
                break;
            }
            let mut candidates: Vec<(Vec<usize>, f64, bool)> = Vec::new();
            for (seq, score) in &live {
                let lp = self.step_logprobs(char_ids, seq)?;
                for sym in 0..content {
                    let mut next = seq.clone();
                    next.push(sym);
                    candidates.push((next, score + lp[sym], false));
                }
                candidates.push((seq.clone(), score + lp[eos], true));
            }
            sort_hypotheses3(&mut candidates);
            candidates.truncate(k);
            live.clear();
            for (seq, score, finished) in candidates {
                if finished {
                    done.push((seq, score));
                } else {
                    live.push((seq, score));
                }
            }
        }
        // Anything still alive hit the cap; it completes as-is.
        done.extend(live);
        sort_hypotheses(&mut done);
        done.truncate(k);
        Ok(done)
    }
}

fn sort_hypotheses(h: &mut [(Vec<usize>, f64)]) {
    h.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

fn sort_hypotheses3(h: &mut [(Vec<usize>, f64, bool)]) {
    h.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_model(seed: u64, max_len_override: Option<usize>) -> Seq2SeqModel {
        let chars = CharInventory::new(vec!['a', 'b', 'c', 'd']).unwrap();
        let phonemes =
            PhonemeInventory::new(vec!["P1".into(), "P2".into(), "P3".into()]).unwrap();
        Seq2SeqModel::new(
            Seq2SeqConfig {
                model_dim: 8,
                heads: 2,
                enc_layers: 1,
                dec_layers: 1,
                ffn_dim: 12,
                max_len_override,
            },
            chars,
            phonemes,
            seed,
        )
    }

    /// Exhaustive oracle over all sequences up to `cap`: scores a sequence
    /// as the sum of its per-step log-probabilities, plus the end-marker
    /// log-probability when it stops before the cap.
    pub(crate) fn exhaustive_best(
        model: &Seq2SeqModel,
        char_ids: &[usize],
        cap: usize,
    ) -> (Vec<usize>, f64) {
        let content = model.phonemes.len();
        let eos = model.phonemes.eos_id();
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut consider = |seq: &[usize], score: f64| {
            let better = match &best {
                None => true,
                Some((bseq, bscore)) => {
                    score > *bscore || (score == *bscore && seq < bseq.as_slice())
                }
            };
            if better {
                best = Some((seq.to_vec(), score));
            }
        };
        // Depth-first over prefixes, each node scored incrementally.
        fn walk(
            model: &Seq2SeqModel,
            char_ids: &[usize],
            cap: usize,
            content: usize,
            eos: usize,
            seq: &mut Vec<usize>,
            score: f64,
            consider: &mut impl FnMut(&[usize], f64),
        ) {
            if seq.len() == cap {
                consider(seq, score);
                return;
            }
            let lp = model.step_logprobs(char_ids, seq).unwrap();
            consider(seq, score + lp[eos]);
            for sym in 0..content {
                seq.push(sym);
                walk(model, char_ids, cap, content, eos, seq, score + lp[sym], consider);
                seq.pop();
            }
        }
        let mut seq = Vec::new();
        walk(
            model,
            char_ids,
            cap,
            content,
            eos,
            &mut seq,
            0.0,
            &mut consider,
        );
        best.expect("at least the empty sequence")
    }

    #[test]
    fn logprobs_are_a_distribution() {
        let model = tiny_model(3, None);
        let lp = model.step_logprobs(&[0, 1], &[2]).unwrap();
        assert_eq!(lp.len(), model.output_vocab_size());
        let total: f64 = lp.iter().map(|x| x.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn greedy_equals_beam_one() {
        let model = tiny_model(4, None);
        let input = [0, 2, 1];
        // Greedy: repeatedly take the argmax symbol (lowest id on ties).
        let cap = model.max_decode_len(input.len());
        let eos = model.phonemes.eos_id();
        let mut seq = Vec::new();
        let mut score = 0.0;
        for _ in 0..cap {
            let lp = model.step_logprobs(&input, &seq).unwrap();
            let candidates: Vec<usize> =
                (0..model.phonemes.len()).chain([eos]).collect();
            let &best = candidates
                .iter()
                .max_by(|&&a, &&b| lp[a].total_cmp(&lp[b]).then(b.cmp(&a)))
                .unwrap();
            score += lp[best];
            if best == eos {
                break;
            }
            seq.push(best);
        }
        let beam = model.beam_decode(&input, 1).unwrap();
        assert_eq!(beam.len(), 1);
        assert_eq!(beam[0].0, seq);
        assert!((beam[0].1 - score).abs() < 1e-12);
    }

    #[test]
    fn results_sorted_and_distinct() {
        let model = tiny_model(5, None);
        let out = model.beam_decode(&[1, 3], 6).unwrap();
        for w in out.windows(2) {
            assert!(w[0].1 >= w[1].1);
            assert_ne!(w[0].0, w[1].0);
        }
    }

    #[test]
    fn empty_word_is_an_error() {
        let model = tiny_model(6, None);
        assert!(model.beam_decode(&[], 3).is_err());
        assert!(model.step_logprobs(&[], &[]).is_err());
    }

    #[test]
    fn uniform_distribution_loss_is_ln_v() {
        let mut model = tiny_model(7, None);
        // Zeroing the output projection forces uniform logits at every step.
        *model.params.get_mut("dec.out.w") = ndarray::Array2::zeros((
            model.cfg.model_dim,
            model.output_vocab_size(),
        ))
        .into_dyn();
        *model.params.get_mut("dec.out.b") =
            ndarray::Array1::zeros(model.output_vocab_size()).into_dyn();
        let loss = model.nll_value(&[0, 1], &[0, 2, 1]).unwrap();
        let v = model.output_vocab_size() as f64;
        assert!((loss - v.ln()).abs() < 1e-12);
    }

    #[test]
    fn certain_gold_loss_is_zero() {
        let mut model = tiny_model(8, None);
        // Bias the output projection so the end marker has probability one;
        // with an empty gold sequence the model emits gold with certainty.
        *model.params.get_mut("dec.out.w") = ndarray::Array2::zeros((
            model.cfg.model_dim,
            model.output_vocab_size(),
        ))
        .into_dyn();
        let eos = model.phonemes.eos_id();
        let mut bias = ndarray::Array1::from_elem(model.output_vocab_size(), -1000.0);
        bias[eos] = 1000.0;
        *model.params.get_mut("dec.out.b") = bias.into_dyn();
        let loss = model.nll_value(&[0], &[]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn exhaustive_beam_matches_oracle_on_tiny_model() {
        for seed in [10, 11, 12] {
            // Max-length-3 model over 3 phonemes; beam 3^3 never prunes the
            // optimum.
            let model = tiny_model(seed, Some(3));
            let input = [2];
            let (oracle_seq, oracle_score) = exhaustive_best(&model, &input, 3);
            let beam = model.beam_decode(&input, 27).unwrap();
            assert_eq!(beam[0].0, oracle_seq, "seed {seed}");
            assert!((beam[0].1 - oracle_score).abs() < 1e-9, "seed {seed}");
        }
    }
}
