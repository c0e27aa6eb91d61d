//! The shared sequence-model core: contextual encoder, masked linear-chain
//! CRF head, attention encoder-decoder with beam search, and training.

pub mod checkpoint;
pub mod crf;
pub mod encoder;
pub mod params;
pub mod seq2seq;
pub mod tape;
pub mod train;
pub mod vocab;

mod optim;

pub use checkpoint::Checkpoint;
pub use crf::{crf_log_partition, crf_nll_value, crf_viterbi, CrfValues, TransitionMask};
pub use encoder::{encode, EncoderConfig};
pub use optim::AdamW;
pub use params::{Ctx, Init, Params};
pub use seq2seq::{Seq2SeqConfig, Seq2SeqModel};
pub use tape::{concat_cols, stack_rows, Grads, Tape, Var};
pub use train::{TaggerModel, TagExample, TrainConfig, Trainer};
pub use vocab::Vocab;
