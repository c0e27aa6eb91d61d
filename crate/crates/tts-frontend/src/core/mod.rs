//! Domain types shared by every stage of the pipeline: tokens, symbol
//! inventories, BIES span labels and prosody levels.

pub mod inventory;
pub mod prosody;
pub mod span;
pub mod token;

pub use inventory::{CategoryInventory, CharInventory, PhonemeInventory};
pub use prosody::ProsodyLevel;
pub use span::{LabelScheme, Position, SpanTag};
pub use token::{token_texts, tokenize, Token};
