//! File-backed store of content records keyed by content id.

mod record;
mod store;

pub use record::{ContentRecord, SIGNATURE_ENCODING, canonical_alpha, format_alpha};
pub use store::{PendingWrite, RecordStore, STORE_FORMAT_VERSION};
