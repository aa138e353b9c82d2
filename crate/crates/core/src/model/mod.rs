//! Domain types shared by every compilation stage.

mod codec;
mod provenance;
mod span;
mod table;

pub use codec::{decode_compressed, encode_compressed, encode_stream, CodecError};
pub use provenance::{merge_provenance, Confidence, Provenance, SpanSet, StatementId};
pub use span::{span_relation, SourceSpan, SpanRelation};
pub use table::{FileInfo, JumpType, LegacyEntry, MappingEntry, MappingTable};
