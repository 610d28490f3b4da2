//! Firmware corpus curation toolkit.
//!
//! The crate covers the whole life cycle of a firmware corpus: a line-delimited
//! meta-data manifest, cryptographic and block-wise digests with sample
//! deduplication, recursive unpacking with root-filesystem verification,
//! content identification (kernel banners, ISAs, ELF inventory), checksec-style
//! hardening trends, vulnerability ground-truth candidate matching, a replication
//! engine with a direct / archive / hash-lookup / manual fallback chain, and a
//! 16-measure soundness scoring framework for documenting corpora.

pub mod acquire;
pub mod digest;
pub mod groundtruth;
pub mod harden;
pub mod identify;
pub mod manifest;
pub mod soundness;
pub mod table;
pub mod unpack;

pub use digest::{block_digest, dedup, fuzzy_similarity, sha256_bytes, sha256_digest, sha256_file};
pub use manifest::{parse_manifest, CorpusManifest, FirmwareRecord};
