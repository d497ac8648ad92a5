//! Persistence: the single-array container, corpus manifests, source
//! ingestion and tiling of large sources.

pub mod manifest;
pub mod npy;
pub mod source;
pub mod tiles;

pub use manifest::{read_manifest, write_manifest, CorpusManifest};
pub use npy::{read_array, write_array};
pub use tiles::tile_iter;
