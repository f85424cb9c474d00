//! Shared entropy-coding substrate: a context-adaptive binary range coder
//! for occupancy and transform coefficients, and an RFC 1951 DEFLATE codec
//! for LoD residual payloads.

pub mod bitio;
pub mod deflate;
pub mod range;

pub use bitio::{BitSink, BitSource};
pub use deflate::{lz_compress, lz_decompress};
pub use range::{
    range_decode, range_encode, AdaptiveBinModel, ModelTable, RangeDecoder, RangeEncoder,
};
