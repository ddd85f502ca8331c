//! Watermark interference arena.
//!
//! A desk-scale laboratory for studying how invisible image watermarks
//! interfere with each other: six classical codecs over a common embed/detect
//! contract, FPR-calibrated detection statistics, quality accounting,
//! re-watermarking attacks, the victim-by-attack interference matrix, a
//! method-identification classifier, and the end-to-end black-box attack
//! pipeline that ties them together.
//!
//! Everything is deterministic: all randomness flows from [`key::WatermarkKey`]
//! seeds through a counter-mode keyed PRF, so runs replay bit-identically.

pub mod arena;
pub mod attacks;
pub mod classify;
pub mod codecs;
pub mod corpus;
pub mod ecc;
pub mod image;
pub mod key;
pub mod pipeline;
pub mod quality;
pub mod stats;
pub mod transforms;
