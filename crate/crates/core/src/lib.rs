pub mod bits;
pub mod bitvec;
pub mod codec;
pub mod coloring_lab;
pub mod error;
pub mod inner;
pub mod mmphf;
pub mod mphf;
pub mod process_lab;

pub use bitvec::RankSelectBitVector;
pub use error::{Error, Result};
pub use mphf::PerfectHashWithPayload;
pub use inner::LcpBucketMmphf;
pub use mmphf::{select_regime, BuildConfig, MonotoneHash, Regime, SortedKeySet, SpaceReport};
