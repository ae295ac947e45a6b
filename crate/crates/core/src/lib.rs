//! Metric distortion analysis for tournament and k-tournament voting rules.
//!
//! The crate computes, for a weighted preference profile:
//!
//! * every ordinal statistic a (k-)tournament rule may consume ([`profile`]);
//! * biased metrics, the block-integral distortion condition, and the exact
//!   worst-case distortion of a candidate or lottery by rational linear
//!   programming ([`metric`]);
//! * stable k-lotteries under the copy-counting tie-break ([`lottery`]);
//! * the voting rules built on them ([`rules`]);
//! * tournament-only distortion certificates ([`certificates`]);
//! * the 5-candidate lower-bound instance and related checks ([`bench`]).
//!
//! Most of the numeric code is generic over [`Scalar`]: instantiate it with
//! [`Rational`] for exact answers or `f64` for speed. The aliases below name
//! the common instantiations.

pub mod bench;
pub mod certificates;
pub mod error;
pub mod lottery;
pub mod metric;
pub mod profile;
pub mod random;
pub mod rules;
pub mod scalar;
pub mod simplex;

pub use error::{Error, Result};
pub use profile::{
    parse_profile, parse_profile_as, CandidateId, CandidateSet, KTournamentSummary, Profile,
    Ranking, TournamentMatrix, VoterBlock,
};
pub use scalar::{Rational, Real, Scalar};

pub type ExactProfile = Profile<Rational>;
pub type FloatProfile = Profile<f64>;
pub type ExactMatrix = TournamentMatrix<Rational>;
pub type FloatMatrix = TournamentMatrix<f64>;
pub type ExactMetric = metric::MetricTable<Rational>;
pub type ExactReport = metric::DistortionReport<Rational>;
pub type FloatLottery = lottery::Lottery<f64>;
