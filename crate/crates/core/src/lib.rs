pub mod fusion;
pub mod alarm;
pub mod covariance;
pub mod eval;
pub mod stream;
pub mod oracle;
