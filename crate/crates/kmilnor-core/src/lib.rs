//! Exact computational algebra for finite commutative rings: finitely
//! presented abelian groups via Smith normal form, Kähler differentials,
//! Milnor K-theory and Dennis-Stein symbols, and the verification pipeline
//! relating relative Milnor K-groups of split nilpotent extensions to
//! quotients of absolute differentials.

pub mod abgroup;
pub mod fring;
pub mod goodwillie;
pub mod kahler;
pub mod milnork;
pub mod report;
