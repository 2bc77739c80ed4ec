pub mod compare;
pub mod fixture;
