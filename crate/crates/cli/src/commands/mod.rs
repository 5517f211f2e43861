pub mod compare;
pub mod dedup;
pub mod experiment1;
pub mod experiment2;
pub mod extract;
pub mod filter;
pub mod rank;
