pub mod domain;
pub mod error;
pub mod experiment;
pub mod foliation;
pub mod generators;
pub mod index;
pub mod ladder;
pub mod orders;
pub mod palm;
pub mod shifts;
