#![allow(dead_code)]

pub mod corpus;
pub mod mkn_oracle;
pub mod reml_oracle;
pub mod sim;
