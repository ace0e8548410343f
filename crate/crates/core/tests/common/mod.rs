#![allow(dead_code)]

pub mod corpus;
pub mod crud;
pub mod oracle;
pub mod scenes;
