// Each integration test binary compiles this module separately and uses a
// different slice of it.
#![allow(dead_code)]

pub mod toy;
