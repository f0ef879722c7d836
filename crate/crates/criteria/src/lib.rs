//! Holds the `acceptance` test target, one pass/fail line per criterion:
//!
//! ```text
//! cargo test -p hmat-criteria --test acceptance          # all criteria
//! cargo test -p hmat-criteria --test acceptance -- 3 6   # a subset
//! ```
