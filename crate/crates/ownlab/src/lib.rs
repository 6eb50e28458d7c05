//! A laboratory for ownership types.
//!
//! This crate implements a small MIR-flavoured language with explicit
//! ownership, and everything needed to study how a borrow checker relates to
//! runtime memory safety:
//!
//! * [`lang`] — syntax, parser, well-formedness, and type checking for the
//!   object language (`.own` files);
//! * [`interp`] — a small-step interpreter whose stuck states are undefined
//!   behaviour (use-after-free, double-free, invalid addresses), able to run
//!   programs the checkers reject;
//! * [`facts`] — the relational facts (reads, writes, moves, loan liveness,
//!   path conflicts, lifetime flows) shared by both checker models;
//! * [`polonius`] — the access-error and subset-error judgments;
//! * [`perms`] — the permissions model: per-instruction permission states,
//!   step diffs, and expectation marks;
//! * [`diffcheck`] — random program generation, brute-force oracles, and
//!   differential campaigns relating the two models and the interpreter;
//! * [`render`] — deterministic text/SVG/HTML emitters for memory-trace
//!   diagrams, permission tables, and annotated listings;
//! * [`cli`] — the `ownlab` command-line pipeline.
//!
//! The `examples/` directory contains one runnable example per capability;
//! start with `cargo run --example check_borrow_models`.

pub mod cli;
pub mod corpus;
pub mod diffcheck;
pub mod facts;
pub mod interp;
pub mod lang;
pub mod perms;
pub mod polonius;
pub mod render;
