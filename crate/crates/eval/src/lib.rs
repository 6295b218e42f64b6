//! Acceptance checks for the recovery pipeline live in `tests/acceptance.rs`
//! and run with `cargo test -p nusfft-eval --test acceptance`. Pass criterion
//! numbers after `--` to run a subset.
