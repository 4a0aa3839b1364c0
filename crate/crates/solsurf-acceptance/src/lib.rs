//! Acceptance gate crate; the checks live in `tests/acceptance.rs`.
