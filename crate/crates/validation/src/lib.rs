//! Holds the workspace acceptance suite (`tests/acceptance.rs`); there is no
//! library code. Run it alone with `cargo test -p rawmuse-validation`.
