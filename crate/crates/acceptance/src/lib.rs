//! Holds the `acceptance` test target. Run it with
//! `cargo test -p snacs-suite --test acceptance`.
