//! Holds the `acceptance` test target. Run it with `cargo test -p oricci-validation --test acceptance`.
