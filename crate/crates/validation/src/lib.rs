//! Holds the `acceptance` test target. The criteria live in a package of
//! their own so that a failing criterion does not stop cargo before the
//! library and CLI test targets have run.
