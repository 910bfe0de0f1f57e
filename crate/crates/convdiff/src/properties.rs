//! Structural property suite (to come).
