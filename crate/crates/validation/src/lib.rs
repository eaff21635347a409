//! Holds the `acceptance` test target. Kept in its own package so that the
//! long-running end-to-end checks run after the unit and integration suites.
