//! Holds the `acceptance` test target, which runs every acceptance
//! criterion and prints one PASS/FAIL line for each. It lives in its own
//! package so that cargo runs it after the unit and integration tests.
