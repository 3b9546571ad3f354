//! Full acceptance run. Prints one line per criterion and checks the
//! outcome against the expected pass/fail state.
//!
//! Criteria 10 and 16 are known failures: the measured operator norm
//! exceeds the stated constant (it matches the sharp one), and the
//! L^1.5 norm of u_x grows far less than tenfold by 0.99 T*. Both are
//! computed in full and reported as failing.

use lab::criteria::{run_suite, Suite};

const KNOWN_FAILURES: [&str; 2] = ["10", "16"];

#[test]
fn acceptance() {
    let results = run_suite(Suite::All, |c| println!("{}", c.line()));
    assert_eq!(results.len(), 17);
    let failed: Vec<&str> = results.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    println!("failed criteria: {failed:?}");
    let unexpected: Vec<String> = results
        .iter()
        .filter(|c| c.pass == KNOWN_FAILURES.contains(&c.id))
        .map(|c| c.line())
        .collect();
    assert!(unexpected.is_empty(), "outcome differs from the expected state:\n{}", unexpected.join("\n"));
}
