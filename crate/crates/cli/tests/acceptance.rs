//! Acceptance criteria 1 to 7, one line per criterion.

use aiphase::acceptance;

#[test]
fn acceptance_criteria() {
    let verdicts = acceptance::run_all();
    for v in &verdicts {
        println!("{}", v.line());
    }
    assert_eq!(verdicts.len(), 7);
    let failed: Vec<_> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
