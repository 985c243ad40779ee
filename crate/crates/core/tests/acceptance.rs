use multilevel_control::acceptance::run_all;

#[test]
fn acceptance_criteria() {
    let outcomes = run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
