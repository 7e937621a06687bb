use delta_repair::eval::verify_stabilizing;
use delta_repair::oracles::{
    brute_force_independent, brute_force_step, independent_gap, stage_below_step, stage_end_gap, step_below_stage,
    two_results, Example, DEFAULT_NODE_GUARD, DEFAULT_SIZE_GUARD,
};
use delta_repair::repair::{repair, run_all, Semantics};

fn run(ex: &Example, s: Semantics) -> Vec<String> {
    let r = repair(&ex.program, &ex.db, s, &Default::default()).unwrap();
    assert!(verify_stabilizing(&ex.db, &ex.program, &r.deleted).unwrap());
    ex.names_of(&r.deleted)
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn independent_can_delete_an_underivable_tuple() {
    let ex = independent_gap(5);
    let all_r1 = strs(&["a1", "a2", "a3", "a4", "a5"]);
    assert_eq!(run(&ex, Semantics::Independent), ["b"]);
    assert_eq!(run(&ex, Semantics::End), all_r1);
    assert_eq!(run(&ex, Semantics::Stage), all_r1);
    assert_eq!(run(&ex, Semantics::Step), all_r1);
    let oracle = brute_force_independent(&ex.program, &ex.db, DEFAULT_SIZE_GUARD).unwrap();
    assert_eq!(ex.names_of(&oracle), ["b"]);
}

#[test]
fn stage_strictly_inside_end() {
    let ex = stage_end_gap(3);
    assert_eq!(run(&ex, Semantics::Stage), ["a1", "a2"]);
    assert_eq!(run(&ex, Semantics::End), ["a1", "a2", "b1", "b2", "b3"]);
}

#[test]
fn step_strictly_inside_stage() {
    let ex = step_below_stage(3);
    assert_eq!(run(&ex, Semantics::Stage), ["a", "b1", "b2", "b3"]);
    assert_eq!(run(&ex, Semantics::Step), ["a"]);
    let oracle = brute_force_step(&ex.program, &ex.db, DEFAULT_NODE_GUARD).unwrap();
    assert_eq!(ex.names_of(&oracle), ["a"]);
}

#[test]
fn stage_smaller_than_step() {
    let ex = stage_below_step(3);
    assert_eq!(run(&ex, Semantics::Stage), ["a", "b"]);
    assert_eq!(run(&ex, Semantics::Step), ["a", "c1", "c2", "c3"]);
    let oracle = brute_force_step(&ex.program, &ex.db, DEFAULT_NODE_GUARD).unwrap();
    assert_eq!(ex.names_of(&oracle), ["a", "c1", "c2", "c3"]);
}

#[test]
fn two_minimum_results_tie_break_to_smaller_id() {
    let ex = two_results();
    let all = run_all(&ex.program, &ex.db, None).unwrap();
    for s in [Semantics::Independent, Semantics::Step] {
        assert_eq!(ex.names_of(&all.results[&s].deleted), ["a"], "{s}");
    }
    let oracle = brute_force_step(&ex.program, &ex.db, DEFAULT_NODE_GUARD).unwrap();
    assert_eq!(ex.names_of(&oracle), ["a"]);
}
