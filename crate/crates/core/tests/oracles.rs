use std::collections::BTreeSet;

use delta_repair::eval::{is_stable, verify_stabilizing};
use delta_repair::oracles::{
    brute_force_independent, brute_force_step, encode_vertex_cover, generate_instance, min_vertex_cover,
    random_connected_graph, GenerateError, Graph, OracleError, Template, VcVariant, DEFAULT_NODE_GUARD,
    DEFAULT_SIZE_GUARD,
};
use delta_repair::repair::{repair, run_all, Semantics};

#[test]
fn single_edge_cover() {
    let g = Graph::new(2, [(0, 1)]);
    let (program, db) = encode_vertex_cover(&g, VcVariant::Independent3Rule);
    assert_eq!(db.loaded_len(), 4);
    assert_eq!(program.len(), 3);
    let s = brute_force_independent(&program, &db, DEFAULT_SIZE_GUARD).unwrap();
    assert_eq!(s.len(), 1);
}

#[test]
fn triangle_cover() {
    let g = Graph::triangle();
    assert_eq!(min_vertex_cover(&g), 2);
    let (program, db) = encode_vertex_cover(&g, VcVariant::Independent3Rule);
    assert_eq!(
        brute_force_independent(&program, &db, DEFAULT_SIZE_GUARD)
            .unwrap()
            .len(),
        2
    );
    let (program, db) = encode_vertex_cover(&g, VcVariant::Step1Rule);
    assert_eq!(program.len(), 1);
    assert_eq!(brute_force_step(&program, &db, DEFAULT_NODE_GUARD).unwrap().len(), 2);
}

#[test]
fn edgeless_graph_is_stable() {
    let (program, db) = encode_vertex_cover(&Graph::new(4, []), VcVariant::Independent3Rule);
    assert!(is_stable(&db, &program).unwrap());
}

#[test]
fn small_graph_covers() {
    for seed in 0..20 {
        let g = random_connected_graph(5, 0.4, seed);
        let want = min_vertex_cover(&g);
        let (program, db) = encode_vertex_cover(&g, VcVariant::Independent3Rule);
        let ind = repair(&program, &db, Semantics::Independent, &Default::default()).unwrap();
        assert!(ind.optimal);
        assert_eq!(ind.deleted.len(), want, "seed {seed}");
        let (program, db) = encode_vertex_cover(&g, VcVariant::Step1Rule);
        assert_eq!(
            brute_force_step(&program, &db, DEFAULT_NODE_GUARD).unwrap().len(),
            want,
            "seed {seed}"
        );
    }
}

#[test]
fn guard_is_enforced() {
    let g = random_connected_graph(8, 0.5, 1);
    let (program, db) = encode_vertex_cover(&g, VcVariant::Independent3Rule);
    assert!(matches!(
        brute_force_independent(&program, &db, 5),
        Err(OracleError::GuardExceeded { limit: 5, .. })
    ));
}

#[test]
fn brute_force_on_stable_instance_is_empty() {
    let (program, db) = encode_vertex_cover(&Graph::new(3, []), VcVariant::Step1Rule);
    assert!(brute_force_independent(&program, &db, DEFAULT_SIZE_GUARD)
        .unwrap()
        .is_empty());
    assert!(brute_force_step(&program, &db, DEFAULT_NODE_GUARD).unwrap().is_empty());
}

#[test]
fn template_names() {
    assert_eq!("cascade-5".parse::<Template>().unwrap(), Template::Cascade(5));
    assert_eq!("cascade-depth-3".parse::<Template>().unwrap(), Template::Cascade(3));
    assert_eq!("join-chain-2".parse::<Template>().unwrap(), Template::Join(2));
    assert_eq!("mixed".parse::<Template>().unwrap(), Template::Mixed);
    for t in Template::all() {
        assert_eq!(t.to_string().parse::<Template>().unwrap(), t);
    }
    assert!(matches!(
        "cascade-6".parse::<Template>(),
        Err(GenerateError::UnknownTemplate(_))
    ));
    assert!(matches!(
        "nope".parse::<Template>(),
        Err(GenerateError::UnknownTemplate(_))
    ));
}

#[test]
fn zero_scale_is_rejected() {
    assert_eq!(
        generate_instance(Template::Cascade(1), 0, 1).unwrap_err(),
        GenerateError::ZeroScale
    );
}

#[test]
fn generation_is_seed_deterministic() {
    let (p1, d1) = generate_instance(Template::Mixed, 50, 7).unwrap();
    let (p2, d2) = generate_instance(Template::Mixed, 50, 7).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(d1.catalog().tuples(), d2.catalog().tuples());
    let (_, d3) = generate_instance(Template::Mixed, 50, 8).unwrap();
    assert_ne!(d1.catalog().tuples(), d3.catalog().tuples());
}

#[test]
fn join_chain_at_scale_one_is_a_single_rule() {
    for k in 1..=5 {
        let (program, _) = generate_instance(Template::Join(k), 1, 0).unwrap();
        assert_eq!(program.len(), 1);
        assert_eq!(program.rule(0).body.len(), k as usize);
    }
}

#[test]
fn cascade_depth_five_agrees_across_semantics() {
    let (program, db) = generate_instance(Template::Cascade(5), 100, 3).unwrap();
    let all = run_all(&program, &db, None).unwrap();
    let end = &all.results[&Semantics::End].deleted;
    assert!(end.len() > 1);
    for (s, r) in &all.results {
        assert_eq!(&r.deleted, end, "{s}");
    }
}

#[test]
fn join_chain_independent_shrinks() {
    let mut prev = usize::MAX;
    let mut others = BTreeSet::new();
    for k in 1..=5 {
        let (program, db) = generate_instance(Template::Join(k), 40, 11).unwrap();
        let all = run_all(&program, &db, None).unwrap();
        let ind = all.results[&Semantics::Independent].deleted.len();
        assert!(ind <= prev, "k={k}: {ind} > {prev}");
        prev = ind;
        others.insert(all.results[&Semantics::End].deleted.len());
        for r in all.results.values() {
            assert!(verify_stabilizing(&db, &program, &r.deleted).unwrap());
        }
    }
    assert_eq!(others.len(), 1);
}
