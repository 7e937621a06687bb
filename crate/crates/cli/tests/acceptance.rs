//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use delta_repair::eval::{run_stage, verify_stabilizing};
use delta_repair::model::Database;
use delta_repair::oracles::{
    brute_force_independent, brute_force_step, encode_vertex_cover, generate_instance, independent_gap,
    min_vertex_cover, random_connected_graph, random_instance, running_example, stage_below_step, stage_end_gap,
    step_below_stage, Example, Template, VcVariant, DEFAULT_NODE_GUARD, DEFAULT_SIZE_GUARD,
};
use delta_repair::provenance::{build_formula, build_graph};
use delta_repair::repair::{repair, run_all, RepairResult, Semantics};
use delta_repair::solver::{solve_by_enumeration, solve_min_ones, CnfProblem, Lit, SolverError};
use delta_repair::{DeltaProgram, TupleId};
use delta_repair_cli::data::write_dir;

const RANDOM_INSTANCES: u64 = 500;
const ORACLE_INSTANCES: u64 = 200;
const RANDOM_CNFS: u64 = 300;
const GRAPHS: u64 = 60;
const PERMUTATIONS: u64 = 10;
const CASCADE_SCALE: usize = 1800;

/// Every repair produced by the checks, re-verified at the end.
#[derive(Default)]
struct Produced {
    results: Vec<(String, DeltaProgram, Database, BTreeSet<TupleId>)>,
}

impl Produced {
    fn add(&mut self, what: String, program: &DeltaProgram, db: &Database, deleted: &BTreeSet<TupleId>) {
        self.results.push((what, program.clone(), db.clone(), deleted.clone()));
    }

    fn add_result(&mut self, what: &str, program: &DeltaProgram, db: &Database, r: &RepairResult) {
        self.add(format!("{what} {}", r.semantics), program, db, &r.deleted);
    }
}

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn running_example_sets(out: &mut Produced) -> Outcome {
    let ex = running_example();
    let expect = [
        (Semantics::End, &["g2", "a2", "a3", "w1", "w2", "p1", "p2", "c"][..]),
        (Semantics::Stage, &["g2", "a2", "a3", "w1", "w2", "p1", "p2"]),
        (Semantics::Step, &["g2", "a2", "a3", "w1", "w2"]),
        (Semantics::Independent, &["g2", "ag2", "ag3"]),
    ];
    let mut slowest = Duration::ZERO;
    for (s, want) in expect {
        let start = Instant::now();
        let r = repair(&ex.program, &ex.db, s, &Default::default()).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        ensure!(r.deleted == ex.ids(want), "{s}: got {:?}", ex.names_of(&r.deleted));
        ensure!(took < Duration::from_secs(1), "{s} took {took:?}");
        out.add_result("running example", &ex.program, &ex.db, &r);
    }
    Ok(format!("sizes 8/7/5/3, slowest {slowest:.2?}"))
}

/// CNF text as a set of sorted literal lists.
fn normalize(cnf: &str) -> BTreeSet<Vec<String>> {
    cnf.split('∧')
        .map(|c| {
            let mut lits: Vec<String> = c
                .trim()
                .trim_matches(|ch| ch == '(' || ch == ')')
                .split('∨')
                .map(|l| l.trim().to_string())
                .collect();
            lits.sort();
            lits
        })
        .collect()
}

fn running_example_provenance(_: &mut Produced) -> Outcome {
    let ex = running_example();
    let f = build_formula(&ex.program, &ex.db).map_err(|e| e.to_string())?;
    let label = |t| ex.name_of(t).unwrap().to_string();
    let got = normalize(&f.simplified().render_negation(label));
    let want = normalize(
        "¬g2 ∧ (¬a2 ∨ ¬ag2 ∨ g2) ∧ (¬a3 ∨ ¬ag3 ∨ g2) ∧ (¬p1 ∨ ¬w1 ∨ a2) ∧ (¬p2 ∨ ¬w2 ∨ a3) ∧ (¬c ∨ p1 ∨ ¬w1 ∨ ¬w2)",
    );
    ensure!(got == want, "negated formula {got:?}");
    let g = build_graph(&ex.program, &ex.db).map_err(|e| e.to_string())?;
    let benefits = [
        ("w1", 3),
        ("p1", 1),
        ("a2", -1),
        ("g2", -1),
        ("a3", -1),
        ("p2", 2),
        ("w2", 3),
        ("c", 1),
    ];
    for (n, b) in benefits {
        ensure!(g.benefit(ex.id(n)) == b, "benefit of {n} is {}", g.benefit(ex.id(n)));
    }
    let layers = [
        ("g2", 1),
        ("a2", 2),
        ("a3", 2),
        ("w1", 3),
        ("w2", 3),
        ("p1", 3),
        ("p2", 3),
        ("c", 4),
    ];
    for (n, l) in layers {
        ensure!(g.layer(ex.id(n)) == Some(l), "layer of {n} is {:?}", g.layer(ex.id(n)));
    }
    Ok(format!(
        "{} clauses after simplification, {} layers",
        got.len(),
        g.num_layers()
    ))
}

fn containment(out: &mut Produced) -> Outcome {
    for seed in 0..RANDOM_INSTANCES {
        let (program, db) = random_instance(seed);
        let all = run_all(&program, &db, None).map_err(|e| format!("seed {seed}: {e}"))?;
        let set = |s: Semantics| &all.results[&s].deleted;
        ensure!(
            set(Semantics::Stage).is_subset(set(Semantics::End)),
            "seed {seed}: stage not in end"
        );
        ensure!(
            set(Semantics::Step).is_subset(set(Semantics::End)),
            "seed {seed}: step not in end"
        );
        let ind = set(Semantics::Independent).len();
        ensure!(
            ind <= set(Semantics::Stage).len(),
            "seed {seed}: independent larger than stage"
        );
        let step = brute_force_step(&program, &db, DEFAULT_NODE_GUARD).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(ind <= step.len(), "seed {seed}: independent larger than optimal step");
        for r in all.results.values() {
            out.add_result(&format!("random {seed}"), &program, &db, r);
        }
        out.add(format!("random {seed} exhaustive step"), &program, &db, &step);
    }
    Ok(format!("{RANDOM_INSTANCES} random instances"))
}

fn ex_run(ex: &Example, s: Semantics, out: &mut Produced) -> Result<Vec<String>, String> {
    let r = repair(&ex.program, &ex.db, s, &Default::default()).map_err(|e| e.to_string())?;
    out.add_result("separation", &ex.program, &ex.db, &r);
    Ok(ex.names_of(&r.deleted))
}

fn separations(out: &mut Produced) -> Outcome {
    let n = 4;
    let ex = independent_gap(n);
    let r1: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    ensure!(
        ex_run(&ex, Semantics::Independent, out)? == ["b"],
        "independent gap: independent"
    );
    for s in [Semantics::End, Semantics::Stage, Semantics::Step] {
        ensure!(ex_run(&ex, s, out)? == r1, "independent gap: {s}");
    }

    let ex = stage_end_gap(n);
    let stage = ex_run(&ex, Semantics::Stage, out)?;
    let end = ex_run(&ex, Semantics::End, out)?;
    ensure!(stage == ["a1", "a2"], "stage/end gap: stage {stage:?}");
    let mut want_end = vec!["a1".to_string(), "a2".to_string()];
    want_end.extend((1..=n).map(|i| format!("b{i}")));
    ensure!(end == want_end, "stage/end gap: end {end:?}");

    let ex = step_below_stage(n);
    let stage = ex_run(&ex, Semantics::Stage, out)?;
    let step = ex_run(&ex, Semantics::Step, out)?;
    let mut want_stage = vec!["a".to_string()];
    want_stage.extend((1..=n).map(|i| format!("b{i}")));
    ensure!(stage == want_stage, "step/stage gap: stage {stage:?}");
    ensure!(step == ["a"], "step/stage gap: step {step:?}");

    let ex = stage_below_step(n);
    let stage = ex_run(&ex, Semantics::Stage, out)?;
    let step = ex_run(&ex, Semantics::Step, out)?;
    let mut want_step = vec!["a".to_string()];
    want_step.extend((1..=n).map(|i| format!("c{i}")));
    ensure!(stage == ["a", "b"], "stage/step gap: stage {stage:?}");
    ensure!(step == want_step, "stage/step gap: step {step:?}");
    ensure!(stage.len() < step.len(), "stage/step gap: sizes");
    let exhaustive = brute_force_step(&ex.program, &ex.db, DEFAULT_NODE_GUARD).map_err(|e| e.to_string())?;
    ensure!(ex.names_of(&exhaustive) == want_step, "stage/step gap: exhaustive step");
    Ok(format!("four separating families at n = {n}"))
}

fn random_cnf(rng: &mut StdRng) -> CnfProblem {
    let n = rng.gen_range(1..=20);
    let clauses = (0..rng.gen_range(0..=3 * n))
        .map(|_| {
            (0..rng.gen_range(1..=4))
                .map(|_| Lit {
                    var: rng.gen_range(0..n),
                    positive: rng.gen_bool(0.5),
                })
                .collect()
        })
        .collect();
    let designated = (0..n).map(|_| rng.gen_bool(0.8)).collect();
    CnfProblem {
        num_vars: n,
        clauses,
        designated,
    }
}

fn independent_optimality(out: &mut Produced) -> Outcome {
    for seed in 0..ORACLE_INSTANCES {
        let (program, db) = random_instance(seed.wrapping_mul(7919).wrapping_add(1));
        let r = repair(&program, &db, Semantics::Independent, &Default::default()).map_err(|e| e.to_string())?;
        let oracle = brute_force_independent(&program, &db, DEFAULT_SIZE_GUARD).map_err(|e| e.to_string())?;
        ensure!(r.optimal, "instance {seed}: solver did not prove optimality");
        ensure!(
            r.deleted.len() == oracle.len(),
            "instance {seed}: {} vs exhaustive {}",
            r.deleted.len(),
            oracle.len()
        );
        out.add_result(&format!("oracle instance {seed}"), &program, &db, &r);
        out.add(format!("oracle instance {seed} exhaustive"), &program, &db, &oracle);
    }
    let mut rng = StdRng::seed_from_u64(5);
    for i in 0..RANDOM_CNFS {
        let p = random_cnf(&mut rng);
        match (solve_min_ones(&p, None), solve_by_enumeration(&p)) {
            (Ok(a), Ok(b)) => {
                ensure!(a.optimal && p.satisfied_by(&a.assignment), "cnf {i}: bad solution");
                ensure!(
                    a.objective == b.objective,
                    "cnf {i}: {} vs {}",
                    a.objective,
                    b.objective
                );
            }
            (Err(SolverError::Unsatisfiable), Err(SolverError::Unsatisfiable)) => {}
            (a, b) => return Err(format!("cnf {i}: solver {a:?} vs enumeration {b:?}")),
        }
    }
    Ok(format!("{ORACLE_INSTANCES} instances, {RANDOM_CNFS} formulas"))
}

fn vertex_cover(out: &mut Produced) -> Outcome {
    for seed in 0..GRAPHS {
        let n = 4 + (seed % 5) as usize;
        let g = random_connected_graph(n, 0.45, seed);
        let want = min_vertex_cover(&g);
        let (program, db) = encode_vertex_cover(&g, VcVariant::Independent3Rule);
        let ind = repair(&program, &db, Semantics::Independent, &Default::default()).map_err(|e| e.to_string())?;
        ensure!(
            ind.deleted.len() == want,
            "graph {seed}: independent {} vs cover {want}",
            ind.deleted.len()
        );
        out.add_result(&format!("graph {seed}"), &program, &db, &ind);
        let (program, db) = encode_vertex_cover(&g, VcVariant::Step1Rule);
        let step = brute_force_step(&program, &db, DEFAULT_NODE_GUARD).map_err(|e| e.to_string())?;
        ensure!(step.len() == want, "graph {seed}: step {} vs cover {want}", step.len());
        out.add(format!("graph {seed} exhaustive step"), &program, &db, &step);
    }
    Ok(format!("{GRAPHS} graphs on 4 to 8 vertices"))
}

fn permute(program: &DeltaProgram, rng: &mut StdRng) -> DeltaProgram {
    let mut rules = program.rules().to_vec();
    for i in (1..rules.len()).rev() {
        rules.swap(i, rng.gen_range(0..=i));
    }
    DeltaProgram::new(program.schema(), rules).expect("permuted program is valid")
}

fn repair_cli_output(report: &Path) -> Result<String, String> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let out = Command::new(env!("CARGO_BIN_EXE_delta-repair"))
        .arg("repair")
        .arg("--data")
        .arg(fixtures.join("running"))
        .arg("--program")
        .arg(fixtures.join("program.dl"))
        .arg("--report")
        .arg(report)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "cli exited with {:?}", out.status.code());
    let text = fs::read_to_string(report).map_err(|e| e.to_string())?;
    Ok(String::from_utf8_lossy(&out.stdout).into_owned() + &text)
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.push((name, fs::read(&path).map_err(|e| e.to_string())?));
    }
    files.sort();
    Ok(files)
}

fn determinism(_: &mut Produced) -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    for seed in 0..RANDOM_INSTANCES {
        let (program, db) = random_instance(seed);
        let base = run_stage(&program, &db).map_err(|e| e.to_string())?.deleted;
        for k in 0..PERMUTATIONS {
            let permuted = permute(&program, &mut rng);
            let got = run_stage(&permuted, &db).map_err(|e| e.to_string())?.deleted;
            ensure!(got == base, "instance {seed}, permutation {k}: stage result changed");
        }
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = repair_cli_output(&tmp.path().join("a.json"))?;
    let b = repair_cli_output(&tmp.path().join("b.json"))?;
    ensure!(a == b, "repair output differs between runs");
    for template in Template::all() {
        let mut dumps = Vec::new();
        for run in 0..2 {
            let (program, db) = generate_instance(template, 30, 7).map_err(|e| e.to_string())?;
            let dir = tmp.path().join(format!("{template}-{run}"));
            write_dir(&db, &dir).map_err(|e| e.to_string())?;
            dumps.push((program.to_string(), dir_bytes(&dir)?));
        }
        ensure!(
            dumps[0] == dumps[1],
            "{template}: generator output differs for the same seed"
        );
    }
    Ok(format!(
        "{RANDOM_INSTANCES} instances x {PERMUTATIONS} rule orders, cli and generators byte-stable"
    ))
}

fn scale(out: &mut Produced) -> Outcome {
    let (program, db) = generate_instance(Template::Cascade(5), CASCADE_SCALE, 1).map_err(|e| e.to_string())?;
    ensure!(db.loaded_len() >= 10_000, "only {} tuples", db.loaded_len());
    let limits = [
        (Semantics::End, 10),
        (Semantics::Stage, 10),
        (Semantics::Step, 120),
        (Semantics::Independent, 120),
    ];
    let mut summary = Vec::new();
    for (s, secs) in limits {
        let r = repair(&program, &db, s, &Default::default()).map_err(|e| e.to_string())?;
        ensure!(r.wall_time < Duration::from_secs(secs), "{s} took {:?}", r.wall_time);
        if matches!(s, Semantics::Step | Semantics::Independent) {
            let p = r.phases;
            ensure!(
                p.eval >= p.process_provenance + p.solve,
                "{s}: eval {:?} below processing {:?} + solving {:?}",
                p.eval,
                p.process_provenance,
                p.solve
            );
        }
        summary.push(format!("{s} {:.0?}", r.wall_time));
        out.add_result("cascade", &program, &db, &r);
    }
    Ok(format!("{} tuples: {}", db.loaded_len(), summary.join(", ")))
}

fn all_stabilizing(out: &Produced) -> Outcome {
    for (what, program, db, deleted) in &out.results {
        let ok = verify_stabilizing(db, program, deleted).map_err(|e| format!("{what}: {e}"))?;
        ensure!(ok, "{what}: result is not stabilizing");
    }
    Ok(format!("{} results verified", out.results.len()))
}

type Check = fn(&mut Produced) -> Outcome;

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("running example repairs", running_example_sets),
        ("running example provenance", running_example_provenance),
        ("containment on random instances", containment),
        ("separating instances", separations),
        ("independent optimality", independent_optimality),
        ("vertex cover reduction", vertex_cover),
        ("determinism", determinism),
        ("scale and phase breakdown", scale),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut produced = Produced::default();
    let mut failed = 0;
    let mut report = |i: usize, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {i} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL {i} {name}: {detail}");
        }
    };
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut produced)))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        report(i + 1, name, outcome);
    }
    let outcome = catch_unwind(AssertUnwindSafe(|| all_stabilizing(&produced)))
        .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
    report(9, "every result is stabilizing", outcome);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}
