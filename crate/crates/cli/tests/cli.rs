//! End-to-end command tests against the built binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn compsyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compsyn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn verdict_lines(o: &Output) -> String {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with("MANIFEST:"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).unwrap();
}

const SELF_LOOP: &str = "automaton A1\nstates: s0 s1\nalphabet: a b\ninitial: s0\ntrans: s0 a -> s1\ntrans: s1 b -> s0\n";

#[test]
fn check_sim_against_itself_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a1.saut", SELF_LOOP);
    let out = compsyn(dir.path(), &["check-sim", "a1.saut", "a1.saut"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).starts_with("VERDICT: SIMULATED"));
    assert!(dir.path().join("compsyn-run.json").exists());
}

#[test]
fn halting_machine_instance_fails_with_a_stuck_label() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "halt.tm",
        "tm halt\nkind: det\nstates: q0 q1\ntape: x y\ninitial: q0\n\
         trans: q0 x -> q1 y R\ninput: x x x\n",
    );
    let out = compsyn(
        dir.path(),
        &["encode", "halt.tm", "--kind", "pspace", "--out", "inst"],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("ORACLE: NOT-SIMULATED"));
    for f in ["A1.saut", "A2.saut", "A3.saut", "B.saut", "meta"] {
        assert!(dir.path().join("inst").join(f).exists(), "missing {f}");
    }

    let out = compsyn(
        dir.path(),
        &[
            "check-sim",
            "inst/B.saut",
            "inst/A1.saut",
            "inst/A2.saut",
            "inst/A3.saut",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let report = stdout(&out);
    assert!(report.contains("VERDICT: NOT-SIMULATED"));
    assert!(report.contains("STUCK: "));

    // The oracle path agrees.
    let out = compsyn(
        dir.path(),
        &[
            "check-sim",
            "inst/B.saut",
            "inst/A1.saut",
            "inst/A2.saut",
            "inst/A3.saut",
            "--oracle",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn disjoint_fast_rejects_overlapping_alphabets() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a1.saut", SELF_LOOP);
    let a2 = SELF_LOOP.replace("automaton A1", "automaton A2");
    write(dir.path(), "a2.saut", &a2);
    let out = compsyn(
        dir.path(),
        &[
            "check-sim",
            "a1.saut",
            "a1.saut",
            "a2.saut",
            "--disjoint-fast",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("not pairwise disjoint"), "{err}");
}

#[test]
fn check_bisim_verdicts_and_oracle_cap() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "a1.saut",
        "automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\n",
    );
    write(
        dir.path(),
        "a2.saut",
        "automaton A2\nstates: q0 q1\nalphabet: b\ninitial: q0\ntrans: q0 b -> q1\n",
    );
    // The diamond goal is the minimized explicit product.
    write(
        dir.path(),
        "good.saut",
        "automaton B\nstates: s0 s1 s2 s3\nalphabet: a b\ninitial: s0\n\
         trans: s0 a -> s1\ntrans: s0 b -> s2\ntrans: s1 b -> s3\ntrans: s2 a -> s3\n",
    );
    let out = compsyn(
        dir.path(),
        &["check-bisim", "good.saut", "a1.saut", "a2.saut"],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).starts_with("VERDICT: BISIMILAR"));

    // One interleaving only: condition A fails.
    write(
        dir.path(),
        "bad.saut",
        "automaton B\nstates: s0 s1 s2\nalphabet: a b\ninitial: s0\n\
         trans: s0 a -> s1\ntrans: s1 b -> s2\n",
    );
    let out = compsyn(
        dir.path(),
        &["check-bisim", "bad.saut", "a1.saut", "a2.saut"],
    );
    assert_eq!(out.status.code(), Some(1));
    let report = stdout(&out);
    assert!(report.contains("FAILED: condition-A"), "{report}");

    // Oracle run under a tiny state cap errors out.
    let out = compsyn(
        dir.path(),
        &[
            "check-bisim",
            "good.saut",
            "a1.saut",
            "a2.saut",
            "--oracle",
            "--state-cap",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_writes_owner_movers_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "a1.saut",
        "automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\ntrans: p1 a -> p0\n",
    );
    write(
        dir.path(),
        "a2.saut",
        "automaton A2\nstates: q0\nalphabet: b\ninitial: q0\ntrans: q0 b -> q0\n",
    );
    write(
        dir.path(),
        "goal.saut",
        "automaton B\nstates: s0 s1\nalphabet: a b\ninitial: s0\ntrans: s0 a -> s1\ntrans: s1 b -> s0\n",
    );
    let out = compsyn(
        dir.path(),
        &[
            "synth",
            "goal.saut",
            "a1.saut",
            "a2.saut",
            "--out",
            "d.deleg",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = fs::read_to_string(dir.path().join("d.deleg")).unwrap();
    for line in text.lines() {
        // `deleg: <s> <global> <label> -> <mover>`: on disjoint alphabets
        // the mover owns the label.
        let toks: Vec<&str> = line.split_whitespace().collect();
        let owner = if toks[3] == "a" { "1" } else { "2" };
        assert_eq!(toks[5], owner, "{line}");
    }

    // Replay 100 random goal traces through the written file.
    let goal = compsyn_core::automata::ServiceAutomaton::parse(
        &fs::read_to_string(dir.path().join("goal.saut")).unwrap(),
    )
    .unwrap();
    let services = ["a1.saut", "a2.saut"]
        .iter()
        .map(|f| {
            compsyn_core::automata::ServiceAutomaton::parse(
                &fs::read_to_string(dir.path().join(f)).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let product = compsyn_core::product::ProductView::new(services).unwrap();
    let delegator = compsyn_core::delegator::Delegator::parse(&text, &goal, &product).unwrap();
    let mut rng = compsyn_core::gen::rng(99);
    for _ in 0..100 {
        let trace = compsyn_core::gen::random_goal_trace(&mut rng, &goal, 16);
        delegator.replay(&trace).expect("replay never blocks");
    }
}

#[test]
fn synth_unsolvable_exits_one_without_a_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "a1.saut",
        "automaton A1\nstates: p0\nalphabet: a\ninitial: p0\n",
    );
    write(
        dir.path(),
        "goal.saut",
        "automaton B\nstates: s0\nalphabet: a\ninitial: s0\ntrans: s0 a -> s0\n",
    );
    let out = compsyn(
        dir.path(),
        &["synth", "goal.saut", "a1.saut", "--out", "d.deleg"],
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(stdout(&out).contains("VERDICT: UNSOLVABLE"));
    assert!(!dir.path().join("d.deleg").exists());
}

#[test]
fn encode_exptime_emits_two_services_per_cell_and_const_alphabet_shrinks() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "alt.tm",
        "tm ab\nkind: alt\nstates: q0 q1\ntape: x y\nmode: q0 exist q1 univ\ninitial: q0\n\
         trans: q0 x -> q1 x R\ntrans: q0 x -> q1 y R\n\
         trans: q0 y -> q1 x R\ntrans: q0 y -> q1 y R\n\
         trans: q1 x -> q0 x L\ntrans: q1 x -> q0 y L\n\
         trans: q1 y -> q0 x L\ntrans: q1 y -> q0 y L\ninput: x x\n",
    );
    let out = compsyn(
        dir.path(),
        &["encode", "alt.tm", "--kind", "exptime", "--out", "e"],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for f in ["A1p.saut", "A1pp.saut", "A2p.saut", "A2pp.saut", "B.saut"] {
        assert!(dir.path().join("e").join(f).exists(), "missing {f}");
    }
    assert!(stdout(&out).contains("ORACLE: SIMULATED"));

    let out = compsyn(
        dir.path(),
        &[
            "encode",
            "alt.tm",
            "--kind",
            "exptime",
            "--const-alphabet",
            "--out",
            "ec",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let b = fs::read_to_string(dir.path().join("ec").join("B.saut")).unwrap();
    let alphabet_line = b.lines().find(|l| l.starts_with("alphabet:")).unwrap();
    let letters: Vec<&str> = alphabet_line.split_whitespace().skip(1).collect();
    assert_eq!(letters.len(), 4);
    assert!(letters.contains(&"hash") && letters.contains(&"dollar"));

    // Mismatched kind is an error.
    let out = compsyn(
        dir.path(),
        &["encode", "alt.tm", "--kind", "pspace", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corpus_detects_injected_faults() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "bounce.tm",
        "tm bounce\nkind: det\nstates: q0 q1\ntape: x\ninitial: q0\n\
         trans: q0 x -> q1 x R\ntrans: q1 x -> q0 x L\ninput: x x\n",
    );
    write(
        dir.path(),
        "halt.tm",
        "tm halt\nkind: det\nstates: q0 q1\ntape: x y\ninitial: q0\n\
         trans: q0 x -> q1 y R\ninput: x x x\n",
    );
    for (tm, out_dir) in [("bounce.tm", "i1"), ("halt.tm", "i2")] {
        let out = compsyn(
            dir.path(),
            &["encode", tm, "--kind", "pspace", "--out", out_dir],
        );
        assert_eq!(out.status.code(), Some(0));
    }

    // Empty corpus: empty table, success.
    write(dir.path(), "empty.txt", "# nothing here\n");
    let out = compsyn(dir.path(), &["corpus", "empty.txt"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("TOTAL: 0 instances"));

    write(dir.path(), "corpus.txt", "i1\ni2\n");
    let out = compsyn(dir.path(), &["corpus", "corpus.txt"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("TOTAL: 2 instances, 2 agree, 0 disagree"));

    // Flip one goal transition target in the halting instance: its winning
    // probe gets rerouted into absorbed letters, so the checker now answers
    // SIMULATED and disagrees with the recorded oracle. (The bouncer's
    // machine has a total transition function, so its product executes
    // every letter from everywhere and goal mutations stay silent.)
    let b_path = dir.path().join("i2").join("B.saut");
    let b = fs::read_to_string(&b_path).unwrap();
    let line = b
        .lines()
        .find(|l| l.starts_with("trans: s "))
        .expect("the goal has transitions out of s");
    let target = line.split_whitespace().last().unwrap();
    let flipped = line.replace(&format!("-> {target}"), "-> s");
    assert_ne!(line, flipped);
    fs::write(&b_path, b.replace(line, &flipped)).unwrap();

    let out = compsyn(dir.path(), &["corpus", "corpus.txt"]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("1 disagree"));
}

#[test]
fn reports_reproduce_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a1.saut", SELF_LOOP);
    let first = compsyn(dir.path(), &["check-sim", "a1.saut", "a1.saut"]);
    let second = compsyn(dir.path(), &["check-sim", "a1.saut", "a1.saut"]);
    assert_eq!(verdict_lines(&first), verdict_lines(&second));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("compsyn-run.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "check-sim");
    assert_eq!(manifest["verdict"], "SIMULATED");
}

#[test]
fn parse_errors_carry_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "broken.saut",
        "automaton X\nstates: s\nalphabet: a\ninitial: s\ntrans: s a ->\n",
    );
    let out = compsyn(dir.path(), &["check-sim", "broken.saut", "broken.saut"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("broken.saut"), "{err}");
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn disjoint_fast_verdicts_match_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "a1.saut",
        "automaton A1\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\ntrans: p1 a -> p0\n",
    );
    write(
        dir.path(),
        "a2.saut",
        "automaton A2\nstates: q0\nalphabet: b\ninitial: q0\ntrans: q0 b -> q0\n",
    );
    write(
        dir.path(),
        "good.saut",
        "automaton B\nstates: s0 s1\nalphabet: a b\ninitial: s0\ntrans: s0 a -> s1\ntrans: s1 b -> s0\n",
    );
    let out = compsyn(
        dir.path(),
        &["check-sim", "good.saut", "a1.saut", "a2.saut", "--disjoint-fast"],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    // A goal demanding two `a`s outruns a one-shot `a` service.
    write(
        dir.path(),
        "a3.saut",
        "automaton A3\nstates: p0 p1\nalphabet: a\ninitial: p0\ntrans: p0 a -> p1\n",
    );
    write(
        dir.path(),
        "bad.saut",
        "automaton B\nstates: s0 s1 s2\nalphabet: a\ninitial: s0\n\
         trans: s0 a -> s1\ntrans: s1 a -> s2\n",
    );
    let out = compsyn(
        dir.path(),
        &["check-sim", "bad.saut", "a3.saut", "a2.saut", "--disjoint-fast"],
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(stdout(&out).contains("VERDICT: NOT-SIMULATED"));
}
