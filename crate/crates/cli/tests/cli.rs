use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn modalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modalign"))
        .args(args)
        .env_remove("LLM_API_KEY")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn replay_args<'a>(model: &'a str, spec: &'a str, cassette: &'a str) -> Vec<&'a str> {
    vec!["analyze", "--model", model, "--spec", spec, "--backend", cassette]
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(modalign(&["--help"]).status.code(), Some(0));
    assert_eq!(modalign(&[]).status.code(), Some(1));
    let model = fixture("car_service.json");
    let out = modalign(&["analyze", "--model", path(&model)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--spec"));
}

#[test]
fn input_errors_exit_2() {
    let spec = fixture("car_service.txt");
    let out = modalign(&["analyze", "--model", "/nonexistent/model.json", "--spec", path(&spec), "--backend", "mock"]);
    assert_eq!(out.status.code(), Some(2));
    let model = fixture("car_service.json");
    let out = modalign(&["match", "--model", path(&model), "--spec", path(&spec), "--tau", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name":"x","classes":[{"name":"A"},{"name":"A"}]}"#).unwrap();
    let out = modalign(&["slice", "--model", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("A"));
}

#[test]
fn backend_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"model":"fixture-mock","entries":{}}"#).unwrap();
    let (model, spec) = (fixture("car_service.json"), fixture("car_service.txt"));
    let replay = format!("replay:{}", path(&empty));
    let out = modalign(&replay_args(path(&model), path(&spec), &replay));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no entry"));

    let out = modalign(&["analyze", "--model", path(&model), "--spec", path(&spec), "--backend", "live"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("LLM_API_KEY"));
}

#[test]
fn replay_matches_the_scripted_mock() {
    let (model, spec) = (fixture("car_service.json"), fixture("car_service.txt"));
    let mock = format!("mock:{}", path(&fixture("car_service.mock.json")));
    let replay = format!("replay:{}", path(&fixture("car_service.cassette.json")));
    let live_like = stdout(&modalign(&replay_args(path(&model), path(&spec), &mock)));
    let replayed = modalign(&replay_args(path(&model), path(&spec), &replay));
    assert!(replayed.status.success());
    assert_eq!(stdout(&replayed), live_like);
    let lines: Vec<&str> = live_like.lines().collect();
    assert_eq!(lines.len(), 14);
    assert!(lines.contains(&"attr:Car.plate\tALIGNED\tEQUIVALENT\t{s2}\t19"));
    assert!(lines.contains(&"comp:Car◇Part\tMISALIGNED\tCONTRADICTED\t{s4}\t19"));
    assert!(lines.contains(&"attr:Service.date\tALIGNED\tINCLUDED\t{s3,s5}\t38"));
}

#[test]
fn sequential_mode_sends_fewer_prompts_for_the_same_verdicts() {
    let (model, spec) = (fixture("car_service.json"), fixture("car_service.txt"));
    let replay = format!("replay:{}", path(&fixture("car_service.cassette.json")));
    let dir = tempfile::tempdir().unwrap();
    let (p, s) = (dir.path().join("p.csv"), dir.path().join("s.csv"));
    let mut args = replay_args(path(&model), path(&spec), &replay);
    args.extend(["--out", path(&p)]);
    assert!(modalign(&args).status.success());
    args.truncate(7);
    args.extend(["--mode", "sequential", "--out", path(&s)]);
    assert!(modalign(&args).status.success());
    let cols = |f: &Path, i: usize| -> Vec<String> {
        std::fs::read_to_string(f)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(i).unwrap().to_string())
            .collect()
    };
    assert_eq!(cols(&p, 2), cols(&s, 2));
    let sum = |f: &Path| cols(f, 5).iter().map(|q| q.parse::<usize>().unwrap()).sum::<usize>();
    assert!(sum(&s) < sum(&p));
}

#[test]
fn record_then_replay_round_trip() {
    let (model, spec) = (fixture("car_service.json"), fixture("car_service.txt"));
    let dir = tempfile::tempdir().unwrap();
    let cassette = dir.path().join("c.json");
    let mock = format!("mock:{}", path(&fixture("car_service.mock.json")));
    let mut args = replay_args(path(&model), path(&spec), &mock);
    args.extend(["--record", path(&cassette)]);
    let recorded = modalign(&args);
    assert!(recorded.status.success());
    assert_eq!(
        std::fs::read_to_string(&cassette).unwrap(),
        std::fs::read_to_string(fixture("car_service.cassette.json")).unwrap()
    );
    let replay = format!("replay:{}", path(&cassette));
    assert_eq!(stdout(&modalign(&replay_args(path(&model), path(&spec), &replay))), stdout(&recorded));
}

#[test]
fn mutate_is_seeded_and_feeds_eval() {
    let model = fixture("car_service.json");
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let (m, t) = (dir.path().join(format!("{tag}.json")), dir.path().join(format!("{tag}.csv")));
        let out = modalign(&["mutate", "--model", path(&model), "--seed", "7", "--out", path(&m), "--truth", path(&t)]);
        assert!(out.status.success());
        (std::fs::read_to_string(&m).unwrap(), std::fs::read_to_string(&t).unwrap(), stdout(&out))
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert!(a.1.starts_with("element,label\n"));
    assert!(a.1.contains("MISALIGNED"));
    assert_eq!(a.2.lines().count(), 3);

    let mutated = dir.path().join("a.json");
    let report = dir.path().join("r.json");
    let mock = format!("mock:{}", path(&fixture("car_service.mock.json")));
    let spec = fixture("car_service.txt");
    let mut args = replay_args(path(&mutated), path(&spec), &mock);
    args.extend(["--out", path(&report)]);
    assert!(modalign(&args).status.success());
    let truth = dir.path().join("a.csv");
    let out = modalign(&["eval", "--report", path(&report), "--truth", path(&truth)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("row,A,PA,CPA,M,PM,CPM,Prec_a,Prec_m,Prec,Rec_a,Rec_m,Rec,F1_a,F1_m,F1\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn eval_report_against_truth() {
    let dir = tempfile::tempdir().unwrap();
    let (report, truth) = (dir.path().join("r.csv"), dir.path().join("t.csv"));
    let mut r = String::from("element,kind,verdict,basis,evidence,queries,matched,sentence\n");
    let mut t = String::from("element,label\n");
    for i in 0..32 {
        let (verdict, basis, ev) = if i < 24 { ("ALIGNED", "EQUIVALENT", "1") } else { ("UNCLASSIFIED", "NONE", "") };
        r.push_str(&format!("attr:C.a{i},ATTRIBUTE,{verdict},{basis},{ev},3,1,A c has an a{i}.\n"));
        t.push_str(&format!("attr:C.a{i},ALIGNED\n"));
    }
    std::fs::write(&report, r).unwrap();
    std::fs::write(&truth, t).unwrap();
    let out = modalign(&["eval", "--report", path(&report), "--truth", path(&truth)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).ends_with(",32,24,24,0,0,0,1.00,-,1.00,0.75,-,0.75,0.86,-,0.86\n"), "{}", stdout(&out));
}

#[test]
fn eval_from_counts() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    std::fs::write(&counts, "row,A,PA,CPA,M,PM,CPM\nR1,32,24,24,0,0,0\nR2,10,8,8,2,2,1\n").unwrap();
    let out = modalign(&["eval", "--counts", path(&counts)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("R1,32,24,24,0,0,0,1.00,-,1.00,0.75,-,0.75,0.86,-,0.86\n"), "{text}");
    assert!(text.contains("\nAvg,") && text.contains("\nStd,") && text.contains("\nSum,"));
}

#[test]
fn inspection_subcommands() {
    let (model, spec) = (fixture("car_service.json"), fixture("car_service.txt"));
    let sentences = stdout(&modalign(&["sentences", "--model", path(&model)]));
    assert!(sentences.contains("end:Service--Garage#provides\tA garage provides services.\n"));
    let matches = stdout(&modalign(&["match", "--model", path(&model), "--spec", path(&spec)]));
    assert!(matches.contains("attr:Car.plate → {s2}"), "{matches}");
    let pre = stdout(&modalign(&["preprocess", "--spec", path(&spec), "--dump-extraction"]));
    assert!(pre.contains("(offers, garage, service, {s1})"));
    let slices = stdout(&modalign(&["slice", "--model", path(&model)]));
    assert_eq!(slices.lines().count(), 14);
}

#[test]
fn timings_go_to_stderr_only() {
    let (model, spec) = (fixture("car_service.json"), fixture("car_service.txt"));
    let replay = format!("replay:{}", path(&fixture("car_service.cassette.json")));
    let mut args = vec!["--timings"];
    args.extend(replay_args(path(&model), path(&spec), &replay));
    let out = modalign(&args);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("E detect"));
    assert!(!stdout(&out).contains("ms"));
}
