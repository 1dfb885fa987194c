use std::path::Path;
use std::process::{Command, Output};

fn dualtable(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualtable"))
        .current_dir(dir)
        .arg("--set")
        .arg("data_dir=db")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn script_prints_inserted_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.sql"),
        "CREATE TABLE t (id INT64, name UTF8, ok BOOL);\nINSERT INTO t VALUES (1, 'a', TRUE), (2, 'b', NULL);\nSELECT * FROM t;\n",
    )
    .unwrap();
    let o = dualtable(dir.path(), &["run", "s.sql"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "id,name,ok\n1,a,true\n2,b,\n");
}

#[test]
fn syntax_error_reports_line_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.sql"),
        "CREATE TABLE t (a INT64);\nINSERT INTO t VALUES (1);\nUPDATE t SET WHERE a = 1;\n",
    )
    .unwrap();
    let o = dualtable(dir.path(), &["run", "s.sql"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("3:"), "{}", stderr(&o));
}

#[test]
fn load_update_select() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("meter,day,reading\n");
    for i in 0..50 {
        csv.push_str(&format!("{i},{},{}\n", i % 5, i * 10));
    }
    std::fs::write(dir.path().join("readings.csv"), csv).unwrap();
    std::fs::write(
        dir.path().join("s.sql"),
        "CREATE TABLE r (meter INT64, day INT64, reading INT64);\n\
         LOAD r FROM 'readings.csv';\n\
         UPDATE r SET reading = reading + 1 WHERE day = 3 WITH RATIO = 0.2;\n\
         SELECT meter, reading FROM r WHERE meter < 10;\n",
    )
    .unwrap();
    let o = dualtable(dir.path(), &["--set", "R_M=2e9", "run", "s.sql"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut want = String::from("meter,reading\n");
    for i in 0..10 {
        want.push_str(&format!("{i},{}\n", i * 10 + i64::from(i % 5 == 3)));
    }
    assert_eq!(stdout(&o), want);
    let audit = std::fs::read_to_string(dir.path().join("db/audit.log")).unwrap();
    let fields: Vec<&str> = audit.trim().split(", ").collect();
    assert_eq!(fields.len(), 6, "{audit}");
    assert_eq!(&fields[1..4], ["r", "update", "0.2"]);
}

#[test]
fn compact_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.sql"),
        "CREATE TABLE t (a INT64);\nINSERT INTO t VALUES (1), (2);\nDELETE FROM t WHERE a = 1 WITH PLAN = EDIT;\n",
    )
    .unwrap();
    assert!(dualtable(dir.path(), &["run", "s.sql"]).status.success());
    let o = dualtable(dir.path(), &["compact", "t"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = dualtable(dir.path(), &["compact", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn corrupt_segment_is_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.sql"), "CREATE TABLE t (a INT64);\nINSERT INTO t VALUES (1), (2);\n").unwrap();
    assert!(dualtable(dir.path(), &["run", "s.sql"]).status.success());
    let seg = std::fs::read_dir(dir.path().join("db"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "dtb"))
        .unwrap();
    let mut bytes = std::fs::read(&seg).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&seg, bytes).unwrap();
    std::fs::write(dir.path().join("q.sql"), "SELECT * FROM t;\n").unwrap();
    let o = dualtable(dir.path(), &["run", "q.sql"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bench_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rates.conf"), "R_M = 2e9\nW_A = 8e8\n").unwrap();
    let args = [
        "bench", "--op", "delete", "--rows", "500", "--cols", "3", "--grid", "0.1,0.9", "--k", "1", "--params",
        "rates.conf", "--work-dir", "scratch",
    ];
    let a = dualtable(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let out = stdout(&a);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "ratio,series,plan,model_cost_s,oracle_cost_s,master_read,master_written,attached_read,attached_written,wall_s"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[3].starts_with("0.1,model,EDIT,"), "{out}");
    assert!(lines[6].starts_with("0.9,model,OVERWRITE,"), "{out}");
    let b = dualtable(dir.path(), &args);
    let strip = |s: &str| s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_owned()).collect::<Vec<_>>();
    assert_eq!(strip(&out), strip(&stdout(&b)));

    let o = dualtable(dir.path(), &["bench", "--op", "update", "--grid", "0.1"]);
    assert_eq!(o.status.code(), Some(1), "missing R_M is a user error");
}

#[test]
fn unknown_config_key_is_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dualtable(dir.path(), &["--set", "W_X=1", "compact", "t"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("W_X"));
}
