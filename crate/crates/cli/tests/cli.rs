use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blockgraver::instances::{random_corpus, CorpusParams};
use blockgraver_cli::format::{parse_instance, write_instance, write_matrix_doc, write_vectors};
use blockgraver::SmallMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blockgraver"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(doc: &'a str, key: &str) -> Option<&'a str> {
    doc.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn graver_of_a_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "m.txt",
        &write_matrix_doc(&SmallMatrix::from_rows(&[[1, -1]]).unwrap()),
    );
    let o = run(&["graver", &m]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(field(&s, "count"), Some("2"));
    assert_eq!(field(&s, "max_norm"), Some("1"));
    assert!(s.contains("check kernel ok"));
}

#[test]
fn graver_engines_write_identical_elements() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen", "lower3", "--n", "3"]);
    let inst = write(dir.path(), "i.txt", &stdout(&out));
    let a = stdout(&run(&["graver", &inst, "--kind", "h0", "--method", "complete"]));
    let b = stdout(&run(&["graver", &inst, "--kind", "h0", "--method", "enum", "--radius", "3"]));
    let elems = |s: &str| s.lines().filter(|l| l.starts_with("g ")).map(String::from).collect::<Vec<_>>();
    assert_eq!(elems(&a), elems(&b));
    assert!(field(&a, "max_norm").unwrap().parse::<i64>().unwrap() >= 3);
    let corpus = random_corpus(3, &CorpusParams { n: (1, 2), t_a: (1, 2), t_b: (1, 1), s_a: (1, 1), s_c: (1, 1), ..CorpusParams::default() }, 4);
    for (k, i) in corpus.iter().enumerate() {
        let p = write(dir.path(), &format!("c{k}.txt"), &write_instance(i));
        let a = stdout(&run(&["graver", &p, "--method", "complete"]));
        let b = stdout(&run(&["graver", &p, "--method", "enum"]));
        assert_eq!(elems(&a), elems(&b));
    }
}

#[test]
fn solve_matches_brute_on_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let params = CorpusParams {
        n: (1, 3),
        bound: 2,
        ..CorpusParams::default()
    };
    for (k, inst) in random_corpus(11, &params, 6).iter().enumerate() {
        let p = write(dir.path(), &format!("i{k}.txt"), &write_instance(inst));
        let s = run(&["solve", &p]);
        let b = run(&["brute", &p, "--radius", "2"]);
        assert!(s.status.success() && b.status.success());
        let (s, b) = (stdout(&s), stdout(&b));
        assert_eq!(field(&s, "objective"), field(&b, "objective"));
        let status = field(&s, "status").unwrap();
        assert_eq!(status, field(&b, "status").unwrap());
        if status == "infeasible" {
            assert!(field(&s, "phase_one_objective").unwrap().parse::<i64>().unwrap() > 0);
        }
        assert!(!s.contains("FAILED"));
    }
}

#[test]
fn planted_zero_objective_is_optimal() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = random_corpus(5, &CorpusParams::default(), 1).remove(0);
    inst.w.iter_mut().for_each(|w| *w = 0);
    let p = write(dir.path(), "i.txt", &write_instance(&inst));
    let s = stdout(&run(&["solve", &p]));
    assert_eq!(field(&s, "status"), Some("optimal"));
    assert_eq!(field(&s, "objective"), Some("0"));
}

#[test]
fn scaling_tables() {
    let s = stdout(&run(&["scaling", "--family", "four-block", "--t", "2", "--n-list", "2,3,4,5,6"]));
    let norms: Vec<&str> = s.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(norms, ["2", "3", "4", "5", "6"]);
    let s = stdout(&run(&["scaling", "--family", "three-block", "--n-list", "2,3,4,5,6", "--threads", "2"]));
    let norms: Vec<&str> = s.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(norms, ["2", "3", "4", "5", "6"]);
    let s = stdout(&run(&["scaling", "--family", "four-block", "--t", "3", "--n-list", "2,3,4"]));
    assert_eq!(
        s,
        "family,t,n,norm,method\nfour_block,3,2,4,divisibility\nfour_block,3,3,9,divisibility\nfour_block,3,4,16,divisibility\n"
    );
}

#[test]
fn wrappers_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.txt", &stdout(&run(&["gen", "lower3", "--n", "3"])));
    let d = run(&["decompose", &inst, "--vector", "2,4,6,-2,0,-2,0", "--xi", "2"]);
    assert!(d.status.success());
    assert!(stdout(&d).contains("check sum_kernel_conformal ok"));
    let v = write(dir.path(), "v.txt", &write_vectors(&[vec![1, -1], vec![-1, 1], vec![2, 0], vec![0, -2]]));
    let s = run(&["steinitz", &v]);
    assert!(s.status.success() && stdout(&s).contains("check bound ok"));
    let m = run(&["merge", &v]);
    assert!(m.status.success() && stdout(&m).contains("check conformal ok"));
    let one = write(dir.path(), "one.txt", &write_vectors(&[vec![3], vec![-1], vec![2], vec![-2]]));
    assert!(stdout(&run(&["merge", &one])).contains("check size ok"));

    let bad = write(dir.path(), "bad.txt", "# blockgraver instance v1\nn x\n");
    let o = run(&["solve", &bad]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2, column 3"));
    // Not a kernel vector of H₀.
    let o = run(&["decompose", &inst, "--vector", "1,0,0,0,0,0,0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["graver", &inst, "--element-budget", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corpus_generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["gen", "corpus", "--seed", "9", "--count", "3", "--dir", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    for k in 0..3 {
        let name = format!("corpus-{k:03}.txt");
        let x = fs::read_to_string(a.path().join(&name)).unwrap();
        assert_eq!(x, fs::read_to_string(b.path().join(&name)).unwrap());
        assert_eq!(write_instance(&parse_instance(&x).unwrap()), x);
    }
}
