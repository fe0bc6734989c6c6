#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const TINY_CORPUS: &str = "{\"_id\":\"d1\",\"text\":\"a b\"}\n{\"_id\":\"d2\",\"text\":\"a c\"}\n{\"_id\":\"d3\",\"text\":\"b c\"}\n";

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

pub fn hyret<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_hyret")).args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// The five-document ranking whose metrics at 5 are worked out by hand.
pub const WORKED_RUN: &str = "q1 Q0 d9 1 5 sys\nq1 Q0 d1 2 4 sys\nq1 Q0 d7 3 3 sys\nq1 Q0 d2 4 2 sys\nq1 Q0 d8 5 1 sys\n";
pub const WORKED_QRELS: &str = "query-id\tcorpus-id\tscore\nq1\td1\t1\nq1\td2\t1\nq1\td3\t1\n";
