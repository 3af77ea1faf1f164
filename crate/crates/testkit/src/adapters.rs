//! Stub classifier adapters as POSIX shell scripts.
//!
//! Every script answers the line protocol `{"id":n,...}` ->
//! `{"id":n,"decision":..,"rationale":..}`; the variants differ in how they
//! misbehave.

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubAdapter {
    /// decision = id even, rationale = id divisible by 3.
    Echo,
    /// Echo, but exits with status 1 after this many replies.
    CrashAfter(usize),
    /// First reply is not JSON.
    Malformed,
    /// Replies with id + 1.
    WrongId,
    /// Reads one request and never answers.
    Hang,
    /// Echo, then exits with status 3.
    NonZeroExit,
    /// Labels by keyword: decision if the text starts with "Fix", rationale if
    /// it contains "because".
    Keyword,
}

/// The verdict `Echo` gives to request `id`.
pub fn echo_verdict(id: usize) -> (bool, bool) {
    (id.is_multiple_of(2), id.is_multiple_of(3))
}

const PRELUDE: &str = r#"#!/bin/sh
n=0
reply() {
  printf '{"id":%s,"decision":%s,"rationale":%s}\n' "$1" "$2" "$3"
}
echo_reply() {
  if [ $(($1 % 2)) -eq 0 ]; then d=true; else d=false; fi
  if [ $(($1 % 3)) -eq 0 ]; then r=true; else r=false; fi
  reply "$1" "$d" "$r"
}
"#;

const READ_ID: &str = r#"  id=${line#*\"id\":}; id=${id%%,*}
"#;

fn body(kind: StubAdapter) -> String {
    let mut s = String::from(PRELUDE);
    s.push_str("while IFS= read -r line; do\n");
    s.push_str(READ_ID);
    match kind {
        StubAdapter::Echo | StubAdapter::NonZeroExit => s.push_str("  echo_reply \"$id\"\n"),
        StubAdapter::CrashAfter(k) => {
            s.push_str(&format!("  if [ \"$n\" -ge {k} ]; then exit 1; fi\n"));
            s.push_str("  echo_reply \"$id\"\n");
        }
        StubAdapter::Malformed => s.push_str("  echo 'this is not json'\n"),
        StubAdapter::WrongId => s.push_str("  echo_reply $((id + 1))\n"),
        StubAdapter::Hang => s.push_str("  sleep 30\n"),
        StubAdapter::Keyword => s.push_str(
            r#"  case "$line" in *'"text":"Fix'*) d=true;; *) d=false;; esac
  case "$line" in *because*) r=true;; *) r=false;; esac
  reply "$id" "$d" "$r"
"#,
        ),
    }
    s.push_str("  n=$((n + 1))\ndone\n");
    if kind == StubAdapter::NonZeroExit {
        s.push_str("exit 3\n");
    }
    s
}

/// Writes the script into `dir` and returns its path.
pub fn write_stub(dir: &Path, kind: StubAdapter) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let name = format!("{kind:?}").to_lowercase().replace(['(', ')'], "_");
    let path = dir.join(format!("adapter_{name}.sh"));
    std::fs::write(&path, body(kind)).expect("write stub adapter");
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).expect("chmod");
    path
}
