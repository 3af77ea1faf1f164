use std::time::{Duration, Instant};

use comrat_core::classify::{AdapterClassifier, ClassifyError, LabelVerdict};
use comrat_core::{SentenceClassifier, SentenceUnit};
use comrat_testkit::adapters::{echo_verdict, write_stub, StubAdapter};

fn units(n: usize) -> Vec<SentenceUnit> {
    (0..n)
        .map(|i| SentenceUnit {
            text: format!("Sentence \"{i}\", with quotes and a \\ backslash"),
            index: i,
            total: n,
        })
        .collect()
}

fn adapter(kind: StubAdapter, dir: &std::path::Path) -> AdapterClassifier {
    let path = write_stub(dir, kind);
    AdapterClassifier::new(path.to_str().unwrap()).unwrap()
}

fn echo(n: usize) -> Vec<LabelVerdict> {
    (0..n)
        .map(|i| {
            let (decision, rationale) = echo_verdict(i);
            LabelVerdict { decision, rationale }
        })
        .collect()
}

#[test]
fn echo_adapter_round_trips_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = adapter(StubAdapter::Echo, dir.path());
    assert_eq!(a.kind(), "external-adapter");
    for n in [1, 7, 300] {
        assert_eq!(a.classify_units(&units(n)).unwrap(), echo(n));
    }
}

#[test]
fn empty_batch_does_not_spawn() {
    let a = AdapterClassifier::new("/nonexistent/adapter").unwrap();
    assert!(a.classify_units(&[]).unwrap().is_empty());
}

#[test]
fn crash_keeps_partial_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let a = adapter(StubAdapter::CrashAfter(3), dir.path());
    match a.classify_units(&units(10)) {
        Err(ClassifyError::AdapterCrashed { status, partial }) => {
            assert_eq!(partial, echo(3));
            assert_eq!(status, Some(1));
        }
        other => panic!("expected AdapterCrashed, got {other:?}"),
    }
}

#[test]
fn non_zero_exit_after_all_replies_is_a_crash() {
    let dir = tempfile::tempdir().unwrap();
    let a = adapter(StubAdapter::NonZeroExit, dir.path());
    match a.classify_units(&units(4)) {
        Err(ClassifyError::AdapterCrashed { status, partial }) => {
            assert_eq!(status, Some(3));
            assert_eq!(partial, echo(4));
        }
        other => panic!("expected AdapterCrashed, got {other:?}"),
    }
}

#[test]
fn malformed_and_mismatched_replies_are_protocol_errors() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [StubAdapter::Malformed, StubAdapter::WrongId] {
        let err = adapter(kind, dir.path()).classify_units(&units(3)).unwrap_err();
        assert!(matches!(err, ClassifyError::AdapterProtocol { .. }), "{kind:?}: {err:?}");
        assert!(err.partial().is_empty());
    }
}

#[test]
fn silent_adapter_times_out_and_is_killed() {
    let dir = tempfile::tempdir().unwrap();
    let a = adapter(StubAdapter::Hang, dir.path()).with_timeout(Duration::from_millis(300));
    let started = Instant::now();
    let err = a.classify_units(&units(2)).unwrap_err();
    assert!(matches!(err, ClassifyError::Timeout { index: 0, .. }), "{err:?}");
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_program_is_unavailable() {
    let a = AdapterClassifier::new("/nonexistent/adapter --flag").unwrap();
    assert!(matches!(a.preflight(), Err(ClassifyError::AdapterUnavailable { .. })));
    assert!(matches!(
        a.classify_units(&units(1)),
        Err(ClassifyError::AdapterUnavailable { .. })
    ));
}

#[test]
fn preflight_accepts_path_lookup_and_files() {
    assert!(AdapterClassifier::new("sh -c true").unwrap().preflight().is_ok());
    let dir = tempfile::tempdir().unwrap();
    assert!(adapter(StubAdapter::Echo, dir.path()).preflight().is_ok());
}

#[test]
fn keyword_adapter_sees_sentence_text() {
    let dir = tempfile::tempdir().unwrap();
    let a = adapter(StubAdapter::Keyword, dir.path());
    let us: Vec<SentenceUnit> = ["Fix the leak.", "It leaks because of X.", "See above."]
        .iter()
        .enumerate()
        .map(|(i, t)| SentenceUnit { text: t.to_string(), index: i, total: 3 })
        .collect();
    let v = a.classify_units(&us).unwrap();
    assert_eq!(
        v.iter().map(|v| (v.decision, v.rationale)).collect::<Vec<_>>(),
        [(true, false), (false, true), (false, false)]
    );
}
