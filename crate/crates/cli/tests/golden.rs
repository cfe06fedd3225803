//! The deterministic pipeline reproduces the committed outputs byte for byte.
//! Set `SHAPEKIT_BLESS=1` to rewrite the goldens after an intended change.

mod common;

#[test]
fn pipeline_matches_goldens() {
    let dir = tempfile::tempdir().unwrap();
    common::golden_pipeline(dir.path()).unwrap();
    if std::env::var_os("SHAPEKIT_BLESS").is_some() {
        common::bless(dir.path());
    }
    let bad = common::golden_mismatches(dir.path());
    assert!(bad.is_empty(), "differs from golden: {bad:?}");
}

#[test]
fn pipeline_is_idempotent() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    common::golden_pipeline(a.path()).unwrap();
    common::golden_pipeline(b.path()).unwrap();
    for f in common::GOLDEN_FILES {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
