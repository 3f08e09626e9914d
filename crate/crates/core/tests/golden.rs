//! Encoder outputs for the fixtures are compared byte for byte with
//! `tests/golden`. Run with `UPDATE_GOLDEN=1` to rewrite them after an
//! intended encoder change.

mod common;

use common::*;

#[test]
fn encoder_outputs_match_golden_files() {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let dir = golden_dir();
        std::fs::create_dir_all(&dir).unwrap();
        for name in GOLDEN_FIXTURES {
            for (file, text) in golden_artifacts(name) {
                std::fs::write(dir.join(file), text).unwrap();
            }
        }
    }
    let bad = golden_mismatches();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn counting_fixture_variable_counts() {
    let artifacts = golden_artifacts("counting");
    let smt = &artifacts[0].1;
    let ints = smt
        .lines()
        .filter(|l| l.starts_with("(declare-fun") && l.ends_with("() Int)"))
        .count();
    assert_eq!(ints, 6);

    let lp = &artifacts[1].1;
    let binaries = lp
        .lines()
        .skip_while(|l| *l != "Binaries")
        .skip(1)
        .take_while(|l| l.starts_with(' '))
        .count();
    assert_eq!(binaries, 6);
}

#[test]
fn golden_files_end_with_newline() {
    for name in GOLDEN_FIXTURES {
        for (file, text) in golden_artifacts(name) {
            assert!(text.ends_with('\n'), "{file}");
        }
    }
}
