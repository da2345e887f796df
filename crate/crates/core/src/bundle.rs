//! Bug-bundle corpus layout:
//!
//! ```text
//! corpus/<bug-id>/
//!   program.mini          the buggy program (repair input)
//!   reference.mini        optional known-correct version
//!   tests/whitebox/<id>.in|.out    repair-visible suite
//!   tests/blackbox/<id>.in|.out    held-out suite
//! ```

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::harness::{run_test, TestCase, TestOrigin};
use crate::lang::{parse, ParseError, Program};

#[derive(Debug, Clone)]
pub struct BugBundle {
    pub id: String,
    pub dir: PathBuf,
    pub source_text: String,
    pub program: Program,
    pub reference_text: Option<String>,
    pub reference: Option<Program>,
    pub whitebox: Vec<TestCase>,
    pub blackbox: Vec<TestCase>,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing {0}")]
    MissingFile(PathBuf),
    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("empty test suite {0}")]
    EmptySuite(PathBuf),
    #[error("bundle {id} violates its invariants:\n{}", problems.join("\n"))]
    Invalid { id: String, problems: Vec<String> },
}

fn read(path: &Path) -> Result<String, BundleError> {
    std::fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_suite(dir: &Path, origin: TestOrigin) -> Result<Vec<TestCase>, BundleError> {
    if !dir.is_dir() {
        return Err(BundleError::MissingFile(dir.to_path_buf()));
    }
    let mut stems: Vec<String> = std::fs::read_dir(dir)
        .map_err(|source| BundleError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            if path.extension().is_some_and(|e| e == "in") {
                Some(path.file_stem()?.to_string_lossy().into_owned())
            } else {
                None
            }
        })
        .collect();
    stems.sort();
    let mut tests = Vec::with_capacity(stems.len());
    for stem in stems {
        let in_path = dir.join(format!("{stem}.in"));
        let out_path = dir.join(format!("{stem}.out"));
        if !out_path.is_file() {
            return Err(BundleError::MissingFile(out_path));
        }
        tests.push(TestCase {
            id: stem,
            input: read(&in_path)?,
            expected_output: read(&out_path)?,
            origin,
        });
    }
    if tests.is_empty() {
        return Err(BundleError::EmptySuite(dir.to_path_buf()));
    }
    Ok(tests)
}

/// Loads a bundle directory, parsing the programs and both suites.
pub fn load_bundle(dir: &Path) -> Result<BugBundle, BundleError> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let program_path = dir.join("program.mini");
    if !program_path.is_file() {
        return Err(BundleError::MissingFile(program_path));
    }
    let source_text = read(&program_path)?;
    let program = parse(&source_text).map_err(|source| BundleError::Parse {
        path: program_path.clone(),
        source,
    })?;

    let reference_path = dir.join("reference.mini");
    let (reference_text, reference) = if reference_path.is_file() {
        let text = read(&reference_path)?;
        let parsed = parse(&text).map_err(|source| BundleError::Parse {
            path: reference_path.clone(),
            source,
        })?;
        (Some(text), Some(parsed))
    } else {
        (None, None)
    };

    let whitebox = load_suite(&dir.join("tests").join("whitebox"), TestOrigin::Whitebox)?;
    let blackbox = load_suite(&dir.join("tests").join("blackbox"), TestOrigin::Blackbox)?;

    Ok(BugBundle {
        id,
        dir: dir.to_path_buf(),
        source_text,
        program,
        reference_text,
        reference,
        whitebox,
        blackbox,
    })
}

/// Deep validation: the buggy program fails at least one white-box test and
/// the reference, when present, passes every test in both suites.
pub fn validate_bundle(bundle: &BugBundle, fuel: u64) -> Result<(), BundleError> {
    let mut problems = Vec::new();
    if bundle
        .whitebox
        .iter()
        .all(|t| run_test(&bundle.program, t, fuel))
    {
        problems.push("buggy program fails no white-box test".to_string());
    }
    if let Some(reference) = &bundle.reference {
        for test in bundle.whitebox.iter().chain(&bundle.blackbox) {
            if !run_test(reference, test, fuel) {
                problems.push(format!(
                    "reference fails {} test {}",
                    match test.origin {
                        TestOrigin::Whitebox => "white-box",
                        TestOrigin::Blackbox => "black-box",
                    },
                    test.id
                ));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(BundleError::Invalid {
            id: bundle.id.clone(),
            problems,
        })
    }
}

/// Loads and deep-validates every bundle directory under `corpus_dir`.
pub fn load_corpus(corpus_dir: &Path, fuel: u64) -> Result<Vec<BugBundle>, BundleError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(corpus_dir)
        .map_err(|source| BundleError::Io {
            path: corpus_dir.to_path_buf(),
            source,
        })?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            path.is_dir().then_some(path)
        })
        .collect();
    dirs.sort();
    let mut bundles = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let bundle = load_bundle(&dir)?;
        validate_bundle(&bundle, fuel)?;
        bundles.push(bundle);
    }
    Ok(bundles)
}
