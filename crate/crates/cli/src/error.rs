use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use gapfill::demo::DemoError;
use gapfill::extractor::ExtractError;
use gapfill::glosser::GlossError;
use gapfill::lattice::LatticeError;
use gapfill::ngram::NGramError;
use gapfill::postedit::PosteditError;
use gapfill::prefsem::{InterlinguaError, OntologyError};
use gapfill::skipparse::{GrammarError, SkipError};
use gapfill::translit::TranslitError;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    Format(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Format(_) => 4,
            CliError::Domain(_) => 5,
        })
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> CliError {
        CliError::Io { path: path.into(), source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Format(m) => write!(f, "format error: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
        }
    }
}

fn format(e: impl fmt::Display) -> CliError {
    CliError::Format(e.to_string())
}

fn domain(e: impl fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

impl From<GlossError> for CliError {
    fn from(e: GlossError) -> CliError {
        match e {
            GlossError::Lattice(e) => e.into(),
            GlossError::MorphWithoutWord(_) => domain(e),
            _ => format(e),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> CliError {
        match e {
            LatticeError::Format { .. } | LatticeError::DuplicateState(_) | LatticeError::UnknownState(_) => format(e),
            _ => domain(e),
        }
    }
}

impl From<NGramError> for CliError {
    fn from(e: NGramError) -> CliError {
        match e {
            NGramError::Version(_) | NGramError::Truncated | NGramError::Format { .. } => format(e),
            NGramError::Io(source) => CliError::Io { path: PathBuf::from("<model>"), source },
            _ => domain(e),
        }
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> CliError {
        match e {
            ExtractError::Lattice(e) => e.into(),
            _ => domain(e),
        }
    }
}

impl From<OntologyError> for CliError {
    fn from(e: OntologyError) -> CliError {
        format(e)
    }
}

impl From<InterlinguaError> for CliError {
    fn from(e: InterlinguaError) -> CliError {
        format(e)
    }
}

impl From<TranslitError> for CliError {
    fn from(e: TranslitError) -> CliError {
        match e {
            TranslitError::Format { .. } => format(e),
            TranslitError::Extract(e) => e.into(),
            TranslitError::Model(e) => e.into(),
            _ => domain(e),
        }
    }
}

impl From<GrammarError> for CliError {
    fn from(e: GrammarError) -> CliError {
        format(e)
    }
}

impl From<SkipError> for CliError {
    fn from(e: SkipError) -> CliError {
        domain(e)
    }
}

impl From<PosteditError> for CliError {
    fn from(e: PosteditError) -> CliError {
        match e {
            PosteditError::Format { .. } => format(e),
            _ => domain(e),
        }
    }
}

impl From<DemoError> for CliError {
    fn from(e: DemoError) -> CliError {
        match e {
            DemoError::Unknown(_) => CliError::Usage(e.to_string()),
            DemoError::Gloss(e) => e.into(),
            DemoError::Lattice(e) => e.into(),
            DemoError::Model(e) => e.into(),
            DemoError::Extract(e) => e.into(),
            DemoError::Translit(e) => e.into(),
        }
    }
}
