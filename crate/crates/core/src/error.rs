use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition (shapes, indices, ranges).
    Contract(&'static str),
    /// Two sizes that must agree did not.
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A configuration value is outside its admissible range.
    Config(&'static str),
    /// The requested selection would leave no patch to sample.
    DegenerateSelection {
        unsampled: usize,
        patch_count: usize,
    },
    /// A NaN or infinity showed up where finite values are required.
    NonFinite(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(msg) => write!(f, "contract violated: {msg}"),
            Error::Dimension {
                what,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch in {what}: expected {expected}, found {found}"
            ),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DegenerateSelection {
                unsampled,
                patch_count,
            } => write!(
                f,
                "degenerate selection: {unsampled} of {patch_count} patches left unsampled"
            ),
            Error::NonFinite(what) => write!(f, "non-finite value encountered in {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            found,
        })
    }
}
