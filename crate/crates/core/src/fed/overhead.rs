use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the learned receivers are trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Users upload their pilots; the base station trains one network.
    Cl,
    /// Federated averaging of locally trained parameters.
    FedRec,
    /// Every user trains alone.
    Nl,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Cl, Scheme::FedRec, Scheme::Nl];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Cl => "CL",
            Scheme::FedRec => "FedRec",
            Scheme::Nl => "NL",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cl" => Ok(Scheme::Cl),
            "fedrec" => Ok(Scheme::FedRec),
            "nl" => Ok(Scheme::Nl),
            _ => Err(Error::input(format!("unknown training scheme `{s}` (CL, FedRec, NL)"))),
        }
    }
}

/// Words exchanged during training, counted as float32 values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadReport {
    pub scheme: Scheme,
    pub ul_words: u64,
    pub dl_words: u64,
}

/// Uplink and downlink cost of training.
///
/// * CL: every pilot is uploaded as two real words, one model is sent back.
/// * FedRec: every user uploads a parameter update per round, one broadcast
///   per round serves all users.
/// * NL: nothing is exchanged.
pub fn comm_overhead(scheme: Scheme, users: usize, n_params: usize, rounds: usize, train_size: usize) -> OverheadReport {
    let (u, p, r, d) = (users as u64, n_params as u64, rounds as u64, train_size as u64);
    let (ul_words, dl_words) = match scheme {
        Scheme::Cl => (2 * d, p),
        Scheme::FedRec => (r * u * p, r * p),
        Scheme::Nl => (0, 0),
    };
    OverheadReport {
        scheme,
        ul_words,
        dl_words,
    }
}
