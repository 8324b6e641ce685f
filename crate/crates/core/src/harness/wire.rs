//! Request and response bodies of the model services, and the endpoint
//! abstraction the harness calls them through.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ingest::Sentiment;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrcRequest {
    pub paragraph: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrcResponse {
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaRequest {
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaProbs {
    pub positive: f64,
    pub negative: f64,
}

impl SaProbs {
    pub fn get(&self, label: Sentiment) -> f64 {
        match label {
            Sentiment::Positive => self.positive,
            Sentiment::Negative => self.negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaResponse {
    pub label: Sentiment,
    pub probs: SaProbs,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsmRequest {
    pub text_a: String,
    pub text_b: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsmResponse {
    pub duplicate: u8,
}

/// A response body that can check its own invariants.
pub trait WireResponse: DeserializeOwned + Serialize + Clone + Send {
    fn validate(&self) -> Result<(), String> {
        Ok(())
    }
}

impl WireResponse for MrcResponse {}

impl WireResponse for SaResponse {
    fn validate(&self) -> Result<(), String> {
        let SaProbs { positive, negative } = self.probs;
        if !(0.0..=1.0).contains(&positive) || !(0.0..=1.0).contains(&negative) {
            return Err(format!("probabilities out of range: {positive}, {negative}"));
        }
        if (positive + negative - 1.0).abs() > 1e-6 {
            return Err(format!("probabilities sum to {}", positive + negative));
        }
        let argmax = if positive >= negative {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        };
        if positive != negative && argmax != self.label {
            return Err(format!("label {:?} is not the most probable", self.label));
        }
        Ok(())
    }
}

impl WireResponse for SsmResponse {
    fn validate(&self) -> Result<(), String> {
        match self.duplicate {
            0 | 1 => Ok(()),
            d => Err(format!("duplicate must be 0 or 1, got {d}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    /// Connection failures and timeouts; worth retrying.
    #[error("transport error: {0}")]
    Transport(String),
    /// The service answered with something outside the protocol.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
}

/// A model under test. Closures `Fn(&Req) -> Result<Resp, ModelError>`
/// implement it, which is how scripted stubs are written.
pub trait Endpoint<Req, Resp>: Sync {
    fn call(&self, request: &Req) -> Result<Resp, ModelError>;

    /// Checked once before a suite starts.
    fn probe(&self) -> Result<(), ModelError> {
        Ok(())
    }
}

impl<Req, Resp, F> Endpoint<Req, Resp> for F
where
    F: Fn(&Req) -> Result<Resp, ModelError> + Sync,
{
    fn call(&self, request: &Req) -> Result<Resp, ModelError> {
        self(request)
    }
}

impl fmt::Display for SaProbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pos={:.3} neg={:.3}", self.positive, self.negative)
    }
}
