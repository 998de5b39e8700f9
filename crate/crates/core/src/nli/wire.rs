//! Line-delimited JSON messages exchanged with scoring backends.
//!
//! ```text
//! backend -> {"protocol": 1, "concurrent": false}
//! gateway -> {"id": "0", "premise": "...", "hypothesis": "..."}
//! backend -> {"id": "0", "entailment": 0.7, "neutral": 0.2, "contradiction": 0.1}
//! ```
//!
//! The HTTP variant posts a JSON array of requests to `/score` and expects
//! an array of responses back.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::GatewayError;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: u32,
    pub concurrent: bool,
}

impl Handshake {
    pub fn parse(line: &str) -> Result<Self, GatewayError> {
        let hs: Handshake = serde_json::from_str(line.trim())
            .map_err(|e| GatewayError::Protocol(format!("bad handshake {line:?}: {e}")))?;
        if hs.protocol != PROTOCOL_VERSION {
            return Err(GatewayError::Protocol(format!(
                "unsupported protocol version {}",
                hs.protocol
            )));
        }
        Ok(hs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
}

/// A backend reply as received. Every field is optional here so that a
/// missing field surfaces as a protocol violation naming it rather than as
/// an opaque parse failure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entailment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contradiction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

impl WireResponse {
    pub fn scores(id: impl Into<String>, entailment: f64, neutral: f64, contradiction: f64) -> Self {
        Self {
            id: Some(id.into()),
            entailment: Some(entailment),
            neutral: Some(neutral),
            contradiction: Some(contradiction),
            error: None,
        }
    }

    pub fn parse(line: &str) -> Result<Self, GatewayError> {
        serde_json::from_str(line.trim())
            .map_err(|e| GatewayError::Protocol(format!("unparseable response {line:?}: {e}")))
    }

    /// The three raw probabilities, or the violation that prevents reading them.
    pub fn probabilities(&self) -> Result<(f64, f64, f64), GatewayError> {
        let id = self.id.as_deref().unwrap_or("<none>");
        if let Some(err) = &self.error {
            return Err(GatewayError::Backend(format!("request {id}: {err}")));
        }
        let field = |value: Option<f64>, name: &str| {
            value.ok_or_else(|| GatewayError::Protocol(format!("response {id} lacks {name:?}")))
        };
        Ok((
            field(self.entailment, "entailment")?,
            field(self.neutral, "neutral")?,
            field(self.contradiction, "contradiction")?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_serializes_in_field_order() {
        let req = WireRequest {
            id: "3".into(),
            premise: "p".into(),
            hypothesis: "h".into(),
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"3","premise":"p","hypothesis":"h"}"#
        );
    }

    #[test]
    fn response_missing_field_is_protocol_error() {
        let resp = WireResponse::parse(r#"{"id":"1","entailment":0.5,"neutral":0.5}"#).unwrap();
        match resp.probabilities() {
            Err(GatewayError::Protocol(msg)) => assert!(msg.contains("contradiction")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_response_is_backend_error() {
        let resp = WireResponse::parse(r#"{"id":null,"error":"bad json"}"#).unwrap();
        assert!(matches!(resp.probabilities(), Err(GatewayError::Backend(_))));
    }

    #[test]
    fn handshake_version_checked() {
        assert!(
            Handshake::parse(r#"{"protocol":1,"concurrent":true}"#)
                .unwrap()
                .concurrent
        );
        assert!(matches!(
            Handshake::parse(r#"{"protocol":2,"concurrent":true}"#),
            Err(GatewayError::Protocol(_))
        ));
    }
}
