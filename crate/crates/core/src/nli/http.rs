//! HTTP backend: `POST {endpoint}/score` with a JSON array of requests.

use std::time::Duration;

use super::{GatewayError, Scorer, WireRequest, WireResponse};

pub struct HttpScorer {
    endpoint: String,
    agent: ureq::Agent,
    timeout: Duration,
    concurrent: bool,
}

impl HttpScorer {
    /// `base_url` is the server root; `/score` is appended.
    pub fn new(base_url: &str, timeout: Duration, concurrent: bool) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: format!("{}/score", base_url.trim_end_matches('/')),
            agent,
            timeout,
            concurrent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Scorer for HttpScorer {
    fn concurrent(&self) -> bool {
        self.concurrent
    }

    fn score(&self, requests: &[WireRequest]) -> Result<Vec<WireResponse>, GatewayError> {
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(requests)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => GatewayError::Timeout(self.timeout),
                other => GatewayError::Unreachable(format!("{}: {other}", self.endpoint)),
            })?;
        let status = response.status();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Unreachable(format!("{}: {e}", self.endpoint)))?;
        if status.is_server_error() {
            return Err(GatewayError::Unreachable(format!("{}: HTTP {status}", self.endpoint)));
        }
        if !status.is_success() {
            return Err(GatewayError::Backend(format!("HTTP {status}: {body}")));
        }
        serde_json::from_str(&body)
            .map_err(|e| GatewayError::Protocol(format!("response body is not a response array: {e}")))
    }
}
