//! Thin async client for the slaforge gateway. The CLI and the integration
//! tests both drive the service through this crate.

pub mod types;

use reqwest::StatusCode;

use types::{
    ErrorBody, EventAck, EventBody, HistoryPoint, NegotiateRequest, NegotiateResponse,
    ReplayRequest, RunArtifactsWire, SimulateRequest,
};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("gateway returned {status}: {message}")]
    Api { status: u16, message: String },
}

#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    http: reqwest::Client,
}

impl ApiClient {
    pub fn new(base: impl Into<String>) -> Self {
        ApiClient {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn error_for(resp: reqwest::Response) -> ClientError {
        let status = resp.status().as_u16();
        let message = match resp.json::<ErrorBody>().await {
            Ok(body) => body.error,
            Err(_) => "unreadable error body".to_string(),
        };
        ClientError::Api { status, message }
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        let resp = self.http.get(self.url("/health")).send().await?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(Self::error_for(resp).await)
        }
    }

    /// Posts one event. 202/200/422 are verdicts; anything else is an error
    /// (409 out-of-order, 400 malformed, 404 no definition loaded).
    pub async fn post_event(
        &self,
        event_name: &str,
        body: &EventBody,
    ) -> Result<EventAck, ClientError> {
        let resp = self
            .http
            .post(self.url(&format!("/events/{event_name}")))
            .json(body)
            .send()
            .await?;
        match resp.status() {
            StatusCode::ACCEPTED => Ok(EventAck::Accepted),
            StatusCode::OK => Ok(EventAck::Ignored),
            StatusCode::UNPROCESSABLE_ENTITY => {
                let message = resp
                    .json::<ErrorBody>()
                    .await
                    .map(|b| b.error)
                    .unwrap_or_default();
                Ok(EventAck::Rejected(message))
            }
            _ => Err(Self::error_for(resp).await),
        }
    }

    /// Latest value of a metric as `"num/den"`; `None` when the key is
    /// unknown.
    pub async fn metric(&self, key: &str) -> Result<Option<String>, ClientError> {
        let resp = self.http.get(self.url(&format!("/metrics/{key}"))).send().await?;
        match resp.status() {
            StatusCode::OK => Ok(Some(resp.json::<String>().await?)),
            StatusCode::NOT_FOUND => Ok(None),
            _ => Err(Self::error_for(resp).await),
        }
    }

    pub async fn metric_history(&self, key: &str) -> Result<Vec<HistoryPoint>, ClientError> {
        let resp = self
            .http
            .get(self.url(&format!("/metrics/{key}/history")))
            .send()
            .await?;
        if resp.status() == StatusCode::OK {
            Ok(resp.json().await?)
        } else {
            Err(Self::error_for(resp).await)
        }
    }

    pub async fn negotiate(
        &self,
        request: &NegotiateRequest,
    ) -> Result<NegotiateResponse, ClientError> {
        self.post_json("/negotiate", request).await
    }

    pub async fn simulate(
        &self,
        request: &SimulateRequest,
    ) -> Result<RunArtifactsWire, ClientError> {
        self.post_json("/simulate", request).await
    }

    pub async fn replay(&self, request: &ReplayRequest) -> Result<RunArtifactsWire, ClientError> {
        self.post_json("/replay", request).await
    }

    async fn post_json<Req, Resp>(&self, path: &str, request: &Req) -> Result<Resp, ClientError>
    where
        Req: serde::Serialize,
        Resp: serde::de::DeserializeOwned,
    {
        let resp = self.http.post(self.url(path)).json(request).send().await?;
        if resp.status().is_success() {
            Ok(resp.json().await?)
        } else {
            Err(Self::error_for(resp).await)
        }
    }
}
