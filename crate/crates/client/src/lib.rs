//! HTTP client for the settlement service, plus the request and response
//! bodies both sides agree on.

use std::time::Duration;

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use settle_core::scenario::{House, Scenario};

pub mod api;

pub use api::*;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("{status}: {message}")]
    Api { status: StatusCode, message: String },

    #[error("job {id} failed: {message}")]
    JobFailed { id: String, message: String },

    #[error(transparent)]
    Http(#[from] reqwest::Error),
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// Absolute form of a server path such as an `image_url`.
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send(&self, method: Method, path: &str, body: Option<&impl Serialize>) -> Result<reqwest::Response> {
        let mut req = self.http.request(method, self.url(path));
        if let Some(body) = body {
            req = req.json(body);
        }
        let resp = req.send().await?;
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status();
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|e| e.error).unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    async fn json<T: DeserializeOwned>(&self, method: Method, path: &str, body: Option<&impl Serialize>) -> Result<T> {
        Ok(self.send(method, path, body).await?.json().await?)
    }

    pub async fn scenario(&self) -> Result<Scenario> {
        self.json(Method::GET, "/api/scenario", None::<&()>).await
    }

    pub async fn update_house(&self, id: &str, update: &HouseUpdate) -> Result<House> {
        self.json(Method::PUT, &format!("/api/houses/{id}"), Some(update)).await
    }

    /// Raw response body, so callers can keep the server's numbers verbatim.
    pub async fn view(&self, req: &ViewRequest) -> Result<Value> {
        self.json(Method::POST, "/api/compute/view", Some(req)).await
    }

    pub async fn start_flow(&self, req: &FlowRequest) -> Result<JobAccepted> {
        self.json(Method::POST, "/api/compute/flow", Some(req)).await
    }

    pub async fn job(&self, id: &str) -> Result<JobStatus> {
        self.json(Method::GET, &format!("/api/jobs/{id}"), None::<&()>).await
    }

    /// Poll until the job is done or failed.
    pub async fn wait(&self, id: &str, every: Duration) -> Result<JobStatus> {
        loop {
            let job = self.job(id).await?;
            match job.status {
                Status::Done => return Ok(job),
                Status::Failed => {
                    return Err(ClientError::JobFailed {
                        id: id.to_string(),
                        message: job.error.unwrap_or_default(),
                    })
                }
                Status::Queued | Status::Running => tokio::time::sleep(every).await,
            }
        }
    }

    /// Artifact bytes behind an `image_url` or `field_url`.
    pub async fn artifact(&self, path: &str) -> Result<Vec<u8>> {
        Ok(self.send(Method::GET, path, None::<&()>).await?.bytes().await?.to_vec())
    }

    pub async fn save(&self, req: &SaveRequest) -> Result<SaveResponse> {
        self.json(Method::POST, "/api/scenario/save", Some(req)).await
    }
}
