//! Typed async client for the napkit service.

use std::io;

use napkit_core::export::{safe_relative_path, ManifestLayer, RunManifest};
use napkit_core::{Nap, NapError, NapFilter, NapSet, SampleTrace};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;
use url::Url;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid server URL: {0}")]
    BadUrl(#[from] url::ParseError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("request to {url} failed: {source}")]
    Transport {
        url: String,
        #[source]
        source: reqwest::Error,
    },
    /// The server answered with a structured error.
    #[error("server returned {status}: {message}")]
    Api {
        status: u16,
        class: String,
        message: String,
    },
}

/// Server error classes come back as the same `NapError` variant; transport
/// failures become `Io`.
impl From<ClientError> for NapError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::BadUrl(e) => NapError::Param(format!("invalid server URL: {e}")),
            ClientError::Argument(m) => NapError::Param(m),
            ClientError::Transport { url, source } => NapError::io(url, io::Error::other(source)),
            ClientError::Api { class, message, .. } => match class.as_str() {
                "FormatError" => NapError::Format(message),
                "DataError" => NapError::Data(message),
                "ShapeError" => NapError::Shape(message),
                "LookupError" => NapError::Lookup(message),
                "ParamError" => NapError::Param(message),
                _ => NapError::io("server", io::Error::other(message)),
            },
        }
    }
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
    message: String,
}

#[derive(Debug, Clone)]
pub struct NapClient {
    base: Url,
    http: reqwest::Client,
}

impl NapClient {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let mut base = Url::parse(base)?;
        if !base.path().ends_with('/') {
            let path = format!("{}/", base.path());
            base.set_path(&path);
        }
        Ok(Self {
            base,
            http: reqwest::Client::new(),
        })
    }

    pub fn base(&self) -> &Url {
        &self.base
    }

    fn url(&self, segments: &[&str], query: &[(&str, &str)]) -> Url {
        let mut url = self.base.clone();
        url.path_segments_mut()
            .expect("http URLs have a path")
            .pop_if_empty()
            .extend(segments);
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(query);
        }
        url
    }

    async fn send(&self, url: Url) -> Result<reqwest::Response, ClientError> {
        let transport = |source| ClientError::Transport {
            url: url.to_string(),
            source,
        };
        let resp = self.http.get(url.clone()).send().await.map_err(transport)?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.map_err(transport)?;
        Err(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => ClientError::Api {
                status: status.as_u16(),
                class: body.error,
                message: body.message,
            },
            Err(_) => ClientError::Api {
                status: status.as_u16(),
                class: fallback_class(status).to_string(),
                message: text,
            },
        })
    }

    async fn json<T: DeserializeOwned>(&self, url: Url) -> Result<T, ClientError> {
        let u = url.to_string();
        self.send(url)
            .await?
            .json()
            .await
            .map_err(|source| ClientError::Transport { url: u, source })
    }

    pub async fn models(&self) -> Result<Vec<RunManifest>, ClientError> {
        self.json(self.url(&["api", "models"], &[])).await
    }

    pub async fn layers(&self, model: &str) -> Result<Vec<ManifestLayer>, ClientError> {
        self.json(self.url(&["api", "models", model, "layers"], &[]))
            .await
    }

    pub async fn naps(
        &self,
        model: &str,
        layer: &str,
        filter: &NapFilter,
    ) -> Result<NapSet, ClientError> {
        let mut query = Vec::new();
        if let Some(l) = &filter.label {
            query.push(("label", l.as_str()));
        }
        if let Some(p) = &filter.prediction {
            query.push(("prediction", p.as_str()));
        }
        if filter.mispredicted {
            query.push(("mispredicted", "true"));
        }
        self.json(self.url(&["api", "models", model, "layers", layer, "naps"], &query))
            .await
    }

    /// `nap_id` is `{model}/{layer}/{label}`; its slashes are kept as path
    /// separators.
    pub async fn nap(&self, nap_id: &str) -> Result<Nap, ClientError> {
        let mut segments = vec!["api", "naps"];
        segments.extend(nap_id.split('/'));
        self.json(self.url(&segments, &[])).await
    }

    pub async fn trace(
        &self,
        sample_id: usize,
        model: Option<&str>,
    ) -> Result<SampleTrace, ClientError> {
        let id = sample_id.to_string();
        let query: Vec<_> = model.map(|m| ("model", m)).into_iter().collect();
        self.json(self.url(&["api", "samples", &id, "trace"], &query))
            .await
    }

    /// `image_ref` must be a relative path without `..`.
    pub async fn asset(
        &self,
        image_ref: &str,
        model: Option<&str>,
    ) -> Result<Vec<u8>, ClientError> {
        if safe_relative_path(image_ref).is_none() {
            return Err(ClientError::Argument(format!(
                "bad asset path '{image_ref}'"
            )));
        }
        let mut segments = vec!["assets"];
        segments.extend(image_ref.split('/'));
        let query: Vec<_> = model.map(|m| ("model", m)).into_iter().collect();
        let url = self.url(&segments, &query);
        let u = url.to_string();
        let bytes = self
            .send(url)
            .await?
            .bytes()
            .await
            .map_err(|source| ClientError::Transport { url: u, source })?;
        Ok(bytes.to_vec())
    }
}

fn fallback_class(status: StatusCode) -> &'static str {
    match status {
        StatusCode::NOT_FOUND => "LookupError",
        s if s.is_client_error() => "ParamError",
        _ => "IoError",
    }
}
