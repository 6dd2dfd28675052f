use std::time::Duration;

use reqwest::blocking::Client;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn client(timeout_secs: u64) -> Result<Client> {
    Client::builder()
        .timeout(Duration::from_secs(timeout_secs))
        .build()
        .map_err(|e| Error::Config(format!("http client: {e}")))
}

/// Reads a credential from the named environment variable, if set.
pub(crate) fn credential(var: Option<&str>) -> Option<String> {
    var.and_then(|v| std::env::var(v).ok()).filter(|v| !v.is_empty())
}

/// POSTs a JSON body. Connection-level failures map to `Transport`, non-2xx
/// statuses to `Remote` with the body passed through.
pub(crate) fn post_json<B: Serialize, R: DeserializeOwned>(
    client: &Client,
    url: &str,
    body: &B,
    api_key: Option<&str>,
) -> Result<R> {
    let mut req = client.post(url).json(body);
    if let Some(key) = api_key {
        req = req.bearer_auth(key);
    }
    let resp = req.send().map_err(|e| Error::Transport(e.to_string()))?;
    let status = resp.status();
    let text = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
    if !status.is_success() {
        return Err(Error::Remote {
            status: status.as_u16(),
            message: text,
        });
    }
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("malformed response from {url}: {e}")))
}
