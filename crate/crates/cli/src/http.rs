//! Blocking HTTP clients for the model and fill-mask services.

use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;
use url::Url;

use sentasm::harness::{Endpoint, ModelError};
use sentasm::mutation::{FillMask, MlmError, MlmRequest, MlmResponse};

enum Failure {
    /// Worth retrying: connection problems, timeouts, 5xx.
    Transport(String),
    Protocol(String),
}

pub struct HttpService {
    url: Url,
    agent: Agent,
    connect_timeout: Duration,
}

impl HttpService {
    /// `base` may be the service root or the full route; `route` is
    /// appended unless already present.
    pub fn new(base: &str, route: &str, timeout: Duration) -> anyhow::Result<HttpService> {
        let mut url = Url::parse(base).with_context(|| format!("invalid endpoint URL `{base}`"))?;
        if !url.path().trim_end_matches('/').ends_with(route) {
            let path = format!("{}{route}", url.path().trim_end_matches('/'));
            url.set_path(&path);
        }
        let agent: Agent = Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Ok(HttpService {
            url,
            agent,
            connect_timeout: timeout.min(Duration::from_secs(2)),
        })
    }

    pub fn url(&self) -> &str {
        self.url.as_str()
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, request: &Req) -> Result<Resp, Failure> {
        let mut response = self.agent.post(self.url.as_str()).send_json(request).map_err(classify)?;
        response.body_mut().read_json::<Resp>().map_err(|e| match e {
            ureq::Error::Json(e) => Failure::Protocol(format!("unexpected response body: {e}")),
            other => classify(other),
        })
    }

    fn addrs(&self) -> Result<Vec<SocketAddr>, String> {
        let host = self.url.host_str().ok_or("endpoint URL has no host")?;
        let port = self.url.port_or_known_default().ok_or("endpoint URL has no port")?;
        (host, port)
            .to_socket_addrs()
            .map(Iterator::collect)
            .map_err(|e| format!("{host}:{port}: {e}"))
    }

    /// Opens and drops a TCP connection.
    pub fn reachable(&self) -> Result<(), String> {
        let addrs = self.addrs()?;
        let mut last = format!("{}: no address", self.url);
        for addr in addrs {
            match TcpStream::connect_timeout(&addr, self.connect_timeout) {
                Ok(_) => return Ok(()),
                Err(e) => last = format!("{}: {e}", self.url),
            }
        }
        Err(last)
    }
}

fn classify(e: ureq::Error) -> Failure {
    match e {
        ureq::Error::StatusCode(code) if code >= 500 => Failure::Transport(format!("HTTP {code}")),
        ureq::Error::StatusCode(code) => Failure::Protocol(format!("HTTP {code}")),
        ureq::Error::Json(e) => Failure::Protocol(e.to_string()),
        e @ (ureq::Error::Io(_)
        | ureq::Error::Timeout(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound
        | ureq::Error::BodyStalled) => Failure::Transport(e.to_string()),
        other => Failure::Protocol(other.to_string()),
    }
}

impl<Req: Serialize, Resp: DeserializeOwned> Endpoint<Req, Resp> for HttpService {
    fn call(&self, request: &Req) -> Result<Resp, ModelError> {
        self.post(request).map_err(|f| match f {
            Failure::Transport(m) => ModelError::Transport(m),
            Failure::Protocol(m) => ModelError::Protocol(m),
        })
    }

    fn probe(&self) -> Result<(), ModelError> {
        self.reachable().map_err(ModelError::Unreachable)
    }
}

impl FillMask for HttpService {
    fn fill_mask(&self, request: &MlmRequest) -> Result<MlmResponse, MlmError> {
        self.post(request).map_err(|f| match f {
            Failure::Transport(m) => MlmError::Transport(m),
            Failure::Protocol(m) => MlmError::Protocol(m),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_are_appended_once() {
        let t = Duration::from_secs(1);
        assert_eq!(HttpService::new("http://127.0.0.1:9000", "/predict", t).unwrap().url(), "http://127.0.0.1:9000/predict");
        assert_eq!(HttpService::new("http://h:1/predict", "/predict", t).unwrap().url(), "http://h:1/predict");
        assert_eq!(HttpService::new("http://h:1/sa/", "/predict", t).unwrap().url(), "http://h:1/sa/predict");
        assert!(HttpService::new("not a url", "/predict", t).is_err());
    }

    #[test]
    fn closed_port_is_unreachable() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        drop(listener);
        let svc = HttpService::new(&format!("http://127.0.0.1:{port}"), "/predict", Duration::from_millis(200)).unwrap();
        assert!(svc.reachable().is_err());
    }
}
