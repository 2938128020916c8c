//! Client for an external model server that fine-tunes and predicts.
//!
//! Wire format: `POST <endpoint>/train_predict` with a [`TrainPredictRequest`]
//! body, answered by `{"predictions": [{"id", "score", "decision"}]}`.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use csmotive_core::eval::{Backend, EvalError, HyperParams};
use csmotive_core::nb::Prediction;
use csmotive_core::{LabelKey, SwitchInstance};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RemoteError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend protocol error: {0}")]
    BackendProtocolError(String),
    #[error("remote backend needs transformer hyperparameters, got {0:?}")]
    UnsupportedParams(HyperParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireHyperParams {
    pub batch_size: u32,
    pub learning_rate: f64,
    pub epochs: u32,
    pub weight_decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestExample {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPredictRequest {
    pub model_name: String,
    pub label: LabelKey,
    pub hyperparams: WireHyperParams,
    pub seed: u64,
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<TestExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePrediction {
    pub id: String,
    pub score: f64,
    pub decision: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPredictResponse {
    pub predictions: Vec<WirePrediction>,
}

fn labeled(instances: &[SwitchInstance], label: LabelKey) -> Result<Vec<LabeledExample>, RemoteError> {
    instances
        .iter()
        .map(|i| {
            let gold = i
                .labels
                .ok_or_else(|| RemoteError::BackendProtocolError(format!("training instance `{}` has no labels", i.id)))?;
            Ok(LabeledExample { id: i.id.clone(), text: i.text.clone(), label: gold.get(label) })
        })
        .collect()
}

impl TrainPredictRequest {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        model_name: &str,
        label: LabelKey,
        params: &HyperParams,
        seed: u64,
        train: &[SwitchInstance],
        dev: &[SwitchInstance],
        test: &[SwitchInstance],
    ) -> Result<Self, RemoteError> {
        let HyperParams::Transformer { batch_size, learning_rate, epochs, weight_decay } = *params else {
            return Err(RemoteError::UnsupportedParams(*params));
        };
        Ok(TrainPredictRequest {
            model_name: model_name.to_owned(),
            label,
            hyperparams: WireHyperParams { batch_size, learning_rate, epochs, weight_decay },
            seed,
            train: labeled(train, label)?,
            dev: labeled(dev, label)?,
            test: test.iter().map(|i| TestExample { id: i.id.clone(), text: i.text.clone() }).collect(),
        })
    }

    /// SHA-256 of the serialized request: every hyperparameter, the seed and
    /// all data take part.
    pub fn cache_key(&self) -> String {
        let body = serde_json::to_vec(self).expect("requests serialize");
        hex::encode(Sha256::digest(&body))
    }
}

/// Checks that the response predicts every test id exactly once and returns
/// the predictions in test order.
pub fn validate_response(
    request: &TrainPredictRequest,
    response: TrainPredictResponse,
) -> Result<Vec<Prediction>, RemoteError> {
    let protocol = RemoteError::BackendProtocolError;
    let mut by_id: HashMap<String, WirePrediction> = HashMap::new();
    for p in response.predictions {
        if !(p.score.is_finite() && (0.0..=1.0).contains(&p.score)) {
            return Err(protocol(format!("score {} for `{}` is outside [0, 1]", p.score, p.id)));
        }
        if by_id.contains_key(&p.id) {
            return Err(protocol(format!("duplicate prediction for `{}`", p.id)));
        }
        by_id.insert(p.id.clone(), p);
    }
    let wanted: HashSet<&str> = request.test.iter().map(|t| t.id.as_str()).collect();
    if let Some(extra) = by_id.keys().find(|id| !wanted.contains(id.as_str())) {
        return Err(protocol(format!("prediction for unknown id `{extra}`")));
    }
    request
        .test
        .iter()
        .map(|t| {
            let p = by_id.remove(&t.id).ok_or_else(|| protocol(format!("no prediction for test id `{}`", t.id)))?;
            Ok(Prediction { instance_id: p.id, label: request.label, decision: p.decision, score: p.score })
        })
        .collect()
}

/// Remote backend with a response cache (in memory, plus on disk when
/// `cache_dir` is set).
pub struct RemoteBackend {
    pub endpoint: String,
    pub model_name: String,
    pub cache_dir: Option<PathBuf>,
    agent: ureq::Agent,
    memory: Mutex<HashMap<String, TrainPredictResponse>>,
    network_calls: AtomicUsize,
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, model_name: impl Into<String>, cache_dir: Option<PathBuf>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(24 * 3600)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend {
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            cache_dir,
            agent,
            memory: Mutex::new(HashMap::new()),
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/train_predict") {
            base.to_owned()
        } else {
            format!("{base}/train_predict")
        }
    }

    fn cached(&self, key: &str) -> Option<TrainPredictResponse> {
        if let Some(r) = self.memory.lock().expect("cache lock poisoned").get(key) {
            return Some(r.clone());
        }
        let path = self.cache_dir.as_ref()?.join(format!("{key}.json"));
        let bytes = std::fs::read(path).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    fn store(&self, key: &str, response: &TrainPredictResponse) {
        self.memory.lock().expect("cache lock poisoned").insert(key.to_owned(), response.clone());
        if let Some(dir) = &self.cache_dir {
            let body = serde_json::to_vec(response).expect("responses serialize");
            if let Err(e) = crate::io::write_atomic(&dir.join(format!("{key}.json")), &body) {
                log::warn!("could not cache remote response: {e}");
            }
        }
    }

    fn post(&self, request: &TrainPredictRequest) -> Result<TrainPredictResponse, RemoteError> {
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        let mut resp = self
            .agent
            .post(&self.url())
            .send_json(request)
            .map_err(|e| RemoteError::BackendUnavailable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(if status >= 500 {
                RemoteError::BackendUnavailable(format!("HTTP {status}: {detail}"))
            } else {
                RemoteError::BackendProtocolError(format!("HTTP {status}: {detail}"))
            });
        }
        resp.body_mut()
            .read_json()
            .map_err(|e| RemoteError::BackendProtocolError(format!("bad response body: {e}")))
    }

    /// One training run on the server; identical requests are answered from
    /// the cache without a network call.
    pub fn remote_train_predict(&self, request: &TrainPredictRequest) -> Result<Vec<Prediction>, RemoteError> {
        let key = request.cache_key();
        if let Some(hit) = self.cached(&key) {
            return validate_response(request, hit);
        }
        let response = self.post(request)?;
        let predictions = validate_response(request, response.clone())?;
        self.store(&key, &response);
        Ok(predictions)
    }
}

impl Backend for RemoteBackend {
    fn name(&self) -> String {
        format!("remote:{}", self.model_name)
    }

    fn train_predict(
        &self,
        label: LabelKey,
        params: &HyperParams,
        seed: u64,
        train: &[SwitchInstance],
        dev: &[SwitchInstance],
        test: &[SwitchInstance],
    ) -> Result<Vec<Prediction>, EvalError> {
        let request = TrainPredictRequest::build(&self.model_name, label, params, seed, train, dev, test)
            .map_err(|e| EvalError::Backend(e.to_string()))?;
        self.remote_train_predict(&request).map_err(|e| EvalError::Backend(e.to_string()))
    }
}
