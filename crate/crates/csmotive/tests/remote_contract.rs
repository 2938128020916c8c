//! The remote backend against a mock model server.

mod common;

use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use csmotive::remote::{RemoteBackend, RemoteError, TrainPredictRequest, TrainPredictResponse, WirePrediction};
use csmotive_core::eval::{run_experiment, HyperParams, Splits, DEFAULT_SEEDS};
use csmotive_core::{LabelKey, LabelSet, LangTag};
use serde_json::Value;

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Majority,
    DropFirst,
    BadScore,
}

#[derive(Clone)]
struct Mock {
    mode: Mode,
    seen: Arc<Mutex<Vec<Value>>>,
}

async fn train_predict(State(mock): State<Mock>, Json(raw): Json<Value>) -> Json<TrainPredictResponse> {
    mock.seen.lock().unwrap().push(raw.clone());
    let req: TrainPredictRequest = serde_json::from_value(raw).unwrap();
    let positives = req.train.iter().filter(|e| e.label).count();
    let majority = positives * 2 > req.train.len();
    let mut predictions: Vec<WirePrediction> = req
        .test
        .iter()
        .map(|t| WirePrediction { id: t.id.clone(), score: if majority { 0.9 } else { 0.1 }, decision: majority })
        .collect();
    match mock.mode {
        Mode::Majority => {}
        Mode::DropFirst => {
            predictions.remove(0);
        }
        Mode::BadScore => predictions[0].score = 1.5,
    }
    Json(TrainPredictResponse { predictions })
}

fn start(mode: Mode) -> (String, Arc<Mutex<Vec<Value>>>) {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let router = Router::new().route("/train_predict", post(train_predict)).with_state(Mock { mode, seen: seen.clone() });
    let addr = common::spawn_server(router);
    (format!("http://{addr}"), seen)
}

fn data() -> Splits {
    let labeled = |conv: &str, n: usize, on: bool| {
        let labels = LabelSet::from_keys(if on { &[LabelKey::Command] } else { &[] });
        common::instance(conv, n, &[("ven", LangTag::Spa), ("here", LangTag::Eng)], Some(labels))
    };
    Splits {
        train: (0..10).map(|n| labeled("tr", n, n < 7)).collect(),
        dev: (0..4).map(|n| labeled("dv", n, n < 3)).collect(),
        test: (0..6).map(|n| labeled("te", n, n % 2 == 0)).collect(),
    }
}

fn params() -> HyperParams {
    HyperParams::transformer_grid()[1]
}

#[test]
fn majority_mock_predicts_majority_and_request_carries_everything() {
    let (url, seen) = start(Mode::Majority);
    let backend = RemoteBackend::new(&url, "xlmr", None);
    let s = data();
    let req = TrainPredictRequest::build("xlmr", LabelKey::Command, &params(), 30, &s.train, &s.dev, &s.test).unwrap();
    let preds = backend.remote_train_predict(&req).unwrap();
    assert_eq!(preds.len(), 6);
    assert!(preds.iter().all(|p| p.decision && p.label == LabelKey::Command));
    assert_eq!(preds.iter().map(|p| p.instance_id.as_str()).collect::<Vec<_>>(), s.test.iter().map(|i| i.id.as_str()).collect::<Vec<_>>());

    let body = &seen.lock().unwrap()[0];
    assert_eq!(body["model_name"], "xlmr");
    assert_eq!(body["label"], "command");
    assert_eq!(body["seed"], 30);
    let hp = &body["hyperparams"];
    assert_eq!((hp["batch_size"].as_u64(), hp["epochs"].as_u64()), (Some(4), Some(20)));
    assert_eq!(hp["learning_rate"].as_f64(), Some(1e-4));
    assert_eq!(hp["weight_decay"].as_f64(), Some(0.01));
    assert_eq!(body["train"].as_array().unwrap().len(), 10);
    assert_eq!(body["dev"].as_array().unwrap().len(), 4);
    assert_eq!(body["train"][0]["label"], true);
    assert_eq!(body["train"][0]["text"], "MAR: ven here");
    // gold labels never travel with the test set
    assert!(body["test"][0].get("label").is_none());
}

#[test]
fn repeated_request_is_served_from_cache() {
    let (url, seen) = start(Mode::Majority);
    let dir = tempfile::tempdir().unwrap();
    let backend = RemoteBackend::new(&url, "mbert", Some(dir.path().to_path_buf()));
    let s = data();
    let req = TrainPredictRequest::build("mbert", LabelKey::Command, &params(), 42, &s.train, &s.dev, &s.test).unwrap();
    let first = backend.remote_train_predict(&req).unwrap();
    let second = backend.remote_train_predict(&req).unwrap();
    assert_eq!(first, second);
    assert_eq!(backend.network_calls(), 1);

    // a fresh client with the same cache directory makes no call either
    let fresh = RemoteBackend::new(&url, "mbert", Some(dir.path().to_path_buf()));
    assert_eq!(fresh.remote_train_predict(&req).unwrap(), first);
    assert_eq!(fresh.network_calls(), 0);
    assert_eq!(seen.lock().unwrap().len(), 1);

    // any change to the request is a different key
    let other = TrainPredictRequest::build("mbert", LabelKey::Command, &params(), 5, &s.train, &s.dev, &s.test).unwrap();
    assert_ne!(other.cache_key(), req.cache_key());
}

#[test]
fn missing_test_id_is_a_protocol_error() {
    let (url, _) = start(Mode::DropFirst);
    let backend = RemoteBackend::new(&url, "xlmr", None);
    let s = data();
    let req = TrainPredictRequest::build("xlmr", LabelKey::Joke, &params(), 42, &s.train, &s.dev, &s.test).unwrap();
    match backend.remote_train_predict(&req) {
        Err(RemoteError::BackendProtocolError(msg)) => assert!(msg.contains("te-u000000"), "{msg}"),
        other => panic!("expected a protocol error, got {other:?}"),
    }
}

#[test]
fn out_of_range_score_is_a_protocol_error() {
    let (url, _) = start(Mode::BadScore);
    let backend = RemoteBackend::new(&url, "xlmr", None);
    let s = data();
    let req = TrainPredictRequest::build("xlmr", LabelKey::Joke, &params(), 42, &s.train, &s.dev, &s.test).unwrap();
    assert!(matches!(backend.remote_train_predict(&req), Err(RemoteError::BackendProtocolError(_))));
}

#[test]
fn unreachable_server_is_unavailable() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = RemoteBackend::new(format!("http://127.0.0.1:{port}"), "xlmr", None);
    let s = data();
    let req = TrainPredictRequest::build("xlmr", LabelKey::Joke, &params(), 42, &s.train, &s.dev, &s.test).unwrap();
    assert!(matches!(backend.remote_train_predict(&req), Err(RemoteError::BackendUnavailable(_))));
}

#[test]
fn nb_params_are_refused() {
    let s = data();
    let err = TrainPredictRequest::build("xlmr", LabelKey::Joke, &HyperParams::NaiveBayes { alpha: 1.0 }, 42, &s.train, &s.dev, &s.test)
        .unwrap_err();
    assert!(matches!(err, RemoteError::UnsupportedParams(_)));
}

#[test]
fn experiment_searches_with_seed_42_then_runs_every_seed() {
    let (url, seen) = start(Mode::Majority);
    let backend = RemoteBackend::new(&url, "xlmr", None);
    let s = data();
    let row = run_experiment(&backend, &s, LabelKey::Command, &HyperParams::transformer_grid(), &DEFAULT_SEEDS).unwrap();
    // majority is "positive", right on 3 of 6 test instances for every seed
    assert_eq!(row.per_seed, vec![50.0; 5]);
    assert_eq!(row.accuracy_std, 0.0);
    // every grid point ties on dev, so the smallest batch and rate win
    assert_eq!(row.hyperparams, HyperParams::transformer_grid()[0]);
    let seen = seen.lock().unwrap();
    let seeds: Vec<u64> = seen.iter().map(|b| b["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![42, 42, 42, 42, 42, 30, 20, 10, 5]);
    let test_sizes: Vec<usize> = seen.iter().map(|b| b["test"].as_array().unwrap().len()).collect();
    assert_eq!(test_sizes, vec![4, 4, 4, 4, 6, 6, 6, 6, 6]);
    assert!(seen[4..].iter().all(|b| b["hyperparams"]["batch_size"] == 4));
}
