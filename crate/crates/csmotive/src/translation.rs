//! Translation clients, the content-addressed translation cache and
//! parallel corpus transfer.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use csmotive_core::translate::{
    transfer_instance, IdentityTranslator, TransferOptions, TransferReport, TranslateError, Translation, Translator,
    UppercaseTranslator,
};
use csmotive_core::{LangTag, SwitchInstance};
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::{read_jsonl, IoError};

/// `identity`, `upper` or `http:<url template>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientSpec {
    Identity,
    Upper,
    Http(String),
}

impl FromStr for ClientSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "identity" => Ok(ClientSpec::Identity),
            "upper" => Ok(ClientSpec::Upper),
            _ => match s.strip_prefix("http:") {
                Some(url) if url.starts_with("http://") || url.starts_with("https://") => {
                    if url.contains("{text}") {
                        Ok(ClientSpec::Http(url.to_owned()))
                    } else {
                        Err(format!("URL template `{url}` has no {{text}} placeholder"))
                    }
                }
                _ => Err(format!("unknown translation client `{s}` (expected identity, upper or http:<url>)")),
            },
        }
    }
}

impl fmt::Display for ClientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClientSpec::Identity => f.write_str("identity"),
            ClientSpec::Upper => f.write_str("upper"),
            ClientSpec::Http(url) => write!(f, "http:{url}"),
        }
    }
}

pub type SharedTranslator = Box<dyn Translator + Send + Sync>;

pub fn build_client(spec: &ClientSpec) -> SharedTranslator {
    match spec {
        ClientSpec::Identity => Box::new(IdentityTranslator),
        ClientSpec::Upper => Box::new(UppercaseTranslator),
        ClientSpec::Http(template) => Box::new(HttpTranslator::new(template.clone())),
    }
}

/// Language code sent to HTTP services. Hindi is requested in Latin script.
pub fn service_code(lang: LangTag) -> &'static str {
    match lang {
        LangTag::Eng => "en",
        LangTag::Spa => "es",
        LangTag::Hin => "hi-Latn",
        _ => "und",
    }
}

/// GETs a URL built from a template with `{text}`, `{source}` and
/// `{target}` placeholders and expects `{"text": "..."}` back. Transport
/// errors, 429 and 5xx responses are retried with exponential backoff.
#[derive(Debug, Clone)]
pub struct HttpTranslator {
    template: String,
    agent: ureq::Agent,
    pub attempts: u32,
    pub backoff: Duration,
}

#[derive(Deserialize)]
struct HttpReply {
    text: String,
}

impl HttpTranslator {
    pub fn new(template: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTranslator { template, agent, attempts: 3, backoff: Duration::from_millis(250) }
    }

    pub fn url(&self, text: &str, source: LangTag, target: LangTag) -> String {
        self.template
            .replace("{source}", service_code(source))
            .replace("{target}", service_code(target))
            .replace("{text}", &utf8_percent_encode(text, NON_ALPHANUMERIC).to_string())
    }

    fn once(&self, url: &str) -> Result<String, (bool, String)> {
        let mut resp = self.agent.get(url).call().map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err((true, format!("HTTP {status}")));
        }
        if status != 200 {
            return Err((false, format!("HTTP {status}")));
        }
        let reply: HttpReply = resp.body_mut().read_json().map_err(|e| (false, format!("bad response body: {e}")))?;
        Ok(reply.text)
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, source: LangTag, target: LangTag) -> Result<Translation, TranslateError> {
        let url = self.url(text, source, target);
        let mut delay = self.backoff;
        let mut last = String::new();
        for attempt in 1..=self.attempts.max(1) {
            match self.once(&url) {
                Ok(text) => return Ok(Translation { text, cached: false }),
                Err((retry, msg)) => {
                    log::debug!("translation attempt {attempt} failed: {msg}");
                    last = msg;
                    if !retry {
                        break;
                    }
                    if attempt < self.attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(TranslateError(last))
    }
}

/// Cache key: SHA-256 of the direction and the source span.
pub fn cache_key(text: &str, source: LangTag, target: LangTag) -> String {
    let mut h = Sha256::new();
    h.update(source.as_str().as_bytes());
    h.update(b">");
    h.update(target.as_str().as_bytes());
    h.update(b"\n");
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub source: LangTag,
    pub target: LangTag,
    pub span: String,
    pub text: String,
}

/// Content-addressed translations, optionally persisted as an append-only
/// JSONL file. Entries are inserted under a lock and never overwritten.
#[derive(Debug, Default)]
pub struct TranslationCache {
    inner: Mutex<CacheInner>,
}

#[derive(Debug, Default)]
struct CacheInner {
    entries: HashMap<String, String>,
    file: Option<(PathBuf, File)>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        TranslationCache::default()
    }

    pub fn open(path: &Path) -> Result<Self, IoError> {
        let mut entries = HashMap::new();
        if path.exists() {
            for e in read_jsonl::<CacheEntry>(path)? {
                entries.entry(e.key).or_insert(e.text);
            }
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.to_path_buf(), source })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
        Ok(TranslationCache { inner: Mutex::new(CacheInner { entries, file: Some((path.to_path_buf(), file)) }) })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.inner.lock().expect("cache lock poisoned").entries.get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock poisoned").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the stored translation, which is `entry.text` unless another
    /// writer got there first.
    pub fn insert(&self, entry: CacheEntry) -> Result<String, IoError> {
        let mut inner = self.inner.lock().expect("cache lock poisoned");
        if let Some(existing) = inner.entries.get(&entry.key) {
            return Ok(existing.clone());
        }
        if let Some((path, file)) = inner.file.as_mut() {
            let mut line = serde_json::to_string(&entry).expect("entries serialize");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|()| file.flush())
                .map_err(|source| IoError::Io { path: path.clone(), source })?;
        }
        inner.entries.insert(entry.key, entry.text.clone());
        Ok(entry.text)
    }
}

/// Wraps a client with a [`TranslationCache`] and counts the calls that
/// reached the client.
pub struct CachedTranslator<T> {
    inner: T,
    cache: TranslationCache,
    calls: AtomicUsize,
}

impl<T: Translator> CachedTranslator<T> {
    pub fn new(inner: T, cache: TranslationCache) -> Self {
        CachedTranslator { inner, cache, calls: AtomicUsize::new(0) }
    }

    pub fn client_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn cache(&self) -> &TranslationCache {
        &self.cache
    }
}

impl<T: Translator> Translator for CachedTranslator<T> {
    fn translate(&self, text: &str, source: LangTag, target: LangTag) -> Result<Translation, TranslateError> {
        let key = cache_key(text, source, target);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(Translation { text: hit, cached: true });
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let out = self.inner.translate(text, source, target)?;
        let stored = self
            .cache
            .insert(CacheEntry { key, source, target, span: text.to_owned(), text: out.text })
            .map_err(|e| TranslateError(format!("cache write failed: {e}")))?;
        Ok(Translation { text: stored, cached: false })
    }
}

/// Transfers instances on a pool of `jobs` threads. Output keeps source
/// order whatever the completion order.
pub fn transfer_parallel(
    instances: &[SwitchInstance],
    client: &(dyn Translator + Sync),
    opts: &TransferOptions,
    jobs: usize,
) -> (Vec<SwitchInstance>, TransferReport) {
    let run = || instances.par_iter().map(|inst| transfer_instance(inst, client, opts)).collect::<Vec<_>>();
    let results = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("could not build a thread pool ({e}); transferring on the global pool");
            run()
        }
    };
    TransferReport::collect(results)
}
