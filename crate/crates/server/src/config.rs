//! Service configuration: an optional TOML file, then environment overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use assay_core::engine::Engine;
use assay_core::llm::{
    FixtureStore, Gateway, GatewayConfig, LiveConfig, LiveProvider, LlmProvider, MockProvider, TemplateSet,
};
use assay_core::store::FileJournal;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Live,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub provider: ProviderKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    /// Directory of recorded mock fixtures.
    pub fixtures_dir: Option<PathBuf>,
    /// Directory of prompt template overrides.
    pub templates_dir: Option<PathBuf>,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl Default for LlmSettings {
    fn default() -> Self {
        let d = GatewayConfig::default();
        Self {
            provider: ProviderKind::Mock,
            endpoint: None,
            model: None,
            api_key: None,
            fixtures_dir: None,
            templates_dir: None,
            concurrency: d.concurrency,
            timeout_secs: d.timeout.as_secs(),
            max_retries: d.max_retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    /// Journal file; created on first start.
    pub journal: PathBuf,
    pub session_ttl_hours: i64,
    pub llm: LlmSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            journal: PathBuf::from("data/journal.jsonl"),
            session_ttl_hours: assay_core::engine::SESSION_TTL_HOURS,
            llm: LlmSettings::default(),
        }
    }
}

fn parsed<T: std::str::FromStr>(key: &str, value: String) -> Result<T, String> {
    value.parse().map_err(|_| format!("{key}={value:?} is not valid"))
}

impl Config {
    /// Reads `path` if given, then applies overrides from `env`.
    pub fn load(path: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("reading {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => Config::default(),
        };
        if let Some(v) = env("ASSAY_BIND") {
            c.bind = v;
        }
        if let Some(v) = env("ASSAY_JOURNAL") {
            c.journal = v.into();
        }
        if let Some(v) = env("ASSAY_SESSION_TTL_HOURS") {
            c.session_ttl_hours = parsed("ASSAY_SESSION_TTL_HOURS", v)?;
        }
        if let Some(v) = env("LLM_PROVIDER") {
            c.llm.provider = match v.as_str() {
                "mock" => ProviderKind::Mock,
                "live" => ProviderKind::Live,
                other => return Err(format!("LLM_PROVIDER must be live or mock, not {other:?}")),
            };
        }
        for (key, slot) in [
            ("LLM_ENDPOINT", &mut c.llm.endpoint),
            ("LLM_MODEL", &mut c.llm.model),
            ("LLM_API_KEY", &mut c.llm.api_key),
        ] {
            if let Some(v) = env(key) {
                *slot = Some(v);
            }
        }
        if let Some(v) = env("LLM_FIXTURES_DIR") {
            c.llm.fixtures_dir = Some(v.into());
        }
        if let Some(v) = env("LLM_TEMPLATES_DIR") {
            c.llm.templates_dir = Some(v.into());
        }
        if let Some(v) = env("LLM_CONCURRENCY") {
            c.llm.concurrency = parsed("LLM_CONCURRENCY", v)?;
        }
        if let Some(v) = env("LLM_TIMEOUT_SECS") {
            c.llm.timeout_secs = parsed("LLM_TIMEOUT_SECS", v)?;
        }
        if c.session_ttl_hours <= 0 {
            return Err("session_ttl_hours must be positive".into());
        }
        Ok(c)
    }

    pub fn gateway(&self) -> Result<Gateway, String> {
        let l = &self.llm;
        let provider: Arc<dyn LlmProvider> = match l.provider {
            ProviderKind::Mock => {
                let fixtures = match &l.fixtures_dir {
                    Some(dir) => FixtureStore::load_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?,
                    None => FixtureStore::new(),
                };
                Arc::new(MockProvider::with_fixtures(fixtures))
            }
            ProviderKind::Live => {
                let need = |v: &Option<String>, k: &str| {
                    v.clone().ok_or_else(|| format!("{k} is required for the live provider"))
                };
                Arc::new(LiveProvider::new(LiveConfig {
                    endpoint: need(&l.endpoint, "LLM_ENDPOINT")?,
                    model: need(&l.model, "LLM_MODEL")?,
                    api_key: l.api_key.clone(),
                }))
            }
        };
        let templates = match &l.templates_dir {
            Some(dir) => TemplateSet::from_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?,
            None => TemplateSet::builtin(),
        };
        let gc = GatewayConfig {
            timeout: Duration::from_secs(l.timeout_secs.max(1)),
            max_retries: l.max_retries,
            concurrency: l.concurrency.max(1),
            ..GatewayConfig::default()
        };
        Ok(Gateway::new(provider, templates, gc))
    }

    /// Opens (or creates) the journal and replays it.
    pub fn open_engine(&self) -> Result<Engine, String> {
        let journal = FileJournal::open(&self.journal).map_err(|e| format!("{}: {e}", self.journal.display()))?;
        let engine = Engine::open(Box::new(journal), self.gateway()?).map_err(|e| e.to_string())?;
        Ok(engine.with_session_ttl(chrono::Duration::hours(self.session_ttl_hours)))
    }
}
