//! Engine configuration file (TOML) and the providers it describes.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mrag::lexical::Bm25Params;
use mrag::prompts::PromptSet;
use mrag::providers::{
    BiEncoderScorer, CachedEmbedder, CachedGenerator, CachedScorer, ContentCache, Generator, RemoteClient,
    RemoteConfig, RemoteCrossEncoder, RemoteEmbedder, RemoteGenerator, SemanticScorer, StubEmbedder,
};
use mrag::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Overrides the sidecar base URL from the config file.
pub const SIDECAR_URL_ENV: &str = "MRAG_SIDECAR_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Stub,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    #[default]
    BiEncoder,
    CrossEncoder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub scorer: ScorerKind,
    /// Reranker model name sent to the score endpoint.
    pub rerank_model: String,
    /// Generator model name; no generator is used when unset.
    pub generator_model: Option<String>,
    /// Content-addressed cache for remote calls.
    pub cache_dir: Option<PathBuf>,
    pub remote: RemoteConfig,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Stub,
            scorer: ScorerKind::BiEncoder,
            rerank_model: "reranker".into(),
            generator_model: None,
            cache_dir: None,
            remote: RemoteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub corpus: PathBuf,
    /// Defaults to the corpus path with `.idx` appended.
    #[serde(default)]
    pub index: Option<PathBuf>,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub provider: ProviderConfig,
    /// Directory of prompt overrides; built-in templates otherwise.
    #[serde(default)]
    pub prompts: Option<PathBuf>,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
}

fn default_ks() -> Vec<usize> {
    mrag::eval::DEFAULT_KS.to_vec()
}

impl EngineConfig {
    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: EngineConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus);
        if let Some(p) = cfg.index.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.prompts.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.provider.cache_dir.as_mut() {
            resolve(p);
        }
        if let Ok(url) = std::env::var(SIDECAR_URL_ENV) {
            if !url.is_empty() {
                cfg.provider.remote.base_url = url;
            }
        }
        Ok(cfg)
    }

    pub fn index_path(&self) -> PathBuf {
        self.index.clone().unwrap_or_else(|| {
            let mut s = self.corpus.clone().into_os_string();
            s.push(".idx");
            PathBuf::from(s)
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.pipeline.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.bm25.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(CliError::Usage(format!("ks must be non-empty and >= 1, got {:?}", self.ks)));
        }
        let r = &self.provider.remote;
        if r.timeout_secs.is_nan() || r.timeout_secs <= 0.0 || r.attempts == 0 || r.max_in_flight == 0 {
            return Err(CliError::Usage("remote timeout, attempts and max_in_flight must be positive".into()));
        }
        if !self.corpus.is_file() {
            return Err(CliError::Data(format!("corpus {} does not exist", self.corpus.display())));
        }
        if let Some(p) = &self.prompts {
            if !p.is_dir() {
                return Err(CliError::Data(format!("prompt directory {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn prompt_set(&self) -> Result<PromptSet, CliError> {
        match &self.prompts {
            Some(dir) => {
                PromptSet::from_dir(dir).map_err(|e| CliError::Data(format!("prompts {}: {e}", dir.display())))
            }
            None => Ok(PromptSet::builtin()),
        }
    }

    /// Settings that shape results, echoed into reports. Paths are left out
    /// so reports compare across machines.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "bm25": self.bm25,
            "pipeline": self.pipeline,
            "provider": self.provider.kind,
            "scorer": self.provider.scorer,
        })
    }
}

pub struct Providers {
    pub scorer: Box<dyn SemanticScorer>,
    pub generator: Option<Box<dyn Generator>>,
}

fn open_cache(dir: &Path) -> Result<ContentCache, CliError> {
    ContentCache::open(dir).map_err(|e| CliError::Data(format!("cache {}: {e}", dir.display())))
}

impl Providers {
    pub fn build(cfg: &ProviderConfig) -> Result<Self, CliError> {
        match cfg.kind {
            ProviderKind::Stub => {
                if cfg.scorer == ScorerKind::CrossEncoder {
                    return Err(CliError::Usage("the stub provider only offers bi-encoder scoring".into()));
                }
                Ok(Self { scorer: Box::new(BiEncoderScorer::new(StubEmbedder::new())), generator: None })
            }
            ProviderKind::Remote => {
                let client = Arc::new(RemoteClient::new(cfg.remote.clone()));
                let cache = cfg.cache_dir.as_deref();
                let scorer: Box<dyn SemanticScorer> = match cfg.scorer {
                    ScorerKind::BiEncoder => {
                        let e = RemoteEmbedder::connect(client.clone())?;
                        match &cache {
                            Some(c) => Box::new(BiEncoderScorer::new(CachedEmbedder::new(e, open_cache(c)?))),
                            None => Box::new(BiEncoderScorer::new(e)),
                        }
                    }
                    ScorerKind::CrossEncoder => {
                        let s = RemoteCrossEncoder::new(client.clone(), &cfg.rerank_model);
                        match &cache {
                            Some(c) => Box::new(CachedScorer::new(s, open_cache(c)?)),
                            None => Box::new(s),
                        }
                    }
                };
                let generator: Option<Box<dyn Generator>> = match cfg.generator_model.as_deref() {
                    Some(m) => {
                        let g = RemoteGenerator::new(client.clone(), m);
                        Some(match cache {
                            Some(c) => Box::new(CachedGenerator::new(g, open_cache(c)?)),
                            None => Box::new(g),
                        })
                    }
                    None => None,
                };
                Ok(Self { scorer, generator })
            }
        }
    }
}
