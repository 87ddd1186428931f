use std::net::SocketAddr;
use std::path::PathBuf;

use thiserror::Error;

pub const DEFAULT_LIMIT: u32 = 1000;
pub const DEFAULT_RATE_PER_MIN: u32 = 30;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{name} must be a positive integer, got {value:?}")]
    NotPositive { name: &'static str, value: String },
    #[error("set exactly one of PREFKIT_POOL_DIR or PREFKIT_PROVIDER_URL")]
    Provider,
    #[error("PREFKIT_LOG_PATH is required")]
    MissingLog,
    #[error("invalid bind address {0:?}")]
    Bind(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderConfig {
    /// Serve existing image files from a directory.
    Pool(PathBuf),
    /// Ask an external generator over HTTP.
    Generator(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub interaction_limit: u32,
    pub rate_per_min: u32,
    pub nsfw_file: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub log_path: PathBuf,
    /// Comma-separated tokens accepted in addition to `tokens_file`.
    pub tokens: Vec<String>,
    pub tokens_file: Option<PathBuf>,
    /// When set, admin endpoints require this value in `x-admin-token`.
    pub admin_token: Option<String>,
}

impl ServiceConfig {
    pub fn new(provider: ProviderConfig, log_path: impl Into<PathBuf>) -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            interaction_limit: DEFAULT_LIMIT,
            rate_per_min: DEFAULT_RATE_PER_MIN,
            nsfw_file: None,
            provider,
            log_path: log_path.into(),
            tokens: Vec::new(),
            tokens_file: None,
            admin_token: None,
        }
    }

    /// Reads `PREFKIT_*` settings through `lookup` (normally `std::env::var`).
    pub fn from_lookup<F>(lookup: F) -> Result<Self, ConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        let positive = |name: &'static str, default: u32| -> Result<u32, ConfigError> {
            match lookup(name) {
                None => Ok(default),
                Some(v) => match v.trim().parse::<u32>() {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(ConfigError::NotPositive { name, value: v }),
                },
            }
        };
        let provider = match (lookup("PREFKIT_POOL_DIR"), lookup("PREFKIT_PROVIDER_URL")) {
            (Some(dir), None) => ProviderConfig::Pool(dir.into()),
            (None, Some(url)) => ProviderConfig::Generator(url),
            _ => return Err(ConfigError::Provider),
        };
        let log_path = lookup("PREFKIT_LOG_PATH").ok_or(ConfigError::MissingLog)?;
        let bind = match lookup("PREFKIT_BIND") {
            None => SocketAddr::from(([127, 0, 0, 1], 8080)),
            Some(b) => b.parse().map_err(|_| ConfigError::Bind(b))?,
        };
        Ok(Self {
            bind,
            interaction_limit: positive("PREFKIT_LIMIT", DEFAULT_LIMIT)?,
            rate_per_min: positive("PREFKIT_RATE_PER_MIN", DEFAULT_RATE_PER_MIN)?,
            nsfw_file: lookup("PREFKIT_NSFW_FILE").map(PathBuf::from),
            provider,
            log_path: log_path.into(),
            tokens: lookup("PREFKIT_TOKENS")
                .map(|t| {
                    t.split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(String::from)
                        .collect()
                })
                .unwrap_or_default(),
            tokens_file: lookup("PREFKIT_TOKENS_FILE").map(PathBuf::from),
            admin_token: lookup("PREFKIT_ADMIN_TOKEN"),
        })
    }

    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults_apply() {
        let c = ServiceConfig::from_lookup(lookup(&[
            ("PREFKIT_POOL_DIR", "/img"),
            ("PREFKIT_LOG_PATH", "/tmp/log"),
        ]))
        .unwrap();
        assert_eq!(c.interaction_limit, 1000);
        assert_eq!(c.rate_per_min, 30);
        assert_eq!(c.provider, ProviderConfig::Pool("/img".into()));
    }

    #[test]
    fn overrides_and_tokens() {
        let c = ServiceConfig::from_lookup(lookup(&[
            ("PREFKIT_PROVIDER_URL", "http://gen"),
            ("PREFKIT_LOG_PATH", "log"),
            ("PREFKIT_LIMIT", "10"),
            ("PREFKIT_TOKENS", "a, b,,c"),
        ]))
        .unwrap();
        assert_eq!(c.interaction_limit, 10);
        assert_eq!(c.tokens, vec!["a", "b", "c"]);
        assert_eq!(c.provider, ProviderConfig::Generator("http://gen".into()));
    }

    #[test]
    fn invalid_settings() {
        let base = [("PREFKIT_POOL_DIR", "/img"), ("PREFKIT_LOG_PATH", "l")];
        let with = |extra: (&'static str, &'static str)| {
            let mut v = base.to_vec();
            v.push(extra);
            ServiceConfig::from_lookup(lookup(&v))
        };
        assert!(matches!(
            with(("PREFKIT_LIMIT", "0")),
            Err(ConfigError::NotPositive { .. })
        ));
        assert!(matches!(
            with(("PREFKIT_PROVIDER_URL", "http://x")),
            Err(ConfigError::Provider)
        ));
        assert_eq!(
            ServiceConfig::from_lookup(lookup(&[("PREFKIT_POOL_DIR", "/img")])),
            Err(ConfigError::MissingLog)
        );
    }
}
