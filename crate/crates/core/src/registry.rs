//! Named backend registries.
//!
//! Every pluggable family in the engine (embedders, rerankers, token
//! counters, generation clients, query dialects) is exposed as a trait
//! object. A [`Registry`] maps a backend name to a factory so the CLI and
//! config files can pick an implementation at runtime.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown {family} backend `{name}` (known: {known})")]
    Unknown {
        family: &'static str,
        name: String,
        known: String,
    },
    #[error("invalid options for {family} backend `{name}`: {detail}")]
    InvalidOptions {
        family: &'static str,
        name: String,
        detail: String,
    },
}

/// Options handed to a backend factory: free-form JSON plus the directory
/// that relative paths inside the options resolve against.
#[derive(Debug, Clone, Default)]
pub struct BackendOptions {
    pub values: Value,
    pub base_dir: PathBuf,
}

impl BackendOptions {
    pub fn new(values: Value, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            values,
            base_dir: base_dir.into(),
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(Value::as_str)
    }

    pub fn resolve_path(&self, relative: &str) -> PathBuf {
        let p = Path::new(relative);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub type Factory<T> = Box<dyn Fn(&BackendOptions) -> Result<Arc<T>, RegistryError> + Send + Sync>;

pub struct Registry<T: ?Sized> {
    family: &'static str,
    factories: BTreeMap<String, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: impl Into<String>, factory: F) -> &mut Self
    where
        F: Fn(&BackendOptions) -> Result<Arc<T>, RegistryError> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Box::new(factory));
        self
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn build(&self, name: &str, options: &BackendOptions) -> Result<Arc<T>, RegistryError> {
        let factory = self.factories.get(name).ok_or_else(|| RegistryError::Unknown {
            family: self.family,
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })?;
        factory(options)
    }

    /// Build with empty options.
    pub fn build_default(&self, name: &str) -> Result<Arc<T>, RegistryError> {
        self.build(name, &BackendOptions::default())
    }
}

impl<T: ?Sized> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("family", &self.family)
            .field("names", &self.factories.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Send + Sync {
        fn greet(&self) -> String;
    }

    struct Fixed(String);

    impl Greeter for Fixed {
        fn greet(&self) -> String {
            self.0.clone()
        }
    }

    #[test]
    fn builds_registered_backend_by_name() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("fixed", |opts| {
            let word = opts.str("word").unwrap_or("hi").to_string();
            Ok(Arc::new(Fixed(word)) as Arc<dyn Greeter>)
        });
        let opts = BackendOptions::new(serde_json::json!({"word": "hello"}), ".");
        assert_eq!(reg.build("fixed", &opts).unwrap().greet(), "hello");
        assert_eq!(reg.build_default("fixed").unwrap().greet(), "hi");
    }

    #[test]
    fn unknown_backend_lists_known_names() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("a", |_| Ok(Arc::new(Fixed("a".into())) as Arc<dyn Greeter>));
        let err = reg.build_default("zzz").err().unwrap();
        assert!(err.to_string().contains("known: a"));
    }
}
