// SPDX-License-Identifier: Apache-2.0

//! Collection files on disk: `{data_dir}/{collection}.vec`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pirscope_core::Collection;

use crate::error::{Error, Result};

pub const COLLECTION_EXTENSION: &str = "vec";

/// Writes `collection` to `path` atomically (temp file, then rename).
pub fn persist(collection: &Collection, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    let tmp = path.with_extension(format!("{COLLECTION_EXTENSION}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(Error::io(&tmp))?;
    file.write_all(&collection.encode()).map_err(Error::io(&tmp))?;
    file.sync_all().map_err(Error::io(&tmp))?;
    drop(file);
    fs::rename(&tmp, path).map_err(Error::io(path))
}

/// Reads a collection file; the collection is named after the file stem.
pub fn load(path: &Path) -> Result<Collection> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    Collection::decode(name, &bytes).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn collection_path(&self, name: &str) -> PathBuf {
        self.root.join(format!("{name}.{COLLECTION_EXTENSION}"))
    }

    pub fn exists(&self, name: &str) -> bool {
        self.collection_path(name).is_file()
    }

    pub fn load(&self, name: &str) -> Result<Collection> {
        let path = self.collection_path(name);
        if !path.is_file() {
            return Err(Error::MissingCollection {
                name: name.to_string(),
                path,
            });
        }
        load(&path)
    }

    /// Loads `name`, or starts an empty collection of dimension `dim`.
    pub fn load_or_create(&self, name: &str, dim: usize) -> Result<Collection> {
        if self.exists(name) {
            self.load(name)
        } else {
            Ok(Collection::new(name, dim)?)
        }
    }

    pub fn persist(&self, collection: &Collection) -> Result<PathBuf> {
        let path = self.collection_path(collection.name());
        persist(collection, &path)?;
        Ok(path)
    }
}
