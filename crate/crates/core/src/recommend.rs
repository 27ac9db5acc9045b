//! Popularity-based node suggestions over a repository of `.tsg` files.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{inferred_views, Tsg};
use crate::lang::{parse_document, TsgDocument};
use crate::nodes::VIEW_CLASS;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedFile {
    pub path: PathBuf,
    pub ok: bool,
    /// sha256 of the file contents, hex encoded; empty when unreadable.
    pub hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositoryIndex {
    pub counts: BTreeMap<String, u64>,
    pub files: Vec<IndexedFile>,
}

/// Class occurrences of one document: every declaration (named, anonymous
/// or inline) plus one View per distinct undeclared right-hand name.
pub fn class_occurrences(doc: &TsgDocument) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for d in doc.decls() {
        *counts.entry(d.class.clone()).or_insert(0) += 1;
    }
    let views = inferred_views(doc).len() as u64;
    if views > 0 {
        *counts.entry(VIEW_CLASS.to_string()).or_insert(0) += views;
    }
    counts
}

fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Per-file results keyed by content hash.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexCache {
    pub entries: BTreeMap<String, CachedFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedFile {
    pub ok: bool,
    pub counts: BTreeMap<String, u64>,
}

impl IndexCache {
    pub fn load(path: &Path) -> IndexCache {
        fs::read_to_string(path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(path, text)
    }
}

/// Parses every file; unreadable or unparseable files are flagged and
/// contribute nothing.
pub fn index_repository<P: AsRef<Path>>(paths: &[P]) -> RepositoryIndex {
    index_with_cache(paths, &mut IndexCache::default())
}

/// Like [`index_repository`], reusing and filling `cache`.
pub fn index_with_cache<P: AsRef<Path>>(paths: &[P], cache: &mut IndexCache) -> RepositoryIndex {
    let mut index = RepositoryIndex::default();
    for p in paths {
        let path = p.as_ref().to_path_buf();
        let Ok(bytes) = fs::read(&path) else {
            index.files.push(IndexedFile { path, ok: false, hash: String::new() });
            continue;
        };
        let hash = content_hash(&bytes);
        let entry = cache.entries.entry(hash.clone()).or_insert_with(|| {
            let parsed = std::str::from_utf8(&bytes)
                .ok()
                .and_then(|text| parse_document(text, &path.display().to_string()).ok());
            match parsed {
                Some(doc) => CachedFile { ok: true, counts: class_occurrences(&doc) },
                None => CachedFile { ok: false, counts: BTreeMap::new() },
            }
        });
        for (class, n) in &entry.counts {
            *index.counts.entry(class.clone()).or_insert(0) += n;
        }
        index.files.push(IndexedFile { path, ok: entry.ok, hash });
    }
    index
}

/// Every `.tsg` file under `dir`, in path order.
pub fn repository_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "tsg"))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    files
}

pub fn index_directory(dir: &Path) -> RepositoryIndex {
    index_repository(&repository_files(dir))
}

/// A source of node suggestions.
pub trait Recommender: Send + Sync {
    fn name(&self) -> &str;
    fn recommend(&self, current: &BTreeSet<String>, k: usize) -> Vec<(String, u64)>;
}

/// Most-used classes first.
pub struct Popularity {
    pub index: RepositoryIndex,
}

impl Recommender for Popularity {
    fn name(&self) -> &str {
        "popularity"
    }

    fn recommend(&self, current: &BTreeSet<String>, k: usize) -> Vec<(String, u64)> {
        let mut ranked: Vec<(String, u64)> = self
            .index
            .counts
            .iter()
            .filter(|(c, n)| **n > 0 && !current.contains(*c))
            .map(|(c, n)| (c.clone(), *n))
            .collect();
        // Counts descending; the map already yields names in order.
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }
}

/// Classes instantiated in `tsg`.
pub fn current_classes(tsg: &Tsg) -> BTreeSet<String> {
    tsg.nodes.values().map(|n| n.class.clone()).collect()
}

pub fn recommend_nodes(index: &RepositoryIndex, current: &Tsg, k: usize) -> Vec<(String, u64)> {
    Popularity { index: index.clone() }.recommend(&current_classes(current), k)
}

/// Registered recommenders by name.
#[derive(Default)]
pub struct RecommenderSet {
    items: HashMap<String, Box<dyn Recommender>>,
}

impl RecommenderSet {
    pub fn register(&mut self, r: Box<dyn Recommender>) {
        self.items.insert(r.name().to_string(), r);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Recommender> {
        self.items.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.items.keys().map(String::as_str).collect();
        v.sort();
        v
    }
}
