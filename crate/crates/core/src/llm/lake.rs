use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use super::LlmError;

pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snippet {
    pub id: String,
    pub tags: Vec<String>,
    pub text: String,
}

/// Reference snippets with a token index. Tag matches weigh twice as much
/// as body matches.
#[derive(Debug, Clone, Default)]
pub struct CodeLake {
    snippets: Vec<Snippet>,
    tag_index: BTreeMap<String, BTreeSet<usize>>,
    text_index: BTreeMap<String, BTreeSet<usize>>,
}

pub(crate) fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl CodeLake {
    pub fn new(snippets: impl IntoIterator<Item = Snippet>) -> Self {
        let mut lake = CodeLake::default();
        let mut all: Vec<Snippet> = snippets.into_iter().collect();
        all.sort_by(|a, b| a.id.cmp(&b.id));
        for (i, s) in all.iter().enumerate() {
            for t in s.tags.iter().flat_map(|t| tokens(t)) {
                lake.tag_index.entry(t).or_default().insert(i);
            }
            for t in tokens(&s.text) {
                lake.text_index.entry(t).or_default().insert(i);
            }
        }
        lake.snippets = all;
        lake
    }

    /// Parse one snippet file: an optional front-matter block delimited by
    /// `---` lines holding `tags: a, b` (and optionally `id: x`), then the
    /// body. Without an `id:` line the id is `default_id`.
    pub fn parse_snippet(default_id: &str, content: &str) -> Snippet {
        let mut id = default_id.to_string();
        let mut tags = Vec::new();
        let mut body = content;
        let trimmed = content.trim_start_matches('\u{feff}');
        if let Some(rest) = trimmed.strip_prefix("---\n").or_else(|| trimmed.strip_prefix("---\r\n")) {
            if let Some(end) = rest.find("\n---") {
                for line in rest[..end].lines() {
                    if let Some(v) = line.strip_prefix("tags:") {
                        tags = v.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
                    } else if let Some(v) = line.strip_prefix("id:") {
                        id = v.trim().to_string();
                    }
                }
                let after = &rest[end + 4..];
                body = after.strip_prefix("\r\n").or_else(|| after.strip_prefix('\n')).unwrap_or(after);
            }
        }
        Snippet {
            id,
            tags,
            text: body.to_string(),
        }
    }

    /// Every regular file in `dir` (not recursive), ids defaulting to the
    /// file stem.
    pub fn load_dir(dir: &Path) -> Result<Self, LlmError> {
        let err = |e: std::io::Error| LlmError::Lake(format!("{}: {e}", dir.display()));
        let mut snippets = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir).map_err(err)?.collect::<Result<_, _>>().map_err(err)?;
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let path = entry.path();
            if !path.is_file() {
                continue;
            }
            let content = std::fs::read_to_string(&path).map_err(err)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            snippets.push(Self::parse_snippet(stem, &content));
        }
        Ok(Self::new(snippets))
    }

    pub fn snippets(&self) -> &[Snippet] {
        &self.snippets
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    /// Snippets sharing tokens with `query`, best first, ties by id.
    pub fn retrieve(&self, query: &str, k: usize) -> Vec<&Snippet> {
        let mut scores: BTreeMap<usize, usize> = BTreeMap::new();
        for t in tokens(query) {
            for &i in self.tag_index.get(&t).into_iter().flatten() {
                *scores.entry(i).or_default() += 2;
            }
            for &i in self.text_index.get(&t).into_iter().flatten() {
                *scores.entry(i).or_default() += 1;
            }
        }
        let mut ranked: Vec<(usize, usize)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| self.snippets[a.0].id.cmp(&self.snippets[b.0].id)));
        ranked.into_iter().take(k).map(|(i, _)| &self.snippets[i]).collect()
    }
}
