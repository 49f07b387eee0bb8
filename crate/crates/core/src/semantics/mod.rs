//! User-maintained semantic resources: thesauri for synonym expansion and
//! dictionaries for vocabulary filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LakeError, Result};
use crate::indexer::SynonymSource;
use crate::textproc::{normalize_terms, BowVector, Language};

/// A thesaurus. Synonymy is an equivalence: every term maps to the other
/// members of its class, so lookups are symmetric and expansion is
/// idempotent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thesaurus {
    pub id: String,
    pub name: String,
    pub entries: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dictionary {
    pub id: String,
    pub name: String,
    pub terms: BTreeSet<String>,
}

/// Import/export form of a thesaurus: a name and a list of synonym sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThesaurusFile {
    pub name: String,
    pub entries: Vec<Vec<String>>,
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.len() > 64 || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(LakeError::invalid(format!(
            "resource name '{name}' must be 1-64 characters of [A-Za-z0-9_-]"
        )));
    }
    Ok(())
}

/// Groups terms into equivalence classes from a list of synonym pairs.
fn closure(pairs: impl IntoIterator<Item = (String, String)>) -> BTreeMap<String, BTreeSet<String>> {
    let mut class_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut classes: Vec<BTreeSet<String>> = Vec::new();
    for (a, b) in pairs {
        let ca = class_of.get(&a).copied();
        let cb = class_of.get(&b).copied();
        let target = match (ca, cb) {
            (Some(x), Some(y)) if x == y => continue,
            (Some(x), Some(y)) => {
                let moved = std::mem::take(&mut classes[y]);
                for t in &moved {
                    class_of.insert(t.clone(), x);
                }
                classes[x].extend(moved);
                continue;
            }
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => {
                classes.push(BTreeSet::new());
                classes.len() - 1
            }
        };
        for t in [a, b] {
            class_of.insert(t.clone(), target);
            classes[target].insert(t);
        }
    }
    class_of
        .iter()
        .map(|(t, c)| {
            let mut others = classes[*c].clone();
            others.remove(t);
            (t.clone(), others)
        })
        .filter(|(_, s)| !s.is_empty())
        .collect()
}

impl Thesaurus {
    pub fn lookup(&self, term: &str) -> BTreeSet<String> {
        self.entries.get(term).cloned().unwrap_or_default()
    }

    /// Each term together with its synonyms. Original terms are kept.
    pub fn expand<S: AsRef<str>>(&self, terms: &[S]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in terms {
            out.insert(t.as_ref().to_string());
            out.extend(self.lookup(t.as_ref()));
        }
        out
    }

    pub fn to_file(&self) -> ThesaurusFile {
        let mut seen = BTreeSet::new();
        let mut entries = Vec::new();
        for (t, syn) in &self.entries {
            if seen.contains(t) {
                continue;
            }
            let mut class: Vec<String> = syn.iter().cloned().collect();
            class.push(t.clone());
            class.sort();
            seen.extend(class.iter().cloned());
            entries.push(class);
        }
        ThesaurusFile {
            name: self.name.clone(),
            entries,
        }
    }
}

impl SynonymSource for Thesaurus {
    fn synonyms(&self, term: &str) -> BTreeSet<String> {
        self.lookup(term)
    }
}

/// Synonyms from several thesauri at once.
pub struct AllThesauri<'a>(pub Vec<&'a Thesaurus>);

impl SynonymSource for AllThesauri<'_> {
    fn synonyms(&self, term: &str) -> BTreeSet<String> {
        // a fixpoint across resources keeps expansion idempotent
        let mut out = BTreeSet::from([term.to_string()]);
        loop {
            let next: BTreeSet<String> = out
                .iter()
                .flat_map(|t| self.0.iter().flat_map(move |th| th.lookup(t)))
                .chain(out.iter().cloned())
                .collect();
            if next.len() == out.len() {
                break;
            }
            out = next;
        }
        out.remove(term);
        out
    }
}

impl Dictionary {
    /// Keeps only dictionary terms.
    pub fn filter(&self, bow: &BowVector) -> BowVector {
        bow.restricted(|t| self.terms.contains(t))
    }
}

/// Semantic resources stored as JSON under `<lake>/_semantics/`.
#[derive(Debug, Default)]
pub struct SemanticStore {
    root: PathBuf,
    thesauri: BTreeMap<String, Thesaurus>,
    dictionaries: BTreeMap<String, Dictionary>,
}

fn load_dir<T: for<'de> Deserialize<'de>>(dir: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    if !dir.exists() {
        return Ok(out);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .at(dir)?
        .map(|e| e.map(|e| e.path()).at(dir))
        .collect::<Result<_>>()?;
    paths.sort();
    for p in paths {
        if p.extension().and_then(|e| e.to_str()) == Some("json") {
            let text = fs::read_to_string(&p).at(&p)?;
            out.push(serde_json::from_str(&text).map_err(|e| LakeError::corrupt(&p, e.to_string()))?);
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let dir = path.parent().expect("resource path has a parent");
    fs::create_dir_all(dir).at(dir)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(value)?).at(&tmp)?;
    fs::rename(&tmp, path).at(path)
}

impl SemanticStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let thesauri = load_dir::<Thesaurus>(&root.join("thesauri"))?
            .into_iter()
            .map(|t| (t.id.clone(), t))
            .collect();
        let dictionaries = load_dir::<Dictionary>(&root.join("dictionaries"))?
            .into_iter()
            .map(|d| (d.id.clone(), d))
            .collect();
        Ok(SemanticStore {
            root,
            thesauri,
            dictionaries,
        })
    }

    /// Creates or extends a thesaurus. Entries map a term to its synonyms;
    /// all terms are normalized, merged with the existing content and
    /// closed under synonymy.
    pub fn upsert_thesaurus(
        &mut self,
        name: &str,
        entries: &BTreeMap<String, Vec<String>>,
        language: Language,
    ) -> Result<String> {
        check_name(name)?;
        let mut pairs = Vec::new();
        for (term, syns) in entries {
            let normalized = normalize_terms(&[term], language);
            let [head] = normalized.as_slice() else {
                return Err(LakeError::invalid(format!(
                    "thesaurus term '{term}' must normalize to exactly one term"
                )));
            };
            let head = head.clone();
            for s in syns {
                for n in normalize_terms(&[s], language) {
                    if n != head {
                        pairs.push((head.clone(), n));
                    }
                }
            }
        }
        let id = name.to_string();
        if let Some(old) = self.thesauri.get(&id) {
            for (t, syn) in &old.entries {
                pairs.extend(syn.iter().map(|s| (t.clone(), s.clone())));
            }
        }
        let th = Thesaurus {
            id: id.clone(),
            name: name.to_string(),
            entries: closure(pairs),
        };
        if self.thesauri.get(&id) != Some(&th) {
            write_json(&self.root.join("thesauri").join(format!("{id}.json")), &th)?;
            self.thesauri.insert(id.clone(), th);
        }
        Ok(id)
    }

    pub fn import_thesaurus(&mut self, file: &ThesaurusFile, language: Language) -> Result<String> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for class in &file.entries {
            if let Some((head, rest)) = class.split_first() {
                entries.entry(head.clone()).or_default().extend(rest.iter().cloned());
            }
        }
        self.upsert_thesaurus(&file.name, &entries, language)
    }

    pub fn thesaurus(&self, id: &str) -> Result<&Thesaurus> {
        self.thesauri
            .get(id)
            .ok_or_else(|| LakeError::not_found("thesaurus", id))
    }

    pub fn thesauri(&self) -> impl Iterator<Item = &Thesaurus> {
        self.thesauri.values()
    }

    pub fn delete_thesaurus(&mut self, id: &str) -> Result<()> {
        self.thesauri
            .remove(id)
            .ok_or_else(|| LakeError::not_found("thesaurus", id))?;
        let path = self.root.join("thesauri").join(format!("{id}.json"));
        fs::remove_file(&path).at(&path)
    }

    /// Normalizes `terms` and expands them with one thesaurus.
    pub fn expand_with_synonyms<S: AsRef<str>>(
        &self,
        terms: &[S],
        thesaurus: &str,
        language: Language,
    ) -> Result<BTreeSet<String>> {
        let th = self.thesaurus(thesaurus)?;
        Ok(th.expand(&normalize_terms(terms, language)))
    }

    /// Synonym source for a query: one thesaurus, or all of them.
    pub fn synonym_source(&self, thesaurus: Option<&str>) -> Result<AllThesauri<'_>> {
        Ok(match thesaurus {
            Some(id) => AllThesauri(vec![self.thesaurus(id)?]),
            None => AllThesauri(self.thesauri.values().collect()),
        })
    }

    /// Creates or replaces a dictionary.
    pub fn upsert_dictionary<S: AsRef<str>>(&mut self, name: &str, terms: &[S], language: Language) -> Result<String> {
        check_name(name)?;
        let terms: BTreeSet<String> = normalize_terms(terms, language).into_iter().collect();
        if terms.is_empty() {
            return Err(LakeError::invalid("dictionary needs at least one non-stopword term"));
        }
        let dict = Dictionary {
            id: name.to_string(),
            name: name.to_string(),
            terms,
        };
        if self.dictionaries.get(name) != Some(&dict) {
            write_json(&self.root.join("dictionaries").join(format!("{name}.json")), &dict)?;
            self.dictionaries.insert(name.to_string(), dict);
        }
        Ok(name.to_string())
    }

    pub fn dictionary(&self, id: &str) -> Result<&Dictionary> {
        self.dictionaries
            .get(id)
            .ok_or_else(|| LakeError::not_found("dictionary", id))
    }

    pub fn dictionaries(&self) -> impl Iterator<Item = &Dictionary> {
        self.dictionaries.values()
    }

    pub fn delete_dictionary(&mut self, id: &str) -> Result<()> {
        self.dictionaries
            .remove(id)
            .ok_or_else(|| LakeError::not_found("dictionary", id))?;
        let path = self.root.join("dictionaries").join(format!("{id}.json"));
        fs::remove_file(&path).at(&path)
    }

    pub fn filter_by_dictionary(&self, bow: &BowVector, dictionary: &str) -> Result<BowVector> {
        Ok(self.dictionary(dictionary)?.filter(bow))
    }
}
