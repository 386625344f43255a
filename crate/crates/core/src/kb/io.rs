//! Readers and writers for the on-disk dataset formats.
//!
//! Entities and terms are JSON Lines; triples, hierarchy pairs and links are
//! headerless tab-separated columns. Blank lines and lines starting with `#`
//! are skipped everywhere.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{AlignmentSet, Entity, Hierarchy, KnowledgeGraph, RelationTriple, Term};
use crate::error::{Error, Result};

/// Locations of the five dataset files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub entities: PathBuf,
    pub triples: PathBuf,
    pub terms: PathBuf,
    pub pairs: PathBuf,
    pub links: PathBuf,
}

impl DatasetPaths {
    /// Conventional file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            entities: dir.join("entities.jsonl"),
            triples: dir.join("triples.tsv"),
            terms: dir.join("terms.jsonl"),
            pairs: dir.join("pairs.tsv"),
            links: dir.join("links.tsv"),
        }
    }
}

/// Knowledge graph, hierarchy and raw gold links loaded together.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kg: KnowledgeGraph,
    pub hierarchy: Hierarchy,
    pub links: Vec<(String, String)>,
}

impl Dataset {
    pub fn load(paths: &DatasetPaths) -> Result<Self> {
        let kg = load_kg(&paths.entities, &paths.triples)?;
        let hierarchy = load_hierarchy(&paths.terms, &paths.pairs)?;
        let links = load_link_pairs(&paths.links)?;
        // validates the one-to-one rule and references
        AlignmentSet::new(links.clone(), 0)?.validate_against(&kg, &hierarchy)?;
        Ok(Dataset { kg, hierarchy, links })
    }

    pub fn write(&self, paths: &DatasetPaths) -> Result<()> {
        for p in [
            &paths.entities,
            &paths.triples,
            &paths.terms,
            &paths.pairs,
            &paths.links,
        ] {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        write_entities(&paths.entities, &self.kg)?;
        write_triples(&paths.triples, &self.kg)?;
        write_terms(&paths.terms, &self.hierarchy)?;
        write_pairs(&paths.pairs, &self.hierarchy)?;
        write_links(&paths.links, self.links.iter().map(|(e, t)| (e.as_str(), t.as_str())))
    }

    /// Alignment split with the first `shots` links (by entity id) as
    /// demonstrations.
    pub fn alignment(&self, shots: usize) -> Result<AlignmentSet> {
        AlignmentSet::new(self.links.clone(), shots)
    }
}

/// Non-comment lines with their 1-based line numbers.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r')))
        .filter(|(_, line)| !line.trim().is_empty() && !line.starts_with('#'))
        .map(|(n, line)| (n, line.to_string()))
        .collect())
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    data_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            serde_json::from_str(&line)
                .map(|record| (n, record))
                .map_err(|e| parse_error(path, n, e.to_string()))
        })
        .collect()
}

fn read_tsv<const N: usize>(path: &Path) -> Result<Vec<(usize, [String; N])>> {
    data_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let cols: Vec<String> = line.split('\t').map(|c| c.trim().to_string()).collect();
            let cols: [String; N] = cols.try_into().map_err(|cols: Vec<String>| {
                parse_error(
                    path,
                    n,
                    format!("expected {N} tab-separated columns, found {}", cols.len()),
                )
            })?;
            if let Some(i) = cols.iter().position(String::is_empty) {
                return Err(parse_error(path, n, format!("column {} is empty", i + 1)));
            }
            Ok((n, cols))
        })
        .collect()
}

pub fn load_kg(entity_file: impl AsRef<Path>, triple_file: impl AsRef<Path>) -> Result<KnowledgeGraph> {
    let entity_file = entity_file.as_ref();
    let triple_file = triple_file.as_ref();
    let mut ids = HashSet::new();
    let mut entities = Vec::new();
    for (n, entity) in read_jsonl::<Entity>(entity_file)? {
        let entity = entity
            .normalized()
            .map_err(|e| parse_error(entity_file, n, e.to_string()))?;
        if !ids.insert(entity.id.clone()) {
            return Err(parse_error(
                entity_file,
                n,
                format!("duplicate entity id {:?}", entity.id),
            ));
        }
        entities.push(entity);
    }
    let mut triples = Vec::new();
    for (n, [head, relation, tail]) in read_tsv::<3>(triple_file)? {
        for id in [&head, &tail] {
            if !ids.contains(id) {
                return Err(Error::DanglingReference {
                    path: triple_file.to_path_buf(),
                    line: n,
                    id: id.clone(),
                });
            }
        }
        triples.push(RelationTriple { head, relation, tail });
    }
    KnowledgeGraph::new(entities, triples)
}

pub fn load_hierarchy(term_file: impl AsRef<Path>, pair_file: impl AsRef<Path>) -> Result<Hierarchy> {
    let term_file = term_file.as_ref();
    let pair_file = pair_file.as_ref();
    let mut ids = HashSet::new();
    let mut terms = Vec::new();
    for (n, term) in read_jsonl::<Term>(term_file)? {
        if term.name.trim().is_empty() {
            return Err(parse_error(
                term_file,
                n,
                format!("term {:?} has an empty name", term.id),
            ));
        }
        if !ids.insert(term.id.clone()) {
            return Err(parse_error(term_file, n, format!("duplicate term id {:?}", term.id)));
        }
        terms.push(term);
    }
    let mut pairs = Vec::new();
    for (n, [hyper, hypo]) in read_tsv::<2>(pair_file)? {
        for id in [&hyper, &hypo] {
            if !ids.contains(id) {
                return Err(Error::DanglingReference {
                    path: pair_file.to_path_buf(),
                    line: n,
                    id: id.clone(),
                });
            }
        }
        pairs.push((hyper, hypo));
    }
    Hierarchy::new(terms, pairs)
}

/// Raw (entity id, term id) rows of a link file, in file order.
pub fn load_link_pairs(link_file: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    Ok(read_tsv::<2>(link_file.as_ref())?
        .into_iter()
        .map(|(_, [e, t])| (e, t))
        .collect())
}

pub fn load_links(link_file: impl AsRef<Path>, shots: usize) -> Result<AlignmentSet> {
    AlignmentSet::new(load_link_pairs(link_file)?, shots)
}

fn write_with(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    write_with(path, |out| {
        for item in items {
            serde_json::to_writer(&mut *out, item)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn write_entities(path: impl AsRef<Path>, kg: &KnowledgeGraph) -> Result<()> {
    write_jsonl(path.as_ref(), kg.entities())
}

pub fn write_triples(path: impl AsRef<Path>, kg: &KnowledgeGraph) -> Result<()> {
    write_with(path.as_ref(), |out| {
        for t in kg.triples() {
            writeln!(out, "{}\t{}\t{}", t.head, t.relation, t.tail)?;
        }
        Ok(())
    })
}

pub fn write_terms(path: impl AsRef<Path>, h: &Hierarchy) -> Result<()> {
    write_jsonl(path.as_ref(), h.terms())
}

pub fn write_pairs(path: impl AsRef<Path>, h: &Hierarchy) -> Result<()> {
    write_with(path.as_ref(), |out| {
        for (a, b) in h.pairs() {
            writeln!(out, "{a}\t{b}")?;
        }
        Ok(())
    })
}

pub fn write_links<'a>(path: impl AsRef<Path>, links: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
    write_with(path.as_ref(), |out| {
        for (e, t) in links {
            writeln!(out, "{e}\t{t}")?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn load_minimal_kg_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(
            dir.path(),
            "e.jsonl",
            "# entities\n{\"id\":\"e1\",\"name\":\"aspirin\",\"synonyms\":[],\"definition\":null,\"types\":[\"drug\"]}\n\n{\"id\":\"e2\",\"name\":\"fever\",\"types\":[\"disease\"]}\n",
        );
        let t = write(dir.path(), "t.tsv", "# head rel tail\ne1\ttreats\te2\n");
        let kg = load_kg(&e, &t).unwrap();
        assert_eq!(kg.len(), 2);
        assert_eq!(kg.triples().len(), 1);
        assert_eq!(kg.count_typed("Disease"), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.jsonl", "{\"id\":\"e1\",\"name\":\"a\"}\n{not json\n");
        let t = write(dir.path(), "t.tsv", "");
        match load_kg(&e, &t).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }

        let e = write(dir.path(), "e.jsonl", "{\"id\":\"e1\",\"name\":\"a\"}\n");
        let t = write(dir.path(), "t.tsv", "e1\ttreats\n");
        assert!(matches!(load_kg(&e, &t), Err(Error::Parse { line: 1, .. })));

        let t = write(dir.path(), "t.tsv", "#\ne1\ttreats\tX\n");
        match load_kg(&e, &t).unwrap_err() {
            Error::DanglingReference { line, id, .. } => {
                assert_eq!((line, id.as_str()), (2, "X"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn duplicate_entity_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(
            dir.path(),
            "e.jsonl",
            "{\"id\":\"e1\",\"name\":\"a\"}\n{\"id\":\"e1\",\"name\":\"b\"}\n",
        );
        let t = write(dir.path(), "t.tsv", "");
        assert!(matches!(load_kg(&e, &t), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn hierarchy_files() {
        let dir = tempfile::tempdir().unwrap();
        let terms = write(
            dir.path(),
            "terms.jsonl",
            "{\"id\":\"a\",\"name\":\"disease\"}\n{\"id\":\"b\",\"name\":\"typhus\"}\n{\"id\":\"c\",\"name\":\"epidemic typhus\"}\n",
        );
        let pairs = write(dir.path(), "pairs.tsv", "a\tb\nb\tc\n");
        let h = load_hierarchy(&terms, &pairs).unwrap();
        assert_eq!(h.depth("c").unwrap(), 3);

        let pairs = write(dir.path(), "pairs.tsv", "a\tb\nb\ta\n");
        assert!(matches!(load_hierarchy(&terms, &pairs), Err(Error::Cycle(_))));

        let pairs = write(dir.path(), "pairs.tsv", "a\tb\nb\tq\n");
        assert!(matches!(
            load_hierarchy(&terms, &pairs),
            Err(Error::DanglingReference { line: 2, .. })
        ));
    }

    #[test]
    fn link_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "links.tsv", "e2\tt2\ne1\tt1\n");
        let set = load_links(&p, 1).unwrap();
        assert_eq!(set.demonstrations().next().unwrap().entity, "e1");
        let p = write(dir.path(), "links.tsv", "e1\tt1\ne2\tt1\n");
        assert!(matches!(load_links(&p, 0), Err(Error::OneToOne(_))));
    }
}
