use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::minilang::TypedProgram;

pub const UNK_ROW: usize = 0;
pub const PAD_ROW: usize = 1;
pub const PLACEHOLDER_ROW: usize = 2;
pub const UNK_TYPE_ROW: usize = 0;
const RESERVED_LEXEME_ROWS: usize = 3;
const UNK_TYPE: &str = "UnkType";

/// Lexeme and type-name tables. Lexeme row 0 is UNK, 1 PAD and 2
/// PLACEHOLDER; type row 0 is UnkType.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    lexemes: Vec<String>,
    types: Vec<String>,
    lexeme_index: HashMap<String, usize>,
    type_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    lexemes: Vec<String>,
    types: Vec<String>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_lists(r.lexemes, r.types)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr { lexemes: v.lexemes, types: v.types }
    }
}

impl Vocab {
    pub fn from_lists(lexemes: Vec<String>, types: Vec<String>) -> Self {
        let lexeme_index = lexemes.iter().enumerate().map(|(i, s)| (s.clone(), i + RESERVED_LEXEME_ROWS)).collect();
        let type_index = types.iter().enumerate().map(|(i, s)| (s.clone(), i + 1)).collect();
        Vocab { lexemes, types, lexeme_index, type_index }
    }

    /// Lexemes occurring at least `min_count` times and every type name
    /// declared in `programs`. Each distinct file counts once.
    pub fn build<'a>(programs: impl IntoIterator<Item = &'a TypedProgram>, min_count: usize) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut types = std::collections::BTreeSet::new();
        for p in programs {
            if !seen.insert(p.file_id.as_str()) {
                continue;
            }
            for lex in super::lexemes(p) {
                *counts.entry(lex).or_default() += 1;
            }
            for info in p.lattice.infos() {
                if info.name != UNK_TYPE {
                    types.insert(info.name.clone());
                }
            }
        }
        let lexemes = counts.into_iter().filter(|&(_, c)| c >= min_count).map(|(s, _)| s.to_string()).collect();
        Vocab::from_lists(lexemes, types.into_iter().collect())
    }

    pub fn lexeme_rows(&self) -> usize {
        self.lexemes.len() + RESERVED_LEXEME_ROWS
    }

    pub fn type_rows(&self) -> usize {
        self.types.len() + 1
    }

    pub fn lexeme_row(&self, text: &str) -> usize {
        self.lexeme_index.get(text).copied().unwrap_or(UNK_ROW)
    }

    pub fn type_row(&self, name: &str) -> usize {
        self.type_index.get(name).copied().unwrap_or(UNK_TYPE_ROW)
    }

    pub fn lexemes(&self) -> &[String] {
        &self.lexemes
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }
}
