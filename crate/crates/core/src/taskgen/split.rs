use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;

/// File-level partition of a corpus. Whole held-out projects go to
/// `unseen_test`; the remaining files are shuffled and cut 60/5/35.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
    pub unseen_test: Vec<String>,
}

/// Project of a corpus-relative file path: its first path component.
pub fn project_of(file: &str) -> &str {
    file.split('/').next().unwrap_or(file)
}

pub fn split_corpus(files: &[String], seed: u64, unseen_fraction: f64) -> Result<CorpusSplit, TaskError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let projects: Vec<&str> = files.iter().map(|f| project_of(f)).collect::<BTreeSet<_>>().into_iter().collect();
    let mut order = projects.clone();
    order.shuffle(&mut rng);
    let n_unseen = (unseen_fraction.clamp(0.0, 1.0) * projects.len() as f64).round() as usize;
    let held: BTreeSet<&str> = order.into_iter().take(n_unseen).collect();

    let mut split = CorpusSplit::default();
    let mut rest: Vec<String> = Vec::new();
    for f in files {
        if held.contains(project_of(f)) {
            split.unseen_test.push(f.clone());
        } else {
            rest.push(f.clone());
        }
    }
    rest.sort();
    rest.shuffle(&mut rng);
    let n = rest.len();
    let n_train = (0.60 * n as f64).round() as usize;
    let n_valid = (0.05 * n as f64).round() as usize;
    split.train = rest[..n_train].to_vec();
    split.valid = rest[n_train..n_train + n_valid].to_vec();
    split.test = rest[n_train + n_valid..].to_vec();
    for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
        if part.is_empty() {
            return Err(TaskError::InsufficientData(format!("{name} partition would be empty ({} files)", files.len())));
        }
    }
    if n_unseen > 0 && split.unseen_test.is_empty() {
        return Err(TaskError::InsufficientData("unseen-project partition would be empty".into()));
    }
    split.unseen_test.sort();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn files(projects: usize, per: usize) -> Vec<String> {
        (0..projects).flat_map(|p| (0..per).map(move |f| format!("p{p:02}/f{f:03}.ml0"))).collect()
    }

    #[test]
    fn ratio_arithmetic() {
        let s = split_corpus(&files(1, 100), 7, 0.0).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len(), s.unseen_test.len()), (60, 5, 35, 0));
    }

    #[test]
    fn everything_held_out_is_insufficient() {
        assert!(matches!(split_corpus(&files(1, 10), 1, 1.0), Err(TaskError::InsufficientData(_))));
    }

    #[test]
    fn deterministic_and_disjoint() {
        let f = files(5, 30);
        let a = split_corpus(&f, 3, 0.2).unwrap();
        assert_eq!(a, split_corpus(&f, 3, 0.2).unwrap());
        let all: Vec<&String> = a.train.iter().chain(&a.valid).chain(&a.test).chain(&a.unseen_test).collect();
        let set: BTreeSet<&String> = all.iter().copied().collect();
        assert_eq!(all.len(), f.len());
        assert_eq!(set.len(), f.len());
        let unseen: BTreeSet<&str> = a.unseen_test.iter().map(|f| project_of(f)).collect();
        assert_eq!(unseen.len(), 1);
        assert!(a.train.iter().all(|f| !unseen.contains(project_of(f))));
    }
}
