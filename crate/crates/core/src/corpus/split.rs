use super::{Corpus, CorpusError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Dev, Partition::Test];
}

/// Program-level partition of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSplit {
    pub train: BTreeSet<String>,
    pub dev: BTreeSet<String>,
    pub test: BTreeSet<String>,
    pub seed: u64,
}

impl CorpusSplit {
    pub fn programs(&self, part: Partition) -> &BTreeSet<String> {
        match part {
            Partition::Train => &self.train,
            Partition::Dev => &self.dev,
            Partition::Test => &self.test,
        }
    }

    fn programs_mut(&mut self, part: Partition) -> &mut BTreeSet<String> {
        match part {
            Partition::Train => &mut self.train,
            Partition::Dev => &mut self.dev,
            Partition::Test => &mut self.test,
        }
    }

    pub fn partition_of(&self, program_id: &str) -> Option<Partition> {
        Partition::ALL
            .into_iter()
            .find(|&p| self.programs(p).contains(program_id))
    }

    /// Pair counts per partition, in train/dev/test order.
    pub fn pair_counts(&self, corpus: &Corpus) -> [usize; 3] {
        let mut counts = [0; 3];
        for program in &corpus.programs {
            if let Some(p) = self.partition_of(&program.program_id) {
                counts[p as usize] += program.pairs.len();
            }
        }
        counts
    }

    /// Checks disjointness and that the split covers exactly the corpus programs.
    pub fn check(&self, corpus: &Corpus) -> Result<(), CorpusError> {
        for (a, b) in [(&self.train, &self.dev), (&self.train, &self.test), (&self.dev, &self.test)] {
            if let Some(id) = a.intersection(b).next() {
                return Err(CorpusError::SplitFile(format!("program `{id}` appears in two partitions")));
            }
        }
        let total = self.train.len() + self.dev.len() + self.test.len();
        for program in &corpus.programs {
            if self.partition_of(&program.program_id).is_none() {
                return Err(CorpusError::SplitFile(format!(
                    "program `{}` is not assigned to any partition",
                    program.program_id
                )));
            }
        }
        if total != corpus.programs.len() {
            let unknown = Partition::ALL
                .into_iter()
                .flat_map(|p| self.programs(p).iter())
                .find(|id| corpus.program(id).is_none())
                .cloned()
                .unwrap_or_default();
            return Err(CorpusError::SplitFile(format!("unknown program `{unknown}`")));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        serde_json::from_str(text).map_err(|e| CorpusError::SplitFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn check_ratios(ratios: [f64; 3]) -> Result<(), CorpusError> {
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(CorpusError::InfeasibleSplit(format!(
            "ratios must all be positive, got {ratios:?}"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(CorpusError::InfeasibleSplit(format!("ratios sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Seeded shuffle within each category, then round-robin across categories
/// so every stratum is spread over the whole ordering.
fn stratified_order<'a>(ids: Vec<(&'a str, Option<&'a str>)>, rng: &mut ChaCha8Rng) -> Vec<&'a str> {
    let mut strata: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, category) in ids {
        strata.entry(category.unwrap_or("")).or_default().push(id);
    }
    let mut groups: Vec<Vec<&str>> = strata
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g.shuffle(rng);
            g
        })
        .collect();
    let mut order = Vec::new();
    let longest = groups.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..longest {
        for g in &mut groups {
            if let Some(id) = g.get(i) {
                order.push(*id);
            }
        }
    }
    order
}

/// Greedy assignment: each program goes to the partition furthest below its
/// pair-count target. Programs are reserved for partitions still empty when
/// the remaining supply runs short.
fn assign(corpus: &Corpus, order: &[&str], targets: [f64; 3], split: &mut CorpusSplit) {
    let mut counts = [0usize; 3];
    for (i, id) in order.iter().enumerate() {
        let size = corpus.program(id).map_or(0, |p| p.pairs.len());
        let remaining = order.len() - i;
        let empty: Vec<usize> = (0..3).filter(|&k| split.programs(Partition::ALL[k]).is_empty()).collect();
        let k = if !empty.is_empty() && remaining <= empty.len() {
            empty[0]
        } else {
            let mut best = 0;
            let mut best_deficit = f64::NEG_INFINITY;
            for k in 0..3 {
                let deficit = targets[k] - counts[k] as f64;
                if deficit > best_deficit + 1e-12 {
                    best = k;
                    best_deficit = deficit;
                }
            }
            best
        };
        counts[k] += size;
        split.programs_mut(Partition::ALL[k]).insert((*id).to_string());
    }
}

/// Partitions whole programs into train/dev/test with pair-level
/// proportions close to `ratios`. Deterministic for a fixed seed.
pub fn split_by_program(corpus: &Corpus, ratios: [f64; 3], seed: u64) -> Result<CorpusSplit, CorpusError> {
    check_ratios(ratios)?;
    if corpus.programs.len() < 3 {
        return Err(CorpusError::InfeasibleSplit(format!(
            "{} programs cannot fill three partitions",
            corpus.programs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = corpus
        .programs
        .iter()
        .map(|p| (p.program_id.as_str(), p.category.as_deref()))
        .collect();
    let order = stratified_order(ids, &mut rng);
    let total = corpus.pair_count() as f64;
    let targets = ratios.map(|r| r * total);
    let mut split = CorpusSplit {
        train: BTreeSet::new(),
        dev: BTreeSet::new(),
        test: BTreeSet::new(),
        seed,
    };
    assign(corpus, &order, targets, &mut split);
    Ok(split)
}

/// Fixes the test partition to `test_ids` and splits the rest into
/// train/dev with the relative weights of `ratios[0]` and `ratios[1]`.
pub fn split_with_test_programs(
    corpus: &Corpus,
    test_ids: &BTreeSet<String>,
    ratios: [f64; 2],
    seed: u64,
) -> Result<CorpusSplit, CorpusError> {
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(CorpusError::InfeasibleSplit(format!(
            "ratios must all be positive, got {ratios:?}"
        )));
    }
    if let Some(id) = test_ids.iter().find(|id| corpus.program(id).is_none()) {
        return Err(CorpusError::InfeasibleSplit(format!("unknown test program `{id}`")));
    }
    let rest: Vec<_> = corpus
        .programs
        .iter()
        .filter(|p| !test_ids.contains(&p.program_id))
        .collect();
    if rest.len() < 2 || test_ids.is_empty() {
        return Err(CorpusError::InfeasibleSplit(
            "need at least one test program and two others".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = stratified_order(
        rest.iter().map(|p| (p.program_id.as_str(), p.category.as_deref())).collect(),
        &mut rng,
    );
    let rest_pairs: usize = rest.iter().map(|p| p.pairs.len()).sum();
    let share = ratios[0] + ratios[1];
    let targets = [
        rest_pairs as f64 * ratios[0] / share,
        rest_pairs as f64 * ratios[1] / share,
        0.0,
    ];
    let mut split = CorpusSplit {
        train: BTreeSet::new(),
        dev: BTreeSet::new(),
        test: test_ids.clone(),
        seed,
    };
    assign(corpus, &order, targets, &mut split);
    Ok(split)
}
