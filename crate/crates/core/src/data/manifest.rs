//! Dataset manifests.
//!
//! Text format, one record per line, tab-separated, `#` starts a comment:
//!
//! ```text
//! # midstream-hash manifest v1
//! dataset   <dataset id>
//! class     <class id>  <name>
//! video     <video id>  <class id>  <split>  <path relative to the manifest>
//! ```
//!
//! `<split>` is one of `train`, `codebook`, `query`, `unassigned`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{read_features, FeatureSequence};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Codebook,
    Query,
    Unassigned,
}

/// Order of the ratios passed to [`split`].
pub const SPLIT_ORDER: [Split; 3] = [Split::Train, Split::Codebook, Split::Query];

/// Train / codebook / query proportions of the reference benchmark.
pub const DEFAULT_SPLIT: [f64; 3] = [0.5, 0.45, 0.05];

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Codebook => "codebook",
            Split::Query => "query",
            Split::Unassigned => "unassigned",
        })
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "codebook" => Ok(Split::Codebook),
            "query" => Ok(Split::Query),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub video_id: u64,
    pub class_id: u32,
    pub split: Split,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub classes: BTreeMap<u32, String>,
    pub videos: Vec<ManifestEntry>,
    /// Directory feature paths are resolved against. Not serialized.
    pub root: PathBuf,
}

const HEADER: &str = "# midstream-hash manifest v1";

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\ndataset\t{}\n", self.dataset_id);
        for (id, name) in &self.classes {
            out.push_str(&format!("class\t{id}\t{name}\n"));
        }
        for v in &self.videos {
            out.push_str(&format!(
                "video\t{}\t{}\t{}\t{}\n",
                v.video_id,
                v.class_id,
                v.split,
                v.path.display()
            ));
        }
        out
    }

    pub fn parse(text: &str, root: PathBuf, path_for_errors: &Path) -> Result<Self> {
        let mut m = DatasetManifest {
            dataset_id: String::new(),
            classes: BTreeMap::new(),
            videos: Vec::new(),
            root,
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad =
                |msg: &str| Error::format(path_for_errors, format!("line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["dataset", id] => m.dataset_id = id.to_string(),
                ["class", id, name] => {
                    let id = id.parse().map_err(|_| bad("bad class id"))?;
                    m.classes.insert(id, name.to_string());
                }
                ["video", vid, class, split, path] => m.videos.push(ManifestEntry {
                    video_id: vid.parse().map_err(|_| bad("bad video id"))?,
                    class_id: class.parse().map_err(|_| bad("bad class id"))?,
                    split: split.parse().map_err(|e: String| bad(&e))?,
                    path: PathBuf::from(path),
                }),
                _ => return Err(bad("unrecognized record")),
            }
        }
        m.validate()
            .map_err(|e| Error::format(path_for_errors, e.to_string()))?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Checks unique ids, known classes, and that every query class has at
    /// least one codebook video.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for v in &self.videos {
            ensure!(
                seen.insert(v.video_id),
                InvalidInput,
                "duplicate video id {}",
                v.video_id
            );
            ensure!(
                self.classes.contains_key(&v.class_id),
                InvalidInput,
                "video {} has unknown class {}",
                v.video_id,
                v.class_id
            );
        }
        let codebook: BTreeSet<u32> = self.entries(Split::Codebook).map(|v| v.class_id).collect();
        for q in self.entries(Split::Query) {
            ensure!(
                codebook.contains(&q.class_id),
                InvalidInput,
                "query class {} has no codebook videos",
                q.class_id
            );
        }
        Ok(())
    }

    pub fn entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> + '_ {
        self.videos.iter().filter(move |v| v.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries(split).count()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Reads every feature file of a split, in manifest order.
    pub fn load_split(&self, split: Split) -> Result<Vec<FeatureSequence>> {
        self.entries(split)
            .map(|e| {
                let path = self.resolve(e);
                let seq = read_features(&path, e.video_id)?;
                if seq.class_id != e.class_id {
                    return Err(Error::format(
                        &path,
                        format!("class {} in file, {} in manifest", seq.class_id, e.class_id),
                    ));
                }
                Ok(seq)
            })
            .collect()
    }
}

/// Stratified split into train / codebook / query with the given ratios.
///
/// Every class receives `floor(ratio·n_c)` or one more videos per split; the
/// leftovers are placed so global split sizes match the ratios as closely as
/// possible. Deterministic under `seed`.
pub fn split(manifest: &DatasetManifest, ratios: [f64; 3], seed: u64) -> Result<DatasetManifest> {
    ensure!(
        ratios.iter().all(|r| r.is_finite() && *r >= 0.0)
            && (ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9,
        InvalidInput,
        "split ratios {ratios:?} must be nonnegative and sum to 1"
    );
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, v) in manifest.videos.iter().enumerate() {
        by_class.entry(v.class_id).or_default().push(i);
    }
    let required = ratios.iter().filter(|r| **r > 0.0).count();
    for (class, members) in &by_class {
        ensure!(
            members.len() >= required,
            InvalidInput,
            "class {class} has {} videos but the split needs at least {required}",
            members.len()
        );
    }

    let total = manifest.videos.len();
    let targets = largest_remainder(total, &ratios);

    // floor quotas, then leftovers handed to the splits with the largest
    // remaining global demand, one per split per class.
    let mut alloc: BTreeMap<u32, [usize; 3]> = BTreeMap::new();
    let mut demand = targets;
    let mut leftovers: Vec<(u32, usize)> = Vec::new();
    for (&class, members) in &by_class {
        let n = members.len();
        let mut a = [0usize; 3];
        for s in 0..3 {
            a[s] = (ratios[s] * n as f64 + 1e-9).floor() as usize;
            demand[s] = demand[s].saturating_sub(a[s]);
        }
        leftovers.push((class, n - a.iter().sum::<usize>()));
        alloc.insert(class, a);
    }
    leftovers.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for (class, left) in leftovers {
        let a = alloc.get_mut(&class).unwrap();
        let mut order: Vec<usize> = (0..3).filter(|&s| ratios[s] > 0.0).collect();
        order.sort_by(|&x, &y| demand[y].cmp(&demand[x]).then(x.cmp(&y)));
        for &s in order.iter().cycle().take(left) {
            a[s] += 1;
            demand[s] = demand[s].saturating_sub(1);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = manifest.clone();
    for (class, members) in &by_class {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let a = alloc[class];
        let mut it = shuffled.into_iter();
        for (s, &split) in SPLIT_ORDER.iter().enumerate() {
            for idx in it.by_ref().take(a[s]) {
                out.videos[idx].split = split;
            }
        }
    }
    for (class, a) in &alloc {
        ensure!(
            a[2] == 0 || a[1] > 0,
            InvalidInput,
            "class {class} would have query videos but no codebook videos"
        );
    }
    out.validate()?;
    Ok(out)
}

fn largest_remainder(total: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut counts = [0usize; 3];
    for s in 0..3 {
        counts[s] = (exact[s] + 1e-9).floor() as usize;
    }
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for s in order {
        if rest == 0 {
            break;
        }
        counts[s] += 1;
        rest -= 1;
    }
    counts
}
