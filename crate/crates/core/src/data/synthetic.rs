//! Labeled synthetic video features.
//!
//! Every class owns a smooth latent trajectory: a constant offset plus a few
//! slow sinusoids in a low-dimensional space, projected to `N_f` dimensions by
//! a projection shared by all classes. The class component ramps up from a
//! weak start, so short prefixes carry less class evidence than full videos.
//! A video samples its class trajectory at a random temporal stretch, adds
//! Gaussian noise, and is padded with class-agnostic distractor clips at the
//! start and end (untrimmed video).

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::manifest::{DatasetManifest, ManifestEntry, Split};
use super::{write_features, FeatureSequence, DEFAULT_CLIP_RATE};
use crate::error::{ensure, Error, Result};

const LATENT_DIM: usize = 8;
const HARMONICS: usize = 3;
const STRETCH: f64 = 0.3;
/// Amplitude of the class component at the first clip.
const RAMP_START: f64 = 0.35;
/// Clips of trajectory time until the class component reaches full amplitude.
const RAMP_CLIPS: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub videos_per_class: usize,
    pub n_f: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    /// Fraction of each video made of distractor clips, in `[0, 1)`.
    pub distractor_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 10,
            videos_per_class: 50,
            n_f: 32,
            min_len: 10,
            max_len: 40,
            noise: 0.1,
            distractor_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.n_classes >= 1 && self.videos_per_class >= 1 && self.n_f >= 1,
            InvalidInput,
            "synthetic counts must be at least 1"
        );
        ensure!(
            self.min_len >= 1 && self.min_len <= self.max_len,
            InvalidInput,
            "length range {}..={} is invalid",
            self.min_len,
            self.max_len
        );
        ensure!(
            self.noise.is_finite() && self.noise >= 0.0,
            InvalidInput,
            "noise must be nonnegative"
        );
        ensure!(
            (0.0..1.0).contains(&self.distractor_fraction),
            InvalidInput,
            "distractor fraction must lie in [0, 1)"
        );
        Ok(())
    }
}

/// How one synthetic video was built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoMeta {
    pub stretch: f64,
    pub prefix_distractors: usize,
    pub suffix_distractors: usize,
}

struct ClassTrajectory {
    offset: Array1<f64>,
    amp: Array2<f64>,
    freq: Array2<f64>,
    phase: Array2<f64>,
}

impl ClassTrajectory {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        Self {
            offset: Array1::from_shape_simple_fn(LATENT_DIM, || normal(rng)),
            amp: Array2::from_shape_simple_fn((LATENT_DIM, HARMONICS), || 0.6 * normal(rng)),
            // cycles per clip of trajectory time
            freq: Array2::from_shape_simple_fn((LATENT_DIM, HARMONICS), || {
                rng.random_range(0.01..0.06)
            }),
            phase: Array2::from_shape_simple_fn((LATENT_DIM, HARMONICS), || {
                rng.random_range(0.0..TAU)
            }),
        }
    }

    fn at(&self, tau: f64) -> Array1<f64> {
        let ramp = (RAMP_START + (1.0 - RAMP_START) * tau / RAMP_CLIPS).min(1.0);
        Array1::from_shape_fn(LATENT_DIM, |d| {
            let wave: f64 = (0..HARMONICS)
                .map(|h| {
                    self.amp[[d, h]] * (TAU * self.freq[[d, h]] * tau + self.phase[[d, h]]).sin()
                })
                .sum();
            ramp * (self.offset[d] + wave)
        })
    }
}

/// Generates the dataset in memory together with per-video metadata.
/// Video ids are `class · videos_per_class + k`.
pub fn synthesize_with_meta(spec: &SyntheticSpec) -> Result<Vec<(FeatureSequence, VideoMeta)>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = 1.0 / (LATENT_DIM as f64).sqrt();
    let projection = Array2::from_shape_simple_fn((spec.n_f, LATENT_DIM), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    });
    let classes: Vec<ClassTrajectory> = (0..spec.n_classes)
        .map(|_| ClassTrajectory::sample(&mut rng))
        .collect();
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut out = Vec::with_capacity(spec.n_classes * spec.videos_per_class);
    for (class_id, traj) in classes.iter().enumerate() {
        for k in 0..spec.videos_per_class {
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let n_distract =
                ((spec.distractor_fraction * len as f64).round() as usize).min(len - 1);
            let prefix = rng.random_range(0..=n_distract);
            let suffix = n_distract - prefix;
            let stretch = rng.random_range(1.0 - STRETCH..=1.0 + STRETCH);

            let mut data = Vec::with_capacity(len * spec.n_f);
            let mut push = |latent: Array1<f64>, rng: &mut ChaCha8Rng| {
                let feat = projection.dot(&latent);
                data.extend(feat.iter().map(|v| (v + noise.sample(rng)) as f32));
            };
            for _ in 0..prefix {
                push(distractor(&mut rng), &mut rng);
            }
            for j in 0..len - n_distract {
                push(traj.at(j as f64 * stretch), &mut rng);
            }
            for _ in 0..suffix {
                push(distractor(&mut rng), &mut rng);
            }

            let video_id = (class_id * spec.videos_per_class + k) as u64;
            let seq =
                FeatureSequence::new(video_id, class_id as u32, DEFAULT_CLIP_RATE, spec.n_f, data)?;
            out.push((
                seq,
                VideoMeta {
                    stretch,
                    prefix_distractors: prefix,
                    suffix_distractors: suffix,
                },
            ));
        }
    }
    Ok(out)
}

fn distractor(rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_simple_fn(LATENT_DIM, || StandardNormal.sample(rng))
}

pub fn synthesize(spec: &SyntheticSpec) -> Result<Vec<FeatureSequence>> {
    Ok(synthesize_with_meta(spec)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

/// Writes `features/<id>.fseq` files and `manifest.txt` under `out_dir`.
/// Every video is left unassigned; see [`super::split`].
pub fn generate_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<DatasetManifest> {
    let videos = synthesize(spec)?;
    let mut manifest = synthetic_manifest(spec, &videos);
    manifest.root = out_dir.to_path_buf();
    for (seq, entry) in videos.iter().zip(&manifest.videos) {
        let path = out_dir.join(&entry.path);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_features(seq, &path)?;
    }
    Ok(manifest)
}

/// Unassigned manifest listing `videos` under `features/`, rooted at `.`.
pub fn synthetic_manifest(spec: &SyntheticSpec, videos: &[FeatureSequence]) -> DatasetManifest {
    DatasetManifest {
        dataset_id: format!(
            "synthetic-c{}-v{}-f{}-s{}",
            spec.n_classes, spec.videos_per_class, spec.n_f, spec.seed
        ),
        classes: (0..spec.n_classes as u32)
            .map(|c| (c, format!("class_{c:02}")))
            .collect::<BTreeMap<_, _>>(),
        videos: videos
            .iter()
            .map(|seq| ManifestEntry {
                video_id: seq.video_id,
                class_id: seq.class_id,
                split: Split::Unassigned,
                path: PathBuf::from("features").join(format!("{:06}.fseq", seq.video_id)),
            })
            .collect(),
        root: PathBuf::from("."),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            n_classes: 3,
            videos_per_class: 4,
            n_f: 8,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let bad = [
            SyntheticSpec {
                n_classes: 0,
                ..small()
            },
            SyntheticSpec {
                min_len: 5,
                max_len: 4,
                ..small()
            },
            SyntheticSpec {
                noise: -1.0,
                ..small()
            },
            SyntheticSpec {
                distractor_fraction: 1.0,
                ..small()
            },
        ];
        for s in bad {
            assert!(synthesize(&s).is_err(), "{s:?}");
        }
    }

    #[test]
    fn shapes_and_labels() {
        let vids = synthesize(&small()).unwrap();
        assert_eq!(vids.len(), 12);
        for v in &vids {
            assert!((10..=40).contains(&v.len()));
            assert_eq!(v.n_f(), 8);
            assert_eq!(v.class_id as u64, v.video_id / 4);
        }
    }

    #[test]
    fn clean_videos_follow_the_class_curve() {
        let spec = SyntheticSpec {
            noise: 0.0,
            distractor_fraction: 0.0,
            ..small()
        };
        let vids = synthesize_with_meta(&spec).unwrap();
        // Same class: identical first clip (trajectory time 0) whatever the stretch.
        let (a, ma) = &vids[0];
        let (b, mb) = &vids[1];
        assert_eq!(a.clip(0), b.clip(0));
        assert_eq!(ma.prefix_distractors + ma.suffix_distractors, 0);
        // With equal stretch, equal-length videos would coincide; distinct
        // stretches sample the same curve at different times.
        assert_ne!(ma.stretch, mb.stretch);
        // Different class: different start.
        assert_ne!(a.clip(0), vids[4].0.clip(0));
    }

    #[test]
    fn deterministic_files() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = generate_synthetic(&small(), d1.path()).unwrap();
        let m2 = generate_synthetic(&small(), d2.path()).unwrap();
        assert_eq!(m1.to_text(), m2.to_text());
        for e in &m1.videos {
            let a = fs::read(d1.path().join(&e.path)).unwrap();
            let b = fs::read(d2.path().join(&e.path)).unwrap();
            assert_eq!(a, b);
        }
        let loaded = m1.load_split(Split::Unassigned).unwrap();
        assert_eq!(loaded, synthesize(&small()).unwrap());
    }

    #[test]
    fn nearest_centroid_separates_classes() {
        let spec = SyntheticSpec {
            noise: 0.1,
            ..SyntheticSpec::default()
        };
        let vids = synthesize(&spec).unwrap();
        let pooled = |v: &FeatureSequence| -> Vec<f64> {
            let mut m = vec![0.0; v.n_f()];
            for c in v.clips() {
                for (a, b) in m.iter_mut().zip(c) {
                    *a += *b as f64 / v.len() as f64;
                }
            }
            m
        };
        // Even-indexed videos fit centroids, odd-indexed ones are classified.
        let mut centroids = vec![vec![0.0; spec.n_f]; spec.n_classes];
        let mut counts = vec![0.0; spec.n_classes];
        for v in vids.iter().filter(|v| v.video_id % 2 == 0) {
            for (a, b) in centroids[v.class_id as usize].iter_mut().zip(pooled(v)) {
                *a += b;
            }
            counts[v.class_id as usize] += 1.0;
        }
        for (c, n) in centroids.iter_mut().zip(&counts) {
            c.iter_mut().for_each(|v| *v /= n);
        }
        let test: Vec<_> = vids.iter().filter(|v| v.video_id % 2 == 1).collect();
        let correct = test
            .iter()
            .filter(|v| {
                let p = pooled(v);
                let best = (0..spec.n_classes)
                    .min_by(|&a, &b| {
                        let da: f64 = centroids[a]
                            .iter()
                            .zip(&p)
                            .map(|(x, y)| (x - y).powi(2))
                            .sum();
                        let db: f64 = centroids[b]
                            .iter()
                            .zip(&p)
                            .map(|(x, y)| (x - y).powi(2))
                            .sum();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                best == v.class_id as usize
            })
            .count();
        let acc = correct as f64 / test.len() as f64;
        assert!(acc > 0.9, "nearest-centroid accuracy {acc}");
    }
}
