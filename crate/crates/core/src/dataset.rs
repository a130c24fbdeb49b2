//! Trajectory sequence dataset: generation from a labeled grid, the seeded
//! train/validation split and the line-oriented text file format.
//!
//! File layout:
//!
//! ```text
//! thzris-dataset v1 |F|=32 |P|=64 seed=7
//! 0; x,y,z,link,beam_bs,beam_ris; ...   (10 steps)
//! ```
//!
//! `link` is 1 for the direct base-station link and 0 for the RIS-assisted
//! link; a missing beam is written as `-`.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::beams::{LabeledGrid, Link};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::{generate_trajectory, sample_start, StepPolicy};

/// Steps per stored trajectory.
pub const SEQUENCE_LENGTH: usize = 10;

const MAGIC: &str = "thzris-dataset";
const VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub position: Vec3,
    /// `Direct` or `RisAssisted`; outage steps never reach a dataset.
    pub link: Link,
    pub beam_bs: Option<usize>,
    pub beam_ris: Option<usize>,
}

impl Step {
    /// Index into the joint beam vocabulary: BS beams first, RIS beams
    /// offset by `|F|`.
    pub fn serving_beam(&self, n_bs_beams: usize) -> Option<usize> {
        match self.link {
            Link::Direct => self.beam_bs,
            Link::RisAssisted => self.beam_ris.map(|b| n_bs_beams + b),
            Link::Outage => None,
        }
    }

    /// Best beam of the serving node within its own codebook.
    pub fn serving_codebook_beam(&self) -> Option<usize> {
        match self.link {
            Link::Direct => self.beam_bs,
            Link::RisAssisted => self.beam_ris,
            Link::Outage => None,
        }
    }

    /// 1 for direct, 0 for RIS-assisted.
    pub fn link_bit(&self) -> usize {
        usize::from(self.link == Link::Direct)
    }

    fn is_valid(&self, n_bs: usize, n_ris: usize) -> bool {
        let consistent = match self.link {
            Link::Direct => self.beam_bs.is_some(),
            Link::RisAssisted => self.beam_bs.is_none() && self.beam_ris.is_some(),
            Link::Outage => false,
        };
        consistent
            && self.beam_bs.is_none_or(|b| b < n_bs)
            && self.beam_ris.is_none_or(|b| b < n_ris)
            && self.position.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySequence {
    pub seq_id: u64,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_bs_beams: usize,
    pub n_ris_beams: usize,
    pub seed: u64,
    pub sequences: Vec<TrajectorySequence>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.n_bs_beams + self.n_ris_beams
    }

    /// Fraction of all steps served over the RIS.
    pub fn ris_step_fraction(&self) -> f64 {
        let total = self.sequences.len() * SEQUENCE_LENGTH;
        if total == 0 {
            return 0.0;
        }
        let ris = self
            .sequences
            .iter()
            .flat_map(|s| &s.steps)
            .filter(|s| s.link == Link::RisAssisted)
            .count();
        ris as f64 / total as f64
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(
            w,
            "{MAGIC} {VERSION} |F|={} |P|={} seed={}",
            self.n_bs_beams, self.n_ris_beams, self.seed
        )?;
        for seq in &self.sequences {
            write!(w, "{}", seq.seq_id)?;
            for s in &seq.steps {
                write!(
                    w,
                    "; {},{},{},{},{},{}",
                    s.position.x,
                    s.position.y,
                    s.position.z,
                    s.link_bit(),
                    beam_str(s.beam_bs),
                    beam_str(s.beam_ris)
                )?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = BufReader::new(fs::File::open(path)?).lines();
        let header = lines.next().transpose()?.ok_or_else(|| err(1, "empty file".into()))?;
        let (n_bs_beams, n_ris_beams, seed) = parse_header(&header).map_err(|e| match e {
            HeaderError::Version(found) => Error::Version {
                path: path.to_path_buf(),
                found,
                expected: VERSION.into(),
            },
            HeaderError::Malformed(m) => err(1, m),
        })?;
        let mut sequences = Vec::new();
        for (n, line) in lines.enumerate() {
            let lineno = n + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let seq = parse_record(&line, n_bs_beams, n_ris_beams).map_err(|m| err(lineno, m))?;
            sequences.push(seq);
        }
        Ok(Dataset {
            n_bs_beams,
            n_ris_beams,
            seed,
            sequences,
        })
    }
}

fn beam_str(b: Option<usize>) -> String {
    b.map_or_else(|| "-".to_string(), |b| b.to_string())
}

enum HeaderError {
    Version(String),
    Malformed(String),
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize, u64), HeaderError> {
    let mut it = line.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(HeaderError::Malformed(format!("expected header starting with {MAGIC:?}")));
    }
    match it.next() {
        Some(VERSION) => {}
        Some(v) => return Err(HeaderError::Version(v.to_string())),
        None => return Err(HeaderError::Malformed("missing version".into())),
    }
    let mut field = |key: &str| -> std::result::Result<u64, HeaderError> {
        let tok = it.next().ok_or_else(|| HeaderError::Malformed(format!("missing {key}")))?;
        tok.strip_prefix(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| HeaderError::Malformed(format!("bad header field {tok:?}, expected {key}<int>")))
    };
    let f = field("|F|=")? as usize;
    let p = field("|P|=")? as usize;
    let seed = field("seed=")?;
    if it.next().is_some() {
        return Err(HeaderError::Malformed("trailing header fields".into()));
    }
    Ok((f, p, seed))
}

fn parse_record(line: &str, n_bs: usize, n_ris: usize) -> std::result::Result<TrajectorySequence, String> {
    let mut parts = line.split(';').map(str::trim);
    let id_tok = parts.next().unwrap_or_default();
    let seq_id: u64 = id_tok.parse().map_err(|_| format!("bad seq_id {id_tok:?}"))?;
    let steps = parts
        .map(|p| parse_step(p, n_bs, n_ris).map_err(|m| format!("seq_id {seq_id}: {m}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if steps.len() != SEQUENCE_LENGTH {
        return Err(format!(
            "seq_id {seq_id}: expected {SEQUENCE_LENGTH} steps, found {}",
            steps.len()
        ));
    }
    Ok(TrajectorySequence { seq_id, steps })
}

fn parse_step(s: &str, n_bs: usize, n_ris: usize) -> std::result::Result<Step, String> {
    let f: Vec<&str> = s.split(',').collect();
    if f.len() != 6 {
        return Err(format!("step {s:?} has {} fields, expected 6", f.len()));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad coordinate {t:?}"));
    let beam = |t: &str| -> std::result::Result<Option<usize>, String> {
        if t == "-" {
            Ok(None)
        } else {
            t.parse().map(Some).map_err(|_| format!("bad beam {t:?}"))
        }
    };
    let link = match f[3] {
        "1" => Link::Direct,
        "0" => Link::RisAssisted,
        other => return Err(format!("bad link {other:?}")),
    };
    let step = Step {
        position: Vec3::new(num(f[0])?, num(f[1])?, num(f[2])?),
        link,
        beam_bs: beam(f[4])?,
        beam_ris: beam(f[5])?,
    };
    if !step.is_valid(n_bs, n_ris) {
        return Err(format!("step {s:?} is inconsistent with its link or codebook sizes"));
    }
    Ok(step)
}

/// Generation knobs for [`build_dataset`].
#[derive(Debug, Clone)]
pub struct GenerationSpec {
    pub n_sequences: usize,
    pub seed: u64,
    pub policy: StepPolicy,
    /// Attempts per sequence at drawing an outage-free trajectory.
    pub max_attempts: usize,
}

/// Draws `n_sequences` outage-free trajectories and labels each step.
///
/// Sequence `i` uses its own ChaCha stream, so the output does not depend on
/// the number of worker threads.
pub fn build_dataset(
    labels: &LabeledGrid,
    n_bs_beams: usize,
    n_ris_beams: usize,
    spec: &GenerationSpec,
) -> Result<Dataset> {
    if spec.n_sequences == 0 {
        return Err(Error::domain("n_sequences must be at least 1"));
    }
    spec.policy.validate()?;
    let grid = &labels.grid;
    let sequences = (0..spec.n_sequences as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i);
            'attempt: for _ in 0..spec.max_attempts {
                let start = sample_start(&mut rng, grid, SEQUENCE_LENGTH)?;
                let path = generate_trajectory(grid, &spec.policy, &mut rng, start, SEQUENCE_LENGTH)?;
                let mut steps = Vec::with_capacity(SEQUENCE_LENGTH);
                for idx in path {
                    let l = labels.get(idx);
                    if l.link == Link::Outage {
                        continue 'attempt;
                    }
                    steps.push(Step {
                        position: grid.position(idx)?,
                        link: l.link,
                        beam_bs: if l.link == Link::Direct { l.beam_bs } else { None },
                        beam_ris: l.beam_ris,
                    });
                }
                return Ok(TrajectorySequence { seq_id: i, steps });
            }
            Err(Error::Generation(format!(
                "sequence {i}: no outage-free trajectory in {} attempts; {} of {} grid points are in outage",
                spec.max_attempts,
                labels.count(Link::Outage),
                grid.len()
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        n_bs_beams,
        n_ris_beams,
        seed: spec.seed,
        sequences,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub shuffle_seed: u64,
}

impl SplitSpec {
    pub fn train_size(&self, n: usize) -> usize {
        // guards fractions like 0.7 whose product lands a hair under an integer
        ((self.train_fraction * n as f64) + 1e-9).floor() as usize
    }
}

/// Seeded shuffle followed by a `floor(fraction * N)` / rest cut.
pub fn split(
    data: &[TrajectorySequence],
    spec: &SplitSpec,
) -> Result<(Vec<TrajectorySequence>, Vec<TrajectorySequence>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::domain("train fraction must lie in (0, 1)"));
    }
    if data.is_empty() {
        return Err(Error::domain("cannot split an empty dataset"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.shuffle_seed));
    let n_train = spec.train_size(data.len());
    let pick = |ix: &[usize]| ix.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

/// Seq ids shared between two splits (should be empty).
pub fn overlapping_ids(a: &[TrajectorySequence], b: &[TrajectorySequence]) -> Vec<u64> {
    let ids: HashSet<u64> = a.iter().map(|s| s.seq_id).collect();
    b.iter().map(|s| s.seq_id).filter(|id| ids.contains(id)).collect()
}
