//! Beam codebooks, received-power evaluation for the direct and RIS-assisted
//! links, and exhaustive best-beam labeling of drone positions.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    freq_channel, paths_from_geometry, sparse_delay_taps, steering, ArraySpec, FreqChannel,
    OfdmSpec, Propagation, SparseTaps,
};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::{GridIndex, GridSpec, Scene};

/// Set of phase-only beamforming vectors, each scaled to unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub vectors: Vec<Vec<Complex64>>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_elements(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// DFT codebook: beam `i` steers to `omega_i = -1 + 2i/size`.
pub fn dft_codebook(arr: &ArraySpec, size: usize) -> Result<Codebook> {
    if size == 0 {
        return Err(Error::domain("codebook size must be at least 1"));
    }
    arr.validate()?;
    let norm = 1.0 / (arr.n_elements as f64).sqrt();
    let vectors = (0..size)
        .map(|i| {
            let omega = -1.0 + 2.0 * i as f64 / size as f64;
            steering(arr.n_elements, arr.spacing_wavelengths, omega)
                .into_iter()
                .map(|v| v * norm)
                .collect()
        })
        .collect();
    Ok(Codebook { vectors })
}

/// Element-wise product `h_r ⊙ h_t`, the effective channel seen by the
/// RIS reflection vector: `h_r^T diag(psi) h_t = (h_r ⊙ h_t)^T psi`.
pub fn cascade_vector(h_t: &[Complex64], h_r: &[Complex64]) -> Result<Vec<Complex64>> {
    if h_t.len() != h_r.len() {
        return Err(Error::domain(format!(
            "cascade length mismatch: {} vs {}",
            h_t.len(),
            h_r.len()
        )));
    }
    Ok(h_r.iter().zip(h_t).map(|(r, t)| r * t).collect())
}

/// Unconjugated inner product `a^T b`.
pub fn dot_t(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(beam: &[Complex64], n: usize) -> Result<()> {
    if beam.len() != n {
        return Err(Error::domain(format!(
            "beam has {} elements, channel has {}",
            beam.len(),
            n
        )));
    }
    Ok(())
}

/// Wideband gain `sum_k |beam^T h_k|^2`.
pub fn beam_gain(channel: &FreqChannel, beam: &[Complex64]) -> Result<f64> {
    check_dims(beam, channel.n_elements())?;
    Ok(channel
        .subcarriers
        .iter()
        .map(|h| dot_t(beam, h).norm_sqr())
        .sum())
}

/// Same objective as [`beam_gain`] evaluated on delay taps.
///
/// With `h_k` the K-point DFT of the zero-padded taps, Parseval gives
/// `sum_k |b^T h_k|^2 = K * sum_d |b^T h_d|^2`.
pub fn taps_beam_gain(taps: &SparseTaps, n_subcarriers: usize, beam: &[Complex64]) -> Result<f64> {
    check_dims(beam, taps.n_elements)?;
    let s: f64 = taps.taps.iter().map(|(_, h)| dot_t(beam, h).norm_sqr()).sum();
    Ok(n_subcarriers as f64 * s)
}

fn argmax_first(gains: impl Iterator<Item = Result<f64>>) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in gains.enumerate() {
        let g = g?;
        match best {
            Some((_, bg)) if g <= bg => {}
            _ => best = Some((i, g)),
        }
    }
    best.ok_or_else(|| Error::domain("empty codebook"))
}

/// Exhaustive sweep; ties go to the lowest index.
pub fn best_beam(channel: &FreqChannel, cb: &Codebook) -> Result<(usize, f64)> {
    argmax_first(cb.vectors.iter().map(|b| beam_gain(channel, b)))
}

pub fn best_beam_taps(taps: &SparseTaps, n_subcarriers: usize, cb: &Codebook) -> Result<(usize, f64)> {
    argmax_first(cb.vectors.iter().map(|b| taps_beam_gain(taps, n_subcarriers, b)))
}

/// Delay-domain form of the per-subcarrier cascade `h_R,k ⊙ h_T,k`:
/// circular convolution (mod K) of the two tap sequences.
pub fn cascade_taps(h_t: &SparseTaps, h_r: &SparseTaps, n_subcarriers: usize) -> Result<SparseTaps> {
    if h_t.n_elements != h_r.n_elements {
        return Err(Error::domain("cascade element counts differ"));
    }
    let mut acc: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for (dt, vt) in &h_t.taps {
        for (dr, vr) in &h_r.taps {
            let d = (dt + dr) % n_subcarriers;
            let prod = cascade_vector(vt, vr)?;
            match acc.get_mut(&d) {
                Some(v) => v.iter_mut().zip(&prod).for_each(|(a, b)| *a += b),
                None => {
                    acc.insert(d, prod);
                }
            }
        }
    }
    Ok(SparseTaps {
        n_elements: h_t.n_elements,
        n_taps: n_subcarriers,
        taps: acc.into_iter().collect(),
    })
}

/// Per-subcarrier cascade `h_R,k ⊙ h_T,k`.
pub fn cascade_channel(h_t: &FreqChannel, h_r: &FreqChannel) -> Result<FreqChannel> {
    if h_t.n_subcarriers() != h_r.n_subcarriers() {
        return Err(Error::domain("cascade subcarrier counts differ"));
    }
    let subcarriers = h_t
        .subcarriers
        .iter()
        .zip(&h_r.subcarriers)
        .map(|(t, r)| cascade_vector(t, r))
        .collect::<Result<_>>()?;
    Ok(FreqChannel { subcarriers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    Direct,
    RisAssisted,
    Outage,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Direct => "direct",
            Link::RisAssisted => "ris",
            Link::Outage => "outage",
        })
    }
}

impl FromStr for Link {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "direct" => Ok(Link::Direct),
            "ris" => Ok(Link::RisAssisted),
            "outage" => Ok(Link::Outage),
            other => Err(format!("unknown link {other:?}")),
        }
    }
}

/// Serving link and best beams at one position.
///
/// `beam_ris` is also filled for direct positions whenever the RIS path
/// exists, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkLabel {
    pub link: Link,
    pub beam_bs: Option<usize>,
    pub beam_ris: Option<usize>,
    pub gain_bs: Option<f64>,
    pub gain_ris: Option<f64>,
}

impl LinkLabel {
    pub const OUTAGE: LinkLabel = LinkLabel {
        link: Link::Outage,
        beam_bs: None,
        beam_ris: None,
        gain_bs: None,
        gain_ris: None,
    };

    pub fn is_consistent(&self) -> bool {
        match self.link {
            Link::Direct => self.beam_bs.is_some(),
            Link::RisAssisted => self.beam_bs.is_none() && self.beam_ris.is_some(),
            Link::Outage => self.beam_bs.is_none() && self.beam_ris.is_none(),
        }
    }
}

/// Everything needed to label positions in one scene.
#[derive(Debug, Clone)]
pub struct Labeler {
    pub scene: Scene,
    pub propagation: Propagation,
    pub bs_array: ArraySpec,
    pub ris_array: ArraySpec,
    pub ofdm: OfdmSpec,
    pub bs_codebook: Codebook,
    pub ris_codebook: Codebook,
    /// BS -> RIS channel at the RIS array. Both ends are static.
    feeder: Option<SparseTaps>,
}

impl Labeler {
    pub fn new(
        scene: Scene,
        propagation: Propagation,
        bs_array: ArraySpec,
        ris_array: ArraySpec,
        ofdm: OfdmSpec,
        bs_codebook_size: usize,
        ris_codebook_size: usize,
    ) -> Result<Self> {
        scene.validate()?;
        ofdm.validate()?;
        let bs_codebook = dft_codebook(&bs_array, bs_codebook_size)?;
        let ris_codebook = dft_codebook(&ris_array, ris_codebook_size)?;
        let feeder = paths_from_geometry(&scene, &propagation, scene.bs_position, scene.ris_position)
            .map(|ps| sparse_delay_taps(&ps, &ris_array, &ofdm));
        Ok(Labeler {
            scene,
            propagation,
            bs_array,
            ris_array,
            ofdm,
            bs_codebook,
            ris_codebook,
            feeder,
        })
    }

    pub fn direct_taps(&self, pos: Vec3) -> Option<SparseTaps> {
        paths_from_geometry(&self.scene, &self.propagation, pos, self.scene.bs_position)
            .map(|ps| sparse_delay_taps(&ps, &self.bs_array, &self.ofdm))
    }

    /// Delay-domain cascade seen by the RIS reflection vector.
    pub fn cascade_taps(&self, pos: Vec3) -> Result<Option<SparseTaps>> {
        let Some(feeder) = &self.feeder else {
            return Ok(None);
        };
        let Some(ps) = paths_from_geometry(&self.scene, &self.propagation, pos, self.scene.ris_position) else {
            return Ok(None);
        };
        let h_r = sparse_delay_taps(&ps, &self.ris_array, &self.ofdm);
        cascade_taps(feeder, &h_r, self.ofdm.n_subcarriers).map(Some)
    }

    /// Frequency-domain channels (direct, cascade), materialized on all K
    /// subcarriers. Slow; used to cross-check the tap-domain sweep.
    pub fn freq_channels(&self, pos: Vec3) -> Result<(Option<FreqChannel>, Option<FreqChannel>)> {
        let direct = self
            .direct_taps(pos)
            .map(|t| freq_channel(&t.to_dense(), &self.ofdm))
            .transpose()?;
        let cascade = match (&self.feeder, paths_from_geometry(&self.scene, &self.propagation, pos, self.scene.ris_position)) {
            (Some(feeder), Some(ps)) => {
                let h_t = freq_channel(&feeder.to_dense(), &self.ofdm)?;
                let h_r = freq_channel(&sparse_delay_taps(&ps, &self.ris_array, &self.ofdm).to_dense(), &self.ofdm)?;
                Some(cascade_channel(&h_t, &h_r)?)
            }
            _ => None,
        };
        Ok((direct, cascade))
    }

    /// Serving link by blockage, best beams by exhaustive sweep.
    pub fn label_position(&self, pos: Vec3) -> Result<LinkLabel> {
        let k = self.ofdm.n_subcarriers;
        let ris = match self.cascade_taps(pos)? {
            Some(c) => Some(best_beam_taps(&c, k, &self.ris_codebook)?),
            None => None,
        };
        let label = match self.direct_taps(pos) {
            Some(direct) => {
                let (b, g) = best_beam_taps(&direct, k, &self.bs_codebook)?;
                LinkLabel {
                    link: Link::Direct,
                    beam_bs: Some(b),
                    beam_ris: ris.map(|r| r.0),
                    gain_bs: Some(g),
                    gain_ris: ris.map(|r| r.1),
                }
            }
            None => match ris {
                Some((b, g)) => LinkLabel {
                    link: Link::RisAssisted,
                    beam_bs: None,
                    beam_ris: Some(b),
                    gain_bs: None,
                    gain_ris: Some(g),
                },
                None => LinkLabel::OUTAGE,
            },
        };
        Ok(label)
    }

    /// Labels every grid point; output is in the grid's linear order
    /// regardless of how many threads run the sweep.
    pub fn label_grid(&self) -> Result<LabeledGrid> {
        let grid = self.scene.grid.clone();
        let labels = (0..grid.len())
            .into_par_iter()
            .map(|i| self.label_position(grid.position(grid.unlinear(i))?))
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledGrid { grid, labels })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGrid {
    pub grid: GridSpec,
    /// Indexed by [`GridSpec::linear`].
    pub labels: Vec<LinkLabel>,
}

const LABELS_HEADER: &str = "x,y,z,link,beam_bs,beam_ris,gain_bs,gain_ris";

fn opt_to_string<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn parse_opt<T: FromStr>(s: &str) -> std::result::Result<Option<T>, String> {
    if s == "-" {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad value {s:?}"))
    }
}

impl LabeledGrid {
    pub fn get(&self, idx: GridIndex) -> &LinkLabel {
        &self.labels[self.grid.linear(idx)]
    }

    pub fn count(&self, link: Link) -> usize {
        self.labels.iter().filter(|l| l.link == link).count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "{LABELS_HEADER}")?;
        for (i, l) in self.labels.iter().enumerate() {
            let p = self.grid.position(self.grid.unlinear(i))?;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                p.x,
                p.y,
                p.z,
                l.link,
                opt_to_string(l.beam_bs),
                opt_to_string(l.beam_ris),
                opt_to_string(l.gain_bs),
                opt_to_string(l.gain_ris)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`write_csv`](Self::write_csv) for `grid`.
    pub fn read_csv(path: &Path, grid: &GridSpec) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let reader = BufReader::new(fs::File::open(path)?);
        let mut lines = reader.lines();
        match lines.next().transpose()? {
            Some(h) if h.trim_end() == LABELS_HEADER => {}
            _ => return Err(parse_err(1, format!("expected header {LABELS_HEADER:?}"))),
        }
        let mut labels = Vec::with_capacity(grid.len());
        for (n, line) in lines.enumerate() {
            let lineno = n + 2;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(parse_err(lineno, format!("expected 8 fields, found {}", f.len())));
            }
            let i = labels.len();
            if i >= grid.len() {
                return Err(parse_err(lineno, "more rows than grid points".into()));
            }
            let coords: Vec<f64> = f[..3]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(lineno, e.to_string()))?;
            let want = grid.position(grid.unlinear(i))?;
            if Vec3::new(coords[0], coords[1], coords[2]).distance(want) > 1e-6 {
                return Err(parse_err(lineno, format!("position does not match grid point {i}")));
            }
            let label = LinkLabel {
                link: f[3].parse().map_err(|e| parse_err(lineno, e))?,
                beam_bs: parse_opt(f[4]).map_err(|e| parse_err(lineno, e))?,
                beam_ris: parse_opt(f[5]).map_err(|e| parse_err(lineno, e))?,
                gain_bs: parse_opt(f[6]).map_err(|e| parse_err(lineno, e))?,
                gain_ris: parse_opt(f[7]).map_err(|e| parse_err(lineno, e))?,
            };
            if !label.is_consistent() {
                return Err(parse_err(lineno, "link and beam fields disagree".into()));
            }
            labels.push(label);
        }
        if labels.len() != grid.len() {
            return Err(parse_err(
                labels.len() + 1,
                format!("expected {} rows, found {}", grid.len(), labels.len()),
            ));
        }
        Ok(LabeledGrid {
            grid: grid.clone(),
            labels,
        })
    }
}
