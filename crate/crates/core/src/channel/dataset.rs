use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{apply_channel, derotate_features, draw_fading, Constellation, FadingSpec, Features};
use crate::error::{Error, Result};

/// One received pilot with its known message and true channel phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotRecord {
    pub msg: usize,
    pub received: Complex64,
    pub phase: f64,
}

impl PilotRecord {
    pub fn features(&self) -> Features {
        derotate_features(self.received, self.phase)
    }
}

/// The labelled pilots collected by one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotDataset {
    pub user_id: usize,
    pub scale: f64,
    pub records: Vec<PilotRecord>,
}

impl PilotDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(label, features)` pairs for training.
    pub fn samples(&self) -> Vec<(usize, Features)> {
        self.records.iter().map(|r| (r.msg, r.features())).collect()
    }
}

/// Generates `n_t` pilots for one user: uniform messages, an independent
/// Rayleigh(`scale`) draw per symbol and unit-variance noise.
pub fn gen_dataset<R: Rng + ?Sized>(
    user_id: usize,
    scale: f64,
    n_t: usize,
    constellation: &Constellation,
    rng: &mut R,
) -> Result<PilotDataset> {
    if n_t == 0 {
        return Err(Error::input("dataset size must be at least 1"));
    }
    let spec = FadingSpec::rayleigh(scale)?;
    let records = (0..n_t)
        .map(|_| {
            let msg = rng.random_range(0..constellation.order());
            let h = draw_fading(rng, &spec);
            let received = apply_channel(constellation.points()[msg], &h, rng);
            PilotRecord {
                msg,
                received,
                phase: h.phase,
            }
        })
        .collect();
    Ok(PilotDataset {
        user_id,
        scale,
        records,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    user_id: usize,
    index: usize,
    msg: usize,
    re: f64,
    im: f64,
    phase: f64,
    sigma_u: f64,
}

/// Writes datasets as CSV with columns
/// `user_id,index,msg,re,im,phase,sigma_u`.
pub fn write_datasets_csv<W: Write>(datasets: &[PilotDataset], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in datasets {
        for (index, r) in d.records.iter().enumerate() {
            w.serialize(CsvRecord {
                user_id: d.user_id,
                index,
                msg: r.msg,
                re: r.received.re,
                im: r.received.im,
                phase: r.phase,
                sigma_u: d.scale,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads datasets written by [`write_datasets_csv`]. Users come back in
/// order of first appearance.
pub fn read_datasets_csv<R: Read>(input: R) -> Result<Vec<PilotDataset>> {
    let mut out: Vec<PilotDataset> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: CsvRecord = row?;
        let pos = match out.iter().position(|d| d.user_id == row.user_id) {
            Some(p) => p,
            None => {
                out.push(PilotDataset {
                    user_id: row.user_id,
                    scale: row.sigma_u,
                    records: Vec::new(),
                });
                out.len() - 1
            }
        };
        let d = &mut out[pos];
        if row.index != d.records.len() {
            return Err(Error::input(format!(
                "user {}: expected record index {}, found {}",
                row.user_id,
                d.records.len(),
                row.index
            )));
        }
        d.records.push(PilotRecord {
            msg: row.msg,
            received: Complex64::new(row.re, row.im),
            phase: row.phase,
        });
    }
    Ok(out)
}
