//! Binary checkpoints: a JSON header followed by raw field records.
//!
//! Layout: the 8-byte magic `NEMCKPT1`, a `u32` little-endian header length,
//! the UTF-8 JSON header, the current `dt` as `f64` little-endian, then one
//! snapshot record per scalar component of the state. Every float travels
//! as its exact bit pattern, so a load reproduces the saved run bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::snapshot::{read_all, write_record};
use crate::fields::{ScalarField, VectorField};
use crate::model::State;

use super::{DtChange, SimConfig};

const MAGIC: &[u8; 8] = b"NEMCKPT1";

/// Everything needed to continue a run exactly where it stopped.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: SimConfig,
    pub state: State,
    pub step: u64,
    pub dt: f64,
    pub dt_history: Vec<DtChange>,
    /// Word position of the preset's random stream.
    pub rng_word_pos: u128,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: SimConfig,
    step: u64,
    dt_history: Vec<DtChange>,
    rng_word_pos: String,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let header = Header {
            config: self.config.clone(),
            step: self.step,
            dt_history: self.dt_history.clone(),
            rng_word_pos: self.rng_word_pos.to_string(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(MAGIC)?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        w.write_all(&self.dt.to_le_bytes())?;
        for (name, field) in self.state.named_components() {
            write_record(w, &name, self.state.time, field)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
        let mut dt = [0u8; 8];
        r.read_exact(&mut dt)?;
        let dt = f64::from_le_bytes(dt);
        let rng_word_pos = header
            .rng_word_pos
            .parse()
            .map_err(|_| Error::Format("bad random stream position".into()))?;

        let grid = header.config.grid()?;
        let d = grid.dim();
        let records = read_all(r)?;
        let mut expected = vec!["c_p".to_string(), "c_m".to_string(), "phi".to_string()];
        expected.extend((1..=d).map(|a| format!("v_{a}")));
        expected.extend((1..=d).map(|a| format!("n_{a}")));
        let names: Vec<&str> = records.iter().map(|r| r.name.as_str()).collect();
        if names != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Format(format!("unexpected checkpoint fields {names:?}")));
        }
        if records.iter().any(|r| r.field.grid() != &grid) {
            return Err(Error::Format("checkpoint grid disagrees with its configuration".into()));
        }
        let time = records[0].time;
        let mut fields = records
            .into_iter()
            .map(|r| ScalarField::from_values(&grid, r.field.into_values()));
        let mut next = || fields.next().expect("field count checked");
        let c_p = next();
        let c_m = next();
        let phi = next();
        let v = VectorField::from_components((0..d).map(|_| next()).collect());
        let n = VectorField::from_components((0..d).map(|_| next()).collect());
        Ok(Checkpoint {
            config: header.config,
            state: State { time, c_p, c_m, phi, v, n },
            step: header.step,
            dt,
            dt_history: header.dt_history,
            rng_word_pos,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::Simulation;

    fn sample() -> Checkpoint {
        let config = SimConfig {
            n: 16,
            ..SimConfig::default()
        };
        let mut sim = Simulation::new(config).unwrap();
        for _ in 0..3 {
            sim.advance().unwrap();
        }
        let mut ck = sim.checkpoint();
        ck.dt_history.push(DtChange {
            step: 2,
            time: 0.002,
            dt: 5e-4,
            reason: "test".into(),
        });
        ck.rng_word_pos = u128::MAX - 7;
        ck
    }

    fn bytes(ck: &Checkpoint) -> Vec<u8> {
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let buf = bytes(&ck);
        assert_eq!(&buf[..8], MAGIC);
        let back = Checkpoint::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.step, 3);
        assert_eq!(back.dt.to_bits(), ck.dt.to_bits());
        assert_eq!(back.dt_history, ck.dt_history);
        assert_eq!(back.rng_word_pos, ck.rng_word_pos);
        assert_eq!(back.config, ck.config);
        assert_eq!(back.state.time.to_bits(), ck.state.time.to_bits());
        for ((na, a), (nb, b)) in ck.state.named_components().iter().zip(back.state.named_components()) {
            assert_eq!(*na, nb);
            assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(bytes(&back), buf);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let buf = bytes(&sample());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::read_from(&mut bad.as_slice()), Err(Error::Format(_))));
        assert!(Checkpoint::read_from(&mut &buf[..buf.len() - 5]).is_err());
        assert!(Checkpoint::read_from(&mut &buf[..20]).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        let ck = sample();
        ck.save(&path).unwrap();
        assert_eq!(bytes(&Checkpoint::load(&path).unwrap()), bytes(&ck));
    }
}
