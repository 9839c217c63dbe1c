//! Snapshot CSV export and the binary restart format.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic      8 bytes  "PFDESTAT"
//! version    u32      = 1
//! species    u32
//! nodes      u32
//! delay      u32      M
//! driver_dim u32      k
//! time       f64
//! angles     k x f64
//! freqs      k x f64
//! values     (M + 1) x species x nodes x f64, oldest profile first
//! ```

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{PfdeError, Result};
use crate::model::{DriverState, Mesh1D, Segment};
use crate::solver::Trajectory;

pub const STATE_MAGIC: &[u8; 8] = b"PFDESTAT";
pub const STATE_VERSION: u32 = 1;

pub const SNAPSHOT_HEADER: &str = "t,species,node_index,x,value";

/// Writes `(t, species, node_index, x, value)` rows for the newest profile of
/// each snapshot. Species are numbered from 1, nodes from 0.
pub fn write_snapshots_csv<W: Write>(
    mut w: W,
    tr: &Trajectory,
    mesh: &Mesh1D,
    time_offset: f64,
) -> Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    let xs = mesh.points();
    for (t, seg) in tr.snapshots() {
        let p = seg.newest();
        for i in 0..p.nrows() {
            for (k, x) in xs.iter().enumerate() {
                writeln!(w, "{},{},{},{},{}", t + time_offset, i + 1, k, x, p[[i, k]])?;
            }
        }
    }
    Ok(())
}

/// A restartable state: time, driver position and delay history.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDump {
    pub time: f64,
    pub driver: DriverState,
    pub segment: Segment,
}

pub fn write_state<W: Write>(mut w: W, state: &StateDump) -> Result<()> {
    let seg = &state.segment;
    w.write_all(STATE_MAGIC)?;
    for v in [
        STATE_VERSION,
        seg.species() as u32,
        seg.nodes() as u32,
        seg.delay_steps() as u32,
        state.driver.dim() as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&state.time.to_le_bytes())?;
    for v in state
        .driver
        .angles()
        .iter()
        .chain(state.driver.frequencies())
    {
        w.write_all(&v.to_le_bytes())?;
    }
    for p in seg.history() {
        for v in p.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_state<R: Read>(mut r: R) -> Result<StateDump> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != STATE_MAGIC {
        return Err(PfdeError::Io("not a pfde state file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != STATE_VERSION {
        return Err(PfdeError::Io(format!(
            "unsupported state version {version}, expected {STATE_VERSION}"
        )));
    }
    let species = read_u32(&mut r)? as usize;
    let nodes = read_u32(&mut r)? as usize;
    let delay = read_u32(&mut r)? as usize;
    let k = read_u32(&mut r)? as usize;
    let time = read_f64(&mut r)?;
    let angles = (0..k)
        .map(|_| read_f64(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let freqs = (0..k)
        .map(|_| read_f64(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let mut history = Vec::with_capacity(delay + 1);
    for _ in 0..=delay {
        let vals = (0..species * nodes)
            .map(|_| read_f64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        history.push(Array2::from_shape_vec((species, nodes), vals).expect("shape"));
    }
    Ok(StateDump {
        time,
        driver: DriverState::new(angles, freqs),
        segment: Segment::new(history)?,
    })
}
