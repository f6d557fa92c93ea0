//! Binary dataset file format (FGD1).
//!
//! Little-endian layout:
//!
//! ```text
//! magic        b"FGD1"
//! version      u16  (currently 1)
//! K            u16  joints per frame
//! W            u16  frames per clip
//! class count  u16
//! clip count   u32
//! classes      per class: name length u16 + UTF-8 bytes
//! clips        per clip: label u16, then W*K*3 f32 values
//!              (frame-major, joint-major, (x, y, z) innermost)
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{ActionClass, ActionClip, Dataset, KeypointFrame};
use crate::error::{Error, Result};

pub(crate) const DATASET_MAGIC: [u8; 4] = *b"FGD1";
pub(crate) const DATASET_VERSION: u16 = 1;

/// Serializes a dataset into any writer in the FGD1 layout.
pub fn write_dataset<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    ds.validate()?;
    let too_big = |what: &str| Error::InvalidArgument(format!("{what} too large for format"));
    let k = u16::try_from(ds.joint_count).map_err(|_| too_big("joint count"))?;
    let window = u16::try_from(ds.window).map_err(|_| too_big("window"))?;
    let n_classes = u16::try_from(ds.classes.len()).map_err(|_| too_big("class count"))?;
    let n_clips = u32::try_from(ds.clips.len()).map_err(|_| too_big("clip count"))?;

    w.write_all(&DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&k.to_le_bytes())?;
    w.write_all(&window.to_le_bytes())?;
    w.write_all(&n_classes.to_le_bytes())?;
    w.write_all(&n_clips.to_le_bytes())?;
    for class in &ds.classes {
        let name = class.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| too_big("class name"))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name)?;
    }
    for clip in &ds.clips {
        w.write_all(&(clip.label as u16).to_le_bytes())?;
        for frame in &clip.frames {
            for joint in &frame.joints {
                for &v in joint {
                    w.write_all(&(v as f32).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

fn read_bytes<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Truncated
        } else {
            Error::Io(e)
        }
    })?;
    Ok(buf)
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    Ok(u16::from_le_bytes(read_bytes(r)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_bytes(r)?))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    Ok(f32::from_le_bytes(read_bytes(r)?))
}

/// Parses a dataset from any reader, validating magic, version, and payload
/// completeness.
pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    let magic: [u8; 4] = read_bytes(&mut r)?;
    if magic != DATASET_MAGIC {
        return Err(Error::BadMagic {
            expected: DATASET_MAGIC,
            found: magic,
        });
    }
    let version = read_u16(&mut r)?;
    if version != DATASET_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let joint_count = read_u16(&mut r)? as usize;
    let window = read_u16(&mut r)? as usize;
    let n_classes = read_u16(&mut r)? as usize;
    let n_clips = read_u32(&mut r)? as usize;

    let mut classes = Vec::with_capacity(n_classes);
    for id in 0..n_classes {
        let len = read_u16(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                Error::Truncated
            } else {
                Error::Io(e)
            }
        })?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::InvalidArgument(format!("class {id} name is not UTF-8")))?;
        classes.push(ActionClass { id, name });
    }

    let mut clips = Vec::with_capacity(n_clips);
    for _ in 0..n_clips {
        let label = read_u16(&mut r)? as usize;
        let mut frames = Vec::with_capacity(window);
        for _ in 0..window {
            let mut joints = Vec::with_capacity(joint_count);
            for _ in 0..joint_count {
                let mut joint = [0.0f64; 3];
                for v in &mut joint {
                    *v = f64::from(read_f32(&mut r)?);
                }
                joints.push(joint);
            }
            frames.push(KeypointFrame::new(joints));
        }
        clips.push(ActionClip { frames, label });
    }

    Dataset::new(clips, classes, joint_count, window)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}
