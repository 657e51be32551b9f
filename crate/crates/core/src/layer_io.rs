//! CSV and binary dumps of [`LogMassField`] layers.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! | bytes      | content                                   |
//! |------------|-------------------------------------------|
//! | 8          | magic `BRWLAYER`                          |
//! | 4 (u32)    | format version (1)                        |
//! | 4 (u32)    | dimension `d`                             |
//! | 4 (u32)    | orientation (0 forward, 1 adjoint)        |
//! | 8 (u64)    | time `n`                                  |
//! | 8·d (i64)  | anchor site                               |
//! | 8·d (i64)  | box lower corner                          |
//! | 8·d (i64)  | box upper corner                          |
//! | 8·N (f64)  | log-masses in row-major order (last axis fastest), `-inf` for zero mass |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::expectation::{LogMassField, Orientation};
use crate::lattice::{check_dimension, BoxRegion, Site};

const MAGIC: &[u8; 8] = b"BRWLAYER";
const VERSION: u32 = 1;

/// Writes `x1,..,xd,log_mass` rows for the sites with positive mass.
pub fn write_csv<W: Write>(field: &LogMassField, mut out: W) -> Result<()> {
    let d = field.dim();
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(out, "{},log_mass", header.join(","))?;
    for (site, v) in field.iter() {
        if v > f64::NEG_INFINITY {
            let coords: Vec<String> = site.coords(d).iter().map(|c| c.to_string()).collect();
            writeln!(out, "{},{}", coords.join(","), v)?;
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(field: &LogMassField, mut out: W) -> Result<()> {
    let d = field.dim();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(d as u32).to_le_bytes())?;
    let orient: u32 = match field.orientation() {
        Orientation::Forward => 0,
        Orientation::Adjoint => 1,
    };
    out.write_all(&orient.to_le_bytes())?;
    out.write_all(&(field.time() as u64).to_le_bytes())?;
    for site in [field.anchor(), field.region().lo(), field.region().hi()] {
        for &c in site.coords(d) {
            out.write_all(&c.to_le_bytes())?;
        }
    }
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_site<R: Read>(input: &mut R, d: usize) -> Result<Site> {
    let mut c = Vec::with_capacity(d);
    for _ in 0..d {
        c.push(i64::from_le_bytes(read_array(input)?));
    }
    Ok(Site::new(&c))
}

pub fn read_binary<R: Read>(mut input: R) -> Result<LogMassField> {
    let magic: [u8; 8] = read_array(&mut input)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a layer file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != VERSION {
        return Err(Error::InvalidArgument(format!("unsupported layer version {version}")));
    }
    let d = u32::from_le_bytes(read_array(&mut input)?) as usize;
    check_dimension(d)?;
    let orientation = match u32::from_le_bytes(read_array(&mut input)?) {
        0 => Orientation::Forward,
        1 => Orientation::Adjoint,
        o => return Err(Error::InvalidArgument(format!("bad orientation tag {o}"))),
    };
    let time = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let anchor = read_site(&mut input, d)?;
    let lo = read_site(&mut input, d)?;
    let hi = read_site(&mut input, d)?;
    let region = BoxRegion::new(d, lo, hi)?;
    let mut values = Vec::with_capacity(region.len());
    for _ in 0..region.len() {
        values.push(f64::from_le_bytes(read_array(&mut input)?));
    }
    LogMassField::from_parts(time, anchor, orientation, region, values)
}
