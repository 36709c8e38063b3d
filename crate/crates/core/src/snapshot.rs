//! Binary snapshot formats.
//!
//! Both formats are little-endian and round-trip bit-exactly. The base of
//! discretized ranks is recorded as a rational exponent of two: fields
//! `base_num`/`base_den` encode `b = 2^(num/den)`, with `(0, 0)` meaning
//! full-precision ranks.
//!
//! MinHash sketch (`MHSK`): magic, version u16, flavor u8, mode u8, k u32,
//! base_num u32, base_den u32, seed u64, then the flavor's state.
//!
//! Sketch set (`ADSS`): magic, version u16, set count u8, then per set:
//! direction u8, flavor u8, mode u8, k u32, base_num u32, base_den u32,
//! seed u64, node count u64, and per node and component an entry count
//! followed by (node u64, rank_bits u64, distance-bits u64) triples.

use std::io::{Read, Write};

use crate::ads::{Ads, AdsEntry, AdsSet};
use crate::error::{Error, Result};
use crate::graph::Direction;
use crate::minhash::{Flavor, MinHashSketch, SketchConfig};
use crate::rank::{NodeId, RankMode};

const MH_MAGIC: &[u8; 4] = b"MHSK";
const ADS_MAGIC: &[u8; 4] = b"ADSS";
const VERSION: u16 = 1;

fn put_u16(w: &mut impl Write, v: u16) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}
fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}
fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}
fn get_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}
fn get_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}
fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn flavor_tag(f: Flavor) -> u8 {
    match f {
        Flavor::BottomK => 0,
        Flavor::KMins => 1,
        Flavor::KPartition => 2,
    }
}

fn flavor_from(tag: u8) -> Result<Flavor> {
    Ok(match tag {
        0 => Flavor::BottomK,
        1 => Flavor::KMins,
        2 => Flavor::KPartition,
        t => return Err(Error::Corrupt(format!("unknown flavor tag {t}"))),
    })
}

fn mode_fields(m: RankMode) -> (u8, u32, u32) {
    match m {
        RankMode::Full => (0, 0, 0),
        RankMode::Pow2Root(i) => (1, 1, i),
        RankMode::Weighted => (2, 0, 0),
    }
}

fn mode_from(tag: u8, num: u32, den: u32) -> Result<RankMode> {
    Ok(match tag {
        0 => RankMode::Full,
        1 => {
            if num != 1 || den == 0 {
                return Err(Error::Corrupt(format!("bad base exponent {num}/{den}")));
            }
            RankMode::Pow2Root(den)
        }
        2 => RankMode::Weighted,
        t => return Err(Error::Corrupt(format!("unknown rank mode tag {t}"))),
    })
}

fn write_config(w: &mut impl Write, cfg: &SketchConfig) -> Result<()> {
    let (mtag, num, den) = mode_fields(cfg.mode);
    w.write_all(&[flavor_tag(cfg.flavor), mtag])?;
    put_u32(w, cfg.k as u32)?;
    put_u32(w, num)?;
    put_u32(w, den)?;
    put_u64(w, cfg.seed)?;
    Ok(())
}

fn read_config(r: &mut impl Read) -> Result<SketchConfig> {
    let flavor = flavor_from(get_u8(r)?)?;
    let mtag = get_u8(r)?;
    let k = get_u32(r)? as usize;
    let num = get_u32(r)?;
    let den = get_u32(r)?;
    let seed = get_u64(r)?;
    let mode = mode_from(mtag, num, den)?;
    SketchConfig::new(flavor, k, mode, seed).map_err(|e| Error::Corrupt(e.to_string()))
}

pub fn write_minhash(s: &MinHashSketch, w: &mut impl Write) -> Result<()> {
    w.write_all(MH_MAGIC)?;
    put_u16(w, VERSION)?;
    write_config(w, s.config())?;
    let (bottomk, regs) = s.parts();
    match (bottomk, regs) {
        (Some(entries), None) => {
            put_u32(w, entries.len() as u32)?;
            for &(payload, node) in entries {
                put_u64(w, payload)?;
                put_u64(w, node.0)?;
            }
        }
        (None, Some(regs)) => {
            put_u32(w, regs.len() as u32)?;
            for reg in regs {
                match reg {
                    None => w.write_all(&[0])?,
                    Some((payload, node)) => {
                        w.write_all(&[1])?;
                        put_u64(w, *payload)?;
                        put_u64(w, node.0)?;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

pub fn read_minhash(r: &mut impl Read) -> Result<MinHashSketch> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MH_MAGIC {
        return Err(Error::Corrupt("not a MinHash snapshot".into()));
    }
    let version = get_u16(r)?;
    if version != VERSION {
        return Err(Error::Corrupt(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let cfg = read_config(r)?;
    match cfg.flavor {
        Flavor::BottomK => {
            let len = get_u32(r)? as usize;
            if len > cfg.k {
                return Err(Error::Corrupt("bottom-k entry count exceeds k".into()));
            }
            let mut entries = Vec::with_capacity(len.min(1 << 16));
            for _ in 0..len {
                let payload = get_u64(r)?;
                let node = NodeId(get_u64(r)?);
                entries.push((payload, node));
            }
            MinHashSketch::from_parts(cfg, Some(entries), None)
        }
        _ => {
            let len = get_u32(r)? as usize;
            if len != cfg.k {
                return Err(Error::Corrupt("register count does not match k".into()));
            }
            let mut regs = Vec::with_capacity(len.min(1 << 16));
            for _ in 0..len {
                match get_u8(r)? {
                    0 => regs.push(None),
                    1 => {
                        let payload = get_u64(r)?;
                        let node = NodeId(get_u64(r)?);
                        regs.push(Some((payload, node)));
                    }
                    t => return Err(Error::Corrupt(format!("bad register tag {t}"))),
                }
            }
            MinHashSketch::from_parts(cfg, None, Some(regs))
        }
    }
}

fn direction_tag(d: Direction) -> u8 {
    match d {
        Direction::Forward => 0,
        Direction::Backward => 1,
    }
}

pub fn write_ads_sets(sets: &[&AdsSet], w: &mut impl Write) -> Result<()> {
    if sets.is_empty() || sets.len() > 2 {
        return Err(Error::InvalidParameter(
            "a snapshot holds one or two sketch sets".into(),
        ));
    }
    w.write_all(ADS_MAGIC)?;
    put_u16(w, VERSION)?;
    w.write_all(&[sets.len() as u8])?;
    for set in sets {
        w.write_all(&[direction_tag(set.direction())])?;
        write_config(w, set.config())?;
        put_u64(w, set.len() as u64)?;
        for ads in set.iter() {
            for comp in 0..ads.component_count() {
                let entries = ads.component(comp);
                put_u32(w, entries.len() as u32)?;
                for e in entries {
                    put_u64(w, e.node.0)?;
                    put_u64(w, e.rank_bits)?;
                    put_u64(w, e.distance.to_bits())?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_ads_sets(r: &mut impl Read) -> Result<Vec<AdsSet>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != ADS_MAGIC {
        return Err(Error::Corrupt("not a sketch-set snapshot".into()));
    }
    let version = get_u16(r)?;
    if version != VERSION {
        return Err(Error::Corrupt(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let count = get_u8(r)? as usize;
    if count == 0 || count > 2 {
        return Err(Error::Corrupt(format!("bad set count {count}")));
    }
    let mut sets = Vec::with_capacity(count);
    for _ in 0..count {
        let direction = match get_u8(r)? {
            0 => Direction::Forward,
            1 => Direction::Backward,
            t => return Err(Error::Corrupt(format!("bad direction tag {t}"))),
        };
        let cfg = read_config(r)?;
        let n = get_u64(r)? as usize;
        let comp_count = match cfg.flavor {
            Flavor::KMins => cfg.k,
            _ => 1,
        };
        let mut all = Vec::with_capacity(n.min(1 << 20));
        for v in 0..n as u64 {
            let mut comps = Vec::with_capacity(comp_count.min(1 << 16));
            for _ in 0..comp_count {
                let len = get_u32(r)? as usize;
                let mut entries = Vec::with_capacity(len.min(1 << 16));
                for _ in 0..len {
                    let node = NodeId(get_u64(r)?);
                    let rank_bits = get_u64(r)?;
                    let distance = f64::from_bits(get_u64(r)?);
                    if !(distance >= 0.0) || !distance.is_finite() {
                        return Err(Error::Corrupt(format!("bad entry distance {distance}")));
                    }
                    entries.push(AdsEntry {
                        node,
                        rank_bits,
                        distance,
                    });
                }
                comps.push(entries);
            }
            all.push(Ads::from_raw(cfg, Some(NodeId(v)), comps));
        }
        sets.push(AdsSet::from_parts(cfg, direction, all));
    }
    Ok(sets)
}
