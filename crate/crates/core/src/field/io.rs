//! HESSFIELD v1 file format.
//!
//! One text header line
//!
//! `HESSFIELD v1 n=<n> shape=<s1,...,s2n> h=<spacing> origin=<o1,...,o2n> kind=<box|ball|torus>`
//!
//! followed by little-endian IEEE-754 doubles in row-major order over the
//! full shape. Non-interior points are stored as quiet NaN except
//! boundary points, which keep their values. Floats in the header use the
//! shortest round-trip decimal form, so write → read → write is
//! byte-identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{domain_err, Error, Result};
use crate::field::domain::{DomainKind, GridDomain, PointClass};
use crate::field::grid::GridField;

pub fn write_field(u: &GridField, w: &mut impl Write) -> Result<()> {
    let dom = u.domain();
    let shape: Vec<String> = dom.shape().iter().map(|s| s.to_string()).collect();
    let origin: Vec<String> = dom.origin().iter().map(|o| o.to_string()).collect();
    writeln!(
        w,
        "HESSFIELD v1 n={} shape={} h={} origin={} kind={}",
        dom.n(),
        shape.join(","),
        dom.spacing(),
        origin.join(","),
        dom.kind().as_str()
    )?;
    for flat in 0..dom.points() {
        let v = match dom.classify(flat) {
            PointClass::Exterior => f64::NAN,
            _ => u.value(flat),
        };
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<GridField> {
    // header line up to '\n'
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)
            .map_err(|_| Error::Io("truncated header".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
        if header.len() > 4096 {
            return Err(Error::Io("header line too long".into()));
        }
    }
    let header = String::from_utf8(header).map_err(|_| Error::Io("header not utf-8".into()))?;
    let mut n = None;
    let mut shape: Option<Vec<usize>> = None;
    let mut h = None;
    let mut origin: Option<Vec<f64>> = None;
    let mut kind = None;
    let mut words = header.split_whitespace();
    if words.next() != Some("HESSFIELD") || words.next() != Some("v1") {
        return domain_err("not a HESSFIELD v1 file");
    }
    for word in words {
        let (key, val) = word
            .split_once('=')
            .ok_or_else(|| Error::Io(format!("malformed header token `{word}`")))?;
        match key {
            "n" => n = Some(val.parse::<usize>().map_err(|_| Error::Io("bad n".into()))?),
            "shape" => {
                shape = Some(
                    val.split(',')
                        .map(|s| s.parse::<usize>().map_err(|_| Error::Io("bad shape".into())))
                        .collect::<Result<_>>()?,
                )
            }
            "h" => h = Some(val.parse::<f64>().map_err(|_| Error::Io("bad h".into()))?),
            "origin" => {
                origin = Some(
                    val.split(',')
                        .map(|s| s.parse::<f64>().map_err(|_| Error::Io("bad origin".into())))
                        .collect::<Result<_>>()?,
                )
            }
            "kind" => {
                kind = Some(match val {
                    "box" => DomainKind::Box,
                    "ball" => DomainKind::Ball,
                    "torus" => DomainKind::Torus,
                    other => return domain_err(format!("unknown kind `{other}`")),
                })
            }
            other => return Err(Error::Io(format!("unknown header key `{other}`"))),
        }
    }
    let (n, shape, h, origin, kind) = match (n, shape, h, origin, kind) {
        (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
        _ => return domain_err("incomplete HESSFIELD header"),
    };
    let total: usize = shape.iter().product();
    let mut raw = vec![0u8; total * 8];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Io("truncated field data".into()))?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    // mask reconstruction: finite = inside; inside with a full finite
    // index cube = interior; NaN = exterior. Matches the constructors.
    let mask = reconstruct_mask(&shape, &values, kind);
    let dom = GridDomain::from_parts(n, shape, h, origin, kind, mask)?;
    GridField::from_values(dom, values)
}

fn reconstruct_mask(shape: &[usize], values: &[f64], kind: DomainKind) -> Vec<PointClass> {
    let total: usize = shape.iter().product();
    if kind == DomainKind::Torus {
        return vec![PointClass::Interior; total];
    }
    let axes = shape.len();
    let mut strides = vec![1usize; axes];
    for d in (0..axes - 1).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    let mut mask = vec![PointClass::Exterior; total];
    let mut idx = vec![0usize; axes];
    for flat in 0..total {
        if !values[flat].is_finite() {
            continue;
        }
        let mut rem = flat;
        let mut on_edge = false;
        for d in 0..axes {
            idx[d] = rem / strides[d];
            rem %= strides[d];
            if idx[d] == 0 || idx[d] == shape[d] - 1 {
                on_edge = true;
            }
        }
        if on_edge {
            mask[flat] = PointClass::Boundary;
            continue;
        }
        // interior iff the whole 3^axes cube is finite
        let mut interior = true;
        let mut offs = vec![-1isize; axes];
        'cube: loop {
            if offs.iter().any(|&o| o != 0) {
                let mut nb = 0usize;
                for d in 0..axes {
                    nb += (idx[d] as isize + offs[d]) as usize * strides[d];
                }
                if !values[nb].is_finite() {
                    interior = false;
                    break 'cube;
                }
            }
            let mut d = 0;
            loop {
                if d == axes {
                    break 'cube;
                }
                offs[d] += 1;
                if offs[d] <= 1 {
                    break;
                }
                offs[d] = -1;
                d += 1;
            }
        }
        mask[flat] = if interior {
            PointClass::Interior
        } else {
            PointClass::Boundary
        };
    }
    mask
}

pub fn save_field(u: &GridField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(u, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<GridField> {
    let mut r = BufReader::new(File::open(path)?);
    read_field(&mut r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::domain::GridDomain;
    use crate::field::hessian::radius_sq_of;

    fn roundtrip(u: &GridField) -> (Vec<u8>, GridField, Vec<u8>) {
        let mut buf = Vec::new();
        write_field(u, &mut buf).unwrap();
        let back = read_field(&mut buf.as_slice()).unwrap();
        let mut buf2 = Vec::new();
        write_field(&back, &mut buf2).unwrap();
        (buf, back, buf2)
    }

    #[test]
    fn box_ball_torus_roundtrip_bit_exact() {
        let domains = [
            GridDomain::box_on(2, 7, -1.0, 1.0).unwrap(),
            GridDomain::ball(1, 11, 0.8).unwrap(),
            GridDomain::torus(1, 8).unwrap(),
        ];
        for dom in domains {
            let u = GridField::from_fn(dom.clone(), |p| (p[0] * 3.1).sin() + radius_sq_of(p));
            let (bytes, back, bytes2) = roundtrip(&u);
            assert_eq!(bytes, bytes2, "write-read-write must be byte identical");
            assert!(back.domain().same_layout(&dom));
            for flat in 0..dom.points() {
                let a = u.value(flat);
                let b = back.value(flat);
                assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
            }
        }
    }

    #[test]
    fn punctured_domain_roundtrip() {
        let dom = GridDomain::box_on(1, 17, -1.0, 1.0)
            .unwrap()
            .exclude_ball(&[0.0, 0.0], 0.2)
            .unwrap();
        let u = GridField::from_fn(dom.clone(), |p| radius_sq_of(p).ln());
        let (_, back, _) = roundtrip(&u);
        assert!(back.domain().same_layout(&dom));
    }

    #[test]
    fn header_errors_are_reported() {
        assert!(read_field(&mut &b"NOTAFIELD v1\n"[..]).is_err());
        assert!(read_field(&mut &b"HESSFIELD v1 n=2\n"[..]).is_err());
        assert!(read_field(&mut &b"HESSFIELD v1 n=1 shape=3,3 h=1 origin=0,0 kind=box\n\x00"[..]).is_err());
    }
}
