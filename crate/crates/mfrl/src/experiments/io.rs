//! Output formats: JSON with floats at 17 significant digits (full f64
//! round-trip), plain CSV, and a compact binary network checkpoint.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::neural::{Matrix, Mlp, OutputActivation};

/// serde_json formatter that prints every float with 17 significant digits,
/// enough to reproduce the exact f64 on parse.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes to a JSON string with full-precision floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Writes full-precision JSON to a file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(to_json_string(value)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Writes a CSV file from a header and row-producing iterator. Floats use
/// the shortest exact representation.
pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

const CKPT_MAGIC: &[u8; 8] = b"MFRLCKPT";
const CKPT_VERSION: u32 = 1;

/// Binary network checkpoint: magic, version, activation tag, layer sizes,
/// then biases and row-major weights per layer as little-endian f64.
pub fn write_checkpoint(path: &Path, net: &Mlp) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CKPT_MAGIC)?;
    w.write_all(&CKPT_VERSION.to_le_bytes())?;
    let act: u32 = match net.output_activation {
        OutputActivation::Tanh => 0,
        OutputActivation::Identity => 1,
    };
    w.write_all(&act.to_le_bytes())?;
    w.write_all(&(net.layer_sizes.len() as u32).to_le_bytes())?;
    for &s in &net.layer_sizes {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    for layer in 0..net.weights.len() {
        for &b in &net.biases[layer] {
            w.write_all(&b.to_le_bytes())?;
        }
        for &x in &net.weights[layer].data {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_exact_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_exact_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint(path: &Path) -> Result<Mlp> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CKPT_MAGIC {
        return Err(Error::Config(format!("{} is not a checkpoint file", path.display())));
    }
    let version = read_exact_u32(&mut r)?;
    if version != CKPT_VERSION {
        return Err(Error::Config(format!("unsupported checkpoint version {version}")));
    }
    let output_activation = match read_exact_u32(&mut r)? {
        0 => OutputActivation::Tanh,
        1 => OutputActivation::Identity,
        other => return Err(Error::Config(format!("unknown activation tag {other}"))),
    };
    let n_sizes = read_exact_u32(&mut r)? as usize;
    if !(2..=16).contains(&n_sizes) {
        return Err(Error::Config(format!("implausible layer count {n_sizes}")));
    }
    let mut layer_sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        layer_sizes.push(read_exact_u64(&mut r)? as usize);
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for layer in 0..n_sizes - 1 {
        let fan_in = layer_sizes[layer];
        let fan_out = layer_sizes[layer + 1];
        let mut b = vec![0.0f64; fan_out];
        for slot in b.iter_mut() {
            *slot = read_exact_f64(&mut r)?;
        }
        let mut m = Matrix::zeros(fan_out, fan_in);
        for slot in m.data.iter_mut() {
            *slot = read_exact_f64(&mut r)?;
        }
        biases.push(b);
        weights.push(m);
    }
    let json = serde_json::json!({
        "layer_sizes": layer_sizes,
        "weights": weights,
        "biases": biases,
        "output_activation": match output_activation {
            OutputActivation::Tanh => "tanh",
            OutputActivation::Identity => "identity",
        },
    });
    Ok(serde_json::from_value(json)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn json_floats_carry_seventeen_significant_digits() {
        #[derive(Serialize)]
        struct Probe {
            theta: f64,
        }
        let s = to_json_string(&Probe { theta: 0.767_339_559 }).unwrap();
        // scientific notation with a 17-significant-digit mantissa
        let mantissa = s
            .trim_start_matches(r#"{"theta":"#)
            .split('e')
            .next()
            .unwrap()
            .chars()
            .filter(|c| c.is_ascii_digit())
            .count();
        assert_eq!(mantissa, 17, "got {s}");
        // round-trips to the exact bits
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["theta"].as_f64().unwrap(), 0.767_339_559);
        // one third has no short representation; 17 digits still round-trip
        let third = to_json_string(&Probe { theta: 1.0 / 3.0 }).unwrap();
        let back: serde_json::Value = serde_json::from_str(&third).unwrap();
        assert_eq!(back["theta"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("mfrl-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("actor_0.ckpt");
        let mut rng = StdRng::seed_from_u64(99);
        let net = Mlp::actor(2, 24, &mut rng).unwrap();
        write_checkpoint(&path, &net).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(net.layer_sizes, back.layer_sizes);
        assert_eq!(net.output_activation, back.output_activation);
        assert_eq!(net.weights, back.weights);
        assert_eq!(net.biases, back.biases);

        // not a checkpoint
        let bogus = dir.join("bogus.ckpt");
        std::fs::write(&bogus, b"definitely not").unwrap();
        assert!(read_checkpoint(&bogus).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
