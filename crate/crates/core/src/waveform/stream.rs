use std::io::{BufRead, Read, Write};

use crate::config::pulse_hash;
use crate::error::WaveformError;
use crate::model::{Envelope, PulseShape};

/// AWG rate (samples/s).
pub const DEFAULT_SAMPLE_RATE: f64 = 1.25e9;
/// First line of the text format.
pub const TEXT_HEADER: &str = "# fastgate-stream v1";
/// First 8 bytes of the binary format.
pub const STREAM_MAGIC: &[u8; 8] = b"FGSTRM01";

/// Relative amplitudes at a fixed sample rate.
///
/// Sample `k` holds the envelope at the centre of `[k/rate, (k+1)/rate)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStream {
    pub rate: f64,
    pub samples: Vec<f64>,
    pub pulse_hash: [u8; 32],
}

/// Sample `pulse` at `rate`; `bits` rounds to `2^bits − 1` uniform levels.
pub fn compile(pulse: &PulseShape, rate: f64, bits: Option<u32>) -> Result<SampleStream, WaveformError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(WaveformError::Format(format!("sample rate must be positive, got {rate}")));
    }
    let min_edge = 2.0 / rate;
    if pulse.edge_time < min_edge * (1.0 - 1e-12) {
        return Err(WaveformError::EdgeTooShort {
            edge: pulse.edge_time,
            min: min_edge,
        });
    }
    if let Some(b) = bits {
        if !(1..=52).contains(&b) {
            return Err(WaveformError::Format(format!("quantization bits must be in 1..=52, got {b}")));
        }
    }
    let envelope = Envelope::from_segments(&pulse.expanded_segments(), pulse.edge_time);
    // The tolerance keeps exact products such as 1.59e-6 · 1.25e9 from rounding up.
    let n = (envelope.gate_time() * rate - 1e-9).ceil().max(0.0) as usize;
    let levels = bits.map(|b| ((1u64 << b) - 1) as f64);
    let samples = (0..n)
        .map(|k| {
            let v = envelope.value((k as f64 + 0.5) / rate).clamp(0.0, 1.0);
            match levels {
                Some(l) => (v * l).round() / l,
                None => v,
            }
        })
        .collect();
    Ok(SampleStream {
        rate,
        samples,
        pulse_hash: pulse_hash(pulse),
    })
}

impl SampleStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `Σ samples / rate` (s).
    pub fn area(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.rate
    }

    /// Header lines, then one sample per line in shortest round-trip form.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TEXT_HEADER}")?;
        writeln!(w, "# rate_hz {:?}", self.rate)?;
        writeln!(w, "# length {}", self.samples.len())?;
        writeln!(w, "# pulse_sha256 {}", hex::encode(self.pulse_hash))?;
        for s in &self.samples {
            writeln!(w, "{s:?}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, WaveformError> {
        let bad = |m: String| WaveformError::Format(m);
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String, WaveformError> {
            lines
                .next()
                .ok_or_else(|| bad(format!("missing {what}")))?
                .map_err(WaveformError::from)
        };
        if next("header")?.trim() != TEXT_HEADER {
            return Err(bad("not a fastgate text stream".into()));
        }
        let field = |line: String, key: &str| -> Result<String, WaveformError> {
            line.strip_prefix("# ")
                .and_then(|l| l.strip_prefix(key))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(format!("expected '# {key}' header line, got '{line}'")))
        };
        let rate: f64 = field(next("rate")?, "rate_hz")?
            .parse()
            .map_err(|e| bad(format!("rate: {e}")))?;
        let length: usize = field(next("length")?, "length")?
            .parse()
            .map_err(|e| bad(format!("length: {e}")))?;
        let hash_hex = field(next("hash")?, "pulse_sha256")?;
        let pulse_hash = decode_hash(&hash_hex)?;
        let mut samples = Vec::with_capacity(length);
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            samples.push(t.parse::<f64>().map_err(|e| bad(format!("sample {}: {e}", samples.len())))?);
        }
        if samples.len() != length {
            return Err(bad(format!("header says {length} samples, found {}", samples.len())));
        }
        Ok(SampleStream {
            rate,
            samples,
            pulse_hash,
        })
    }

    /// Magic, u64 length, f64 rate, 32-byte hash, then f64 samples; all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(STREAM_MAGIC)?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        w.write_all(&self.rate.to_le_bytes())?;
        w.write_all(&self.pulse_hash)?;
        for s in &self.samples {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, WaveformError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != STREAM_MAGIC {
            return Err(WaveformError::Format("not a fastgate binary stream".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let length = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let rate = f64::from_le_bytes(b8);
        let mut pulse_hash = [0u8; 32];
        r.read_exact(&mut pulse_hash)?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != 8 * length {
            return Err(WaveformError::Format(format!(
                "header says {length} samples, found {} bytes",
                body.len()
            )));
        }
        let samples = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(SampleStream {
            rate,
            samples,
            pulse_hash,
        })
    }
}

fn decode_hash(s: &str) -> Result<[u8; 32], WaveformError> {
    let bytes = hex::decode(s).map_err(|e| WaveformError::Format(format!("pulse hash: {e}")))?;
    bytes
        .try_into()
        .map_err(|_| WaveformError::Format("pulse hash must be 32 bytes".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Segment;
    use crate::presets;

    fn pulse_159() -> PulseShape {
        // Same shape as the high-fidelity gate with the centre stretched to 1.59 µs.
        let mut p = presets::high_fidelity_pulse();
        p.segments[2].duration += 1.59e-6 - p.gate_time();
        p
    }

    #[test]
    fn sample_count() {
        let s = compile(&pulse_159(), DEFAULT_SAMPLE_RATE, None).unwrap();
        assert_eq!(s.len(), 1988);
    }

    #[test]
    fn zero_pulse_is_all_zero() {
        let mut p = pulse_159();
        for s in &mut p.segments {
            s.amplitude = 0.0;
        }
        let s = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
        assert!(s.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_edge_rejected() {
        let mut p = pulse_159();
        p.edge_time = 1.0e-9;
        assert!(matches!(
            compile(&p, DEFAULT_SAMPLE_RATE, None),
            Err(WaveformError::EdgeTooShort { .. })
        ));
    }

    #[test]
    fn sub_sample_shift_is_visible() {
        let p = pulse_159();
        let mut q = p.clone();
        q.segments[0].duration += 0.2e-9;
        q.segments[1].duration -= 0.2e-9;
        let a = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
        let b = compile(&q, DEFAULT_SAMPLE_RATE, None).unwrap();
        assert_eq!(a.len(), b.len());
        assert_ne!(a.samples, b.samples);
    }

    #[test]
    fn area_matches_envelope() {
        let p = pulse_159();
        let s = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
        let exact = Envelope::from_segments(&p.expanded_segments(), p.edge_time).area();
        assert!((s.area() / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn quantization_levels() {
        let p = PulseShape {
            segments: vec![Segment::new(100e-9, 0.3), Segment::new(100e-9, 1.0)],
            ..pulse_159()
        };
        let s = compile(&p, DEFAULT_SAMPLE_RATE, Some(8)).unwrap();
        assert!(s.samples.iter().all(|v| ((v * 255.0).round() - v * 255.0).abs() < 1e-9));
    }

    #[test]
    fn formats_round_trip_bit_exact() {
        let s = compile(&pulse_159(), DEFAULT_SAMPLE_RATE, None).unwrap();
        let mut text = Vec::new();
        s.write_text(&mut text).unwrap();
        assert_eq!(SampleStream::read_text(&text[..]).unwrap(), s);
        let mut bin = Vec::new();
        s.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 8 + 8 + 8 + 32 + 8 * s.len());
        assert_eq!(SampleStream::read_binary(&bin[..]).unwrap(), s);
    }
}
