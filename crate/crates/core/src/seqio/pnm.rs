//! Netpbm-family codecs: PGM (P2/P5), PPM (P3/P6) and grayscale PFM (Pf).

pub(crate) enum Raster {
    Gray { width: usize, height: usize, maxval: u32, data: Vec<u32> },
    Rgb { width: usize, height: usize, maxval: u32, data: Vec<[u32; 3]> },
    /// Top row first (the file stores bottom row first).
    Float { width: usize, height: usize, data: Vec<f32> },
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a str, String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err("truncated header".into());
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| "non-ASCII header".into())
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, String> {
        let t = self.token()?;
        t.parse().map_err(|_| format!("bad {what} `{t}`"))
    }

    /// Consumes the single whitespace byte that ends a binary header.
    fn end_binary_header(&mut self) -> Result<&'a [u8], String> {
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err("missing whitespace after header".into()),
        }
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Raster, String> {
    if bytes.len() < 2 {
        return Err("file too short".into());
    }
    let magic = [bytes[0], bytes[1]];
    let mut h = Header { bytes, pos: 2 };
    let width: usize = h.number("width")?;
    let height: usize = h.number("height")?;
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    let pixels = width * height;

    if &magic == b"Pf" {
        let scale: f32 = h.number("scale")?;
        let body = h.end_binary_header()?;
        if body.len() < pixels * 4 {
            return Err(format!("expected {} data bytes, found {}", pixels * 4, body.len()));
        }
        let read = |c: &[u8]| {
            let b = [c[0], c[1], c[2], c[3]];
            if scale < 0.0 { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
        };
        let raw: Vec<f32> = body[..pixels * 4].chunks_exact(4).map(read).collect();
        let data = raw.chunks(width).rev().flatten().copied().collect();
        return Ok(Raster::Float { width, height, data });
    }

    let channels = match &magic {
        b"P2" | b"P5" => 1,
        b"P3" | b"P6" => 3,
        _ => return Err(format!("unsupported magic `{}`", String::from_utf8_lossy(&magic))),
    };
    let maxval: u32 = h.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let count = pixels * channels;
    let samples: Vec<u32> = if magic[1] == b'2' || magic[1] == b'3' {
        (0..count).map(|_| h.number::<u32>("sample")).collect::<Result<_, _>>()?
    } else {
        let body = h.end_binary_header()?;
        let width_bytes = if maxval < 256 { 1 } else { 2 };
        if body.len() < count * width_bytes {
            return Err(format!("expected {} data bytes, found {}", count * width_bytes, body.len()));
        }
        if width_bytes == 1 {
            body[..count].iter().map(|&b| b as u32).collect()
        } else {
            body[..count * 2]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                .collect()
        }
    };
    if let Some(s) = samples.iter().find(|&&s| s > maxval) {
        return Err(format!("sample {s} exceeds maxval {maxval}"));
    }
    Ok(if channels == 1 {
        Raster::Gray { width, height, maxval, data: samples }
    } else {
        let data = samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Raster::Rgb { width, height, maxval, data }
    })
}

/// Binary PGM; one byte per sample for `maxval < 256`, else two (big-endian).
pub(crate) fn encode_pgm(width: usize, height: usize, maxval: u16, codes: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    if maxval < 256 {
        out.extend(codes.iter().map(|&c| c as u8));
    } else {
        out.extend(codes.iter().flat_map(|c| c.to_be_bytes()));
    }
    out
}

/// Little-endian grayscale PFM, bottom row first.
pub(crate) fn encode_pfm(width: usize, height: usize, values: &[f32]) -> Vec<u8> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for row in values.chunks(width).rev() {
        out.extend(row.iter().flat_map(|v| v.to_le_bytes()));
    }
    debug_assert_eq!(values.len(), width * height);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_8_and_16_bit() {
        let codes = [0u16, 17, 255, 128, 3, 9];
        match decode(&encode_pgm(3, 2, 255, &codes)).unwrap() {
            Raster::Gray { width: 3, height: 2, maxval: 255, data } => {
                assert_eq!(data, codes.iter().map(|&c| c as u32).collect::<Vec<_>>())
            }
            _ => panic!("wrong raster"),
        }
        let codes = [0u16, 65535, 300, 1];
        match decode(&encode_pgm(2, 2, 65535, &codes)).unwrap() {
            Raster::Gray { maxval: 65535, data, .. } => assert_eq!(data, vec![0, 65535, 300, 1]),
            _ => panic!("wrong raster"),
        }
    }

    #[test]
    fn ascii_with_comments() {
        let src = b"P2\n# made by hand\n2 2\n# depth\n15\n0 15\n7 3\n";
        match decode(src).unwrap() {
            Raster::Gray { maxval: 15, data, .. } => assert_eq!(data, vec![0, 15, 7, 3]),
            _ => panic!("wrong raster"),
        }
        let ppm = b"P3 1 1 255 10 20 30";
        assert!(matches!(decode(ppm).unwrap(), Raster::Rgb { .. }));
    }

    #[test]
    fn pfm_keeps_row_order() {
        let vals = [1.5f32, -2.0, 0.25, 1e-7];
        match decode(&encode_pfm(2, 2, &vals)).unwrap() {
            Raster::Float { data, .. } => assert_eq!(data, vals.to_vec()),
            _ => panic!("wrong raster"),
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode(b"P5\n2 2\n255\n\x00\x01").is_err());
        assert!(decode(b"P7\n1 1\n255\n\x00").is_err());
        assert!(decode(b"P2 1 1 10 11").is_err());
        assert!(decode(b"P5 0 4 255 ").is_err());
        assert!(decode(b"P").is_err());
    }
}
