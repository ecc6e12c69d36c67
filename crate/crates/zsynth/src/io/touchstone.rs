//! Touchstone 1.x S-parameter files (RI/MA/DB, 1- and 3-port) and the
//! matched-port S→Z conversion.

use num_complex::Complex64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TouchstoneError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported port count {0} (1 or 3)")]
    Ports(usize),
    #[error("port index {port} out of range for a {n}-port")]
    PortIndex { port: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Ri,
    Ma,
    Db,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneData {
    /// GHz, strictly increasing.
    pub frequencies: Vec<f64>,
    /// Row-major `n × n` per frequency.
    pub s_params: Vec<Vec<Complex64>>,
    pub n_ports: usize,
    /// Ω
    pub z0: f64,
}

fn perr(line: usize, msg: impl Into<String>) -> TouchstoneError {
    TouchstoneError::Parse { line, msg: msg.into() }
}

/// Parses a Touchstone 1.x file with `n_ports` ports (taken from the file
/// extension by the caller).
pub fn parse(text: &str, n_ports: usize) -> Result<TouchstoneData, TouchstoneError> {
    if n_ports != 1 && n_ports != 3 {
        return Err(TouchstoneError::Ports(n_ports));
    }
    let mut scale = 1e9; // Hz per unit; default GHz
    let mut format = DataFormat::Ma;
    let mut z0 = 50.0;
    let mut seen_option = false;
    let mut tokens: Vec<(usize, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(opt) = line.strip_prefix('#') {
            if seen_option {
                return Err(perr(line_no, "second option line"));
            }
            seen_option = true;
            let words: Vec<String> = opt.split_whitespace().map(|w| w.to_ascii_uppercase()).collect();
            let mut k = 0;
            while k < words.len() {
                match words[k].as_str() {
                    "HZ" => scale = 1.0,
                    "KHZ" => scale = 1e3,
                    "MHZ" => scale = 1e6,
                    "GHZ" => scale = 1e9,
                    "S" => {}
                    "Y" | "Z" | "H" | "G" => return Err(perr(line_no, format!("parameter type {} not supported", words[k]))),
                    "RI" => format = DataFormat::Ri,
                    "MA" => format = DataFormat::Ma,
                    "DB" => format = DataFormat::Db,
                    "R" => {
                        k += 1;
                        z0 = words
                            .get(k)
                            .and_then(|w| w.parse::<f64>().ok())
                            .filter(|z| *z > 0.0)
                            .ok_or_else(|| perr(line_no, "bad reference impedance"))?;
                    }
                    w => return Err(perr(line_no, format!("unknown option {w:?}"))),
                }
                k += 1;
            }
            continue;
        }
        if line.starts_with('[') {
            return Err(perr(line_no, "Touchstone 2.0 keywords are not supported"));
        }
        for w in line.split_whitespace() {
            let v: f64 = w.parse().map_err(|_| perr(line_no, format!("not a number: {w:?}")))?;
            if !v.is_finite() {
                return Err(perr(line_no, format!("non-finite value {w:?}")));
            }
            tokens.push((line_no, v));
        }
    }
    let per = 1 + 2 * n_ports * n_ports;
    if tokens.len() % per != 0 {
        let line = tokens.last().map(|t| t.0).unwrap_or(0);
        return Err(perr(line, format!("incomplete record: {} values is not a multiple of {per}", tokens.len())));
    }
    let mut frequencies = Vec::new();
    let mut s_params = Vec::new();
    for rec in tokens.chunks(per) {
        let (line, f) = rec[0];
        let f_ghz = f * scale / 1e9;
        if let Some(&last) = frequencies.last() {
            if !(f_ghz > last) {
                return Err(perr(line, "frequencies must be strictly increasing"));
            }
        }
        frequencies.push(f_ghz);
        let m = rec[1..]
            .chunks(2)
            .map(|p| match format {
                DataFormat::Ri => Complex64::new(p[0].1, p[1].1),
                DataFormat::Ma => Complex64::from_polar(p[0].1, p[1].1.to_radians()),
                DataFormat::Db => Complex64::from_polar(10f64.powf(p[0].1 / 20.0), p[1].1.to_radians()),
            })
            .collect();
        s_params.push(m);
    }
    Ok(TouchstoneData { frequencies, s_params, n_ports, z0 })
}

/// Writes RI data in GHz with shortest round-trip numbers.
pub fn serialize(ts: &TouchstoneData) -> String {
    let mut out = format!("! {}-port S-parameters\n# GHz S RI R {}\n", ts.n_ports, ts.z0);
    for (f, m) in ts.frequencies.iter().zip(&ts.s_params) {
        out.push_str(&f.to_string());
        for (k, s) in m.iter().enumerate() {
            if ts.n_ports > 1 && k > 0 && k % ts.n_ports == 0 {
                out.push('\n');
            }
            out.push_str(&format!(" {} {}", s.re, s.im));
        }
        out.push('\n');
    }
    out
}

/// One sample of the converted impedance; `None` marks `S_pp = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZSample {
    pub f_ghz: f64,
    pub z: Option<Complex64>,
}

/// `Z = Z₀(1+S_pp)/(1−S_pp)` with every other port matched.
pub fn s_to_z(ts: &TouchstoneData, port: usize) -> Result<Vec<ZSample>, TouchstoneError> {
    if port >= ts.n_ports {
        return Err(TouchstoneError::PortIndex { port, n: ts.n_ports });
    }
    let idx = port * ts.n_ports + port;
    Ok(ts
        .frequencies
        .iter()
        .zip(&ts.s_params)
        .map(|(&f, m)| {
            let s = m[idx];
            let den = Complex64::new(1.0, 0.0) - s;
            let z = if den == Complex64::new(0.0, 0.0) { None } else { Some(ts.z0 * (1.0 + s) / den) };
            ZSample { f_ghz: f, z }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_short_and_reactive() {
        let text = "! test\n# GHz S RI R 50\n1.0 0 0\n2.0 -1 0\n3.0 0 1\n4.0 1 0\n";
        let ts = parse(text, 1).unwrap();
        let z = s_to_z(&ts, 0).unwrap();
        assert_eq!(z[0].z, Some(Complex64::new(50.0, 0.0)));
        assert_eq!(z[1].z, Some(Complex64::new(0.0, 0.0)));
        let zj = z[2].z.unwrap();
        assert!(zj.re.abs() < 1e-12 && (zj.im - 50.0).abs() < 1e-12);
        assert_eq!(z[3].z, None);
    }

    #[test]
    fn formats_and_units() {
        let ri = parse("# MHz S RI\n1000 0.5 0.5\n", 1).unwrap();
        let ma = parse("# MHz S MA\n1000 0.7071067811865476 45\n", 1).unwrap();
        let db = parse("# MHz S DB\n1000 -3.010299956639812 45\n", 1).unwrap();
        assert_eq!(ri.frequencies, vec![1.0]);
        for d in [&ma, &db] {
            assert!((d.s_params[0][0] - ri.s_params[0][0]).norm() < 1e-12);
        }
    }

    #[test]
    fn three_port_round_trip() {
        let mut text = String::from("# GHz S MA R 50\n");
        for f in 1..4 {
            text.push_str(&format!("{f} 0.1 10 0.2 20 0.3 30\n 0.4 40 0.5 50 0.6 60\n 0.7 70 0.8 80 0.9 90\n"));
        }
        let ts = parse(&text, 3).unwrap();
        assert_eq!(ts.s_params[0].len(), 9);
        let back = parse(&serialize(&ts), 3).unwrap();
        assert_eq!(back, ts);
        assert!(s_to_z(&ts, 3).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("# GHz S RI\n1 0 0\n2 x 0\n", 1).unwrap_err();
        assert_eq!(e, TouchstoneError::Parse { line: 3, msg: "not a number: \"x\"".into() });
        let e = parse("# GHz S RI\n2 0 0\n1 0 0\n", 1).unwrap_err();
        assert!(matches!(e, TouchstoneError::Parse { line: 3, .. }));
        assert!(parse("# GHz S RI\n1 0\n", 1).is_err());
        assert_eq!(parse("", 2), Err(TouchstoneError::Ports(2)));
    }
}
