//! Fixed-column CSV emitters. Numbers use Rust's shortest round-trip
//! formatting so that parsing a cell gives back the exact double.

use crate::io::touchstone::ZSample;
use crate::response::SweepRow;

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        x.to_string()
    }
}

pub const SWEEP_HEADER: &str = "network,L_J_nH,f_qb_GHz,abs_re_s_qb,Q_qb,T1_ns,flagged";

pub fn sweep_rows(network: &str, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let cells = match &r.pole {
            Some(p) => [num(p.f_qb), num(p.xi_qb.abs()), num(p.q_qb), num(p.t1)],
            None => ["nan".into(), "nan".into(), "nan".into(), "nan".into()],
        };
        out.push_str(&format!("{network},{},{},{}\n", num(r.lj), cells.join(","), r.flagged));
    }
    out
}

pub const IMPEDANCE_HEADER: &str = "f_GHz,re_Z,im_Z";

/// `S_pp = 1` rows are written with an `inf` sentinel in both columns.
pub fn impedance_table(samples: &[ZSample]) -> String {
    let mut out = format!("{IMPEDANCE_HEADER}\n");
    for s in samples {
        match s.z {
            Some(z) => out.push_str(&format!("{},{},{}\n", num(s.f_ghz), num(z.re), num(z.im))),
            None => out.push_str(&format!("{},inf,inf\n", num(s.f_ghz))),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.705212e9, -2.2e-308, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
