//! FCIDUMP reader and writer.
//!
//! FCIDUMP stores chemist-ordered `(ij|kl)` with 1-based indices; internally
//! the same number lives at physicist slot `<ik|jl>`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{IntegralSet, OrbitalBasis};
use crate::{Error, Result};

/// Contents of an FCIDUMP file.
#[derive(Debug, Clone, PartialEq)]
pub struct Fcidump {
    pub integrals: IntegralSet,
    pub n_electrons: usize,
    pub ms2: i64,
}

impl Fcidump {
    pub fn n_alpha(&self) -> usize {
        ((self.n_electrons as i64 + self.ms2) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.n_electrons as i64 - self.ms2) / 2) as usize
    }
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<Fcidump> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text, path)
}

pub fn write_fcidump(dump: &Fcidump, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_fcidump(dump)).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

pub(crate) fn parse_fcidump(text: &str, path: &Path) -> Result<Fcidump> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    // Namelist header: everything up to `&END` or `/`.
    let mut header = String::new();
    let mut header_start = None;
    let mut terminated = false;
    for (no, line) in lines.by_ref() {
        let trimmed = line.trim();
        if header_start.is_none() {
            if trimmed.is_empty() {
                continue;
            }
            if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                return Err(parse_err(path, no, "expected `&FCI` namelist header"));
            }
            header_start = Some(no);
        }
        let upper = trimmed.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END").or_else(|| upper.find('/')) {
            header.push_str(&upper[..pos]);
            terminated = true;
            break;
        }
        header.push_str(&upper);
        header.push(' ');
    }
    let header_line = header_start.unwrap_or(1);
    if !terminated {
        return Err(parse_err(path, header_line, "unterminated namelist header"));
    }
    let header = header.trim_start_matches("&FCI");
    let key = |name: &str| -> Result<i64> {
        let mut found = None;
        for field in header.split(',') {
            if let Some((k, v)) = field.split_once('=') {
                if k.trim() == name {
                    let v = v.trim();
                    found = Some(
                        v.parse::<i64>()
                            .map_err(|_| parse_err(path, header_line, format!("{name}={v} is not an integer")))?,
                    );
                }
            }
        }
        found.ok_or_else(|| parse_err(path, header_line, format!("header lacks {name}")))
    };
    let norb = key("NORB")?;
    let nelec = key("NELEC")?;
    let ms2 = key("MS2").unwrap_or(0);
    if norb <= 0 || nelec < 0 {
        return Err(parse_err(path, header_line, "NORB must be positive and NELEC nonnegative"));
    }
    let n = norb as usize;
    let mut ints = IntegralSet::zeros(n);

    for (no, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(parse_err(path, no, format!("expected `value i j k l`, found {} fields", toks.len())));
        }
        let value =
            parse_float(toks[0]).ok_or_else(|| parse_err(path, no, format!("`{}` is not a number", toks[0])))?;
        if !value.is_finite() {
            return Err(parse_err(path, no, "non-finite integral"));
        }
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            let v: usize = tok.parse().map_err(|_| parse_err(path, no, format!("`{tok}` is not an orbital index")))?;
            if v > n {
                return Err(parse_err(path, no, format!("orbital index {v} exceeds NORB={n}")));
            }
            *slot = v;
        }
        match idx {
            [0, 0, 0, 0] => ints.e_nuc = value,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                ints.h[(i - 1, j - 1)] = value;
                ints.h[(j - 1, i - 1)] = value;
            }
            // orbital energies
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                ints.u.set_physicist_symmetric(i - 1, k - 1, j - 1, l - 1, value);
            }
            _ => return Err(parse_err(path, no, "unsupported index pattern")),
        }
    }
    ints.orbitals = OrbitalBasis::External;
    Ok(Fcidump { integrals: ints, n_electrons: nelec as usize, ms2 })
}

pub(crate) fn render_fcidump(dump: &Fcidump) -> String {
    let ints = &dump.integrals;
    let n = ints.n_spatial;
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(out, " &FCI NORB={},NELEC={},MS2={},", n, dump.n_electrons, dump.ms2);
    let _ = writeln!(out, "  ORBSYM={orbsym},");
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if i * (i + 1) / 2 + j < k * (k + 1) / 2 + l {
                        continue;
                    }
                    // (ij|kl) = <ik|jl>
                    let v = ints.u.get(i, k, j, l);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = ints.h[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{v:e} {} {} 0 0", i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", ints.e_nuc);
    out
}
