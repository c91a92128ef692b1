use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::{eightfold_images, ElectronIntegrals, Representation, Tensor4};
use crate::{Error, Result};

const DUPLICATE_TOL: f64 = 1e-10;
const WRITE_FLOOR: f64 = 1e-12;

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<ElectronIntegrals> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_fcidump(&text)
}

struct Header {
    norb: Option<usize>,
    nelec: Option<usize>,
    ms2: i64,
}

fn parse_header_text(text: &str, header: &mut Header, line: usize) -> Result<()> {
    let cleaned = text.replace("&FCI", " ").replace("&fci", " ").replace("&END", " ").replace("&end", " ");
    // Split into KEY=VALUE[,VALUE...] groups. Lists such as ORBSYM are skipped.
    let mut rest = cleaned.as_str();
    while let Some(eq) = rest.find('=') {
        let key = rest[..eq]
            .rsplit(|c: char| c.is_whitespace() || c == ',')
            .next()
            .unwrap_or("")
            .trim()
            .to_ascii_uppercase();
        let after = &rest[eq + 1..];
        let end = after.find('=').map(|i| {
            after[..i].rfind(|c: char| c.is_whitespace() || c == ',').unwrap_or(0)
        });
        let value = match end {
            Some(e) => &after[..e],
            None => after,
        };
        let first = value.split(|c: char| c == ',' || c.is_whitespace()).find(|t| !t.is_empty());
        let parse_int = |name: &str| -> Result<i64> {
            first
                .and_then(|t| t.trim().parse::<i64>().ok())
                .ok_or_else(|| Error::Parse { line, msg: format!("invalid value for {name}") })
        };
        match key.as_str() {
            "NORB" => {
                let v = parse_int("NORB")?;
                if v < 0 {
                    return Err(Error::Parse { line, msg: "NORB must be non-negative".into() });
                }
                header.norb = Some(v as usize);
            }
            "NELEC" => {
                let v = parse_int("NELEC")?;
                if v < 0 {
                    return Err(Error::Parse { line, msg: "NELEC must be non-negative".into() });
                }
                header.nelec = Some(v as usize);
            }
            "MS2" => header.ms2 = parse_int("MS2")?,
            _ => {}
        }
        rest = match end {
            Some(e) => &after[e..],
            None => "",
        };
    }
    Ok(())
}

fn parse_data_line(line: &str) -> Option<(f64, [i64; 4])> {
    let mut it = line.split_whitespace();
    let value = it.next()?.replace(['D', 'd'], "e").parse::<f64>().ok()?;
    let mut idx = [0i64; 4];
    for slot in &mut idx {
        *slot = it.next()?.parse().ok()?;
    }
    if it.next().is_some() {
        return None;
    }
    Some((value, idx))
}

/// Parse FCIDUMP text into restricted integrals.
///
/// The header is everything before `&END` or `/`, or before the first line
/// that reads as an integral record when no terminator is present.
pub fn parse_fcidump(text: &str) -> Result<ElectronIntegrals> {
    let lines: Vec<&str> = text.lines().collect();
    let mut header = Header { norb: None, nelec: None, ms2: 0 };
    let mut body_start = lines.len();
    let mut header_line = 1;
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper == "/" || upper == "&END" {
            body_start = i + 1;
            break;
        }
        if parse_data_line(line).is_some() {
            body_start = i;
            break;
        }
        header_line = i + 1;
        let terminated = upper.ends_with("&END") || upper.ends_with('/');
        let text = line.trim_end_matches('/');
        parse_header_text(text, &mut header, i + 1)?;
        if terminated {
            body_start = i + 1;
            break;
        }
    }
    let norb = header
        .norb
        .ok_or_else(|| Error::Parse { line: header_line, msg: "header is missing NORB".into() })?;
    let nelec = header
        .nelec
        .ok_or_else(|| Error::Parse { line: header_line, msg: "header is missing NELEC".into() })?;
    let ms2 = header.ms2;
    if (nelec as i64 + ms2) % 2 != 0 || ms2.unsigned_abs() as usize > nelec {
        return Err(Error::Parse {
            line: header_line,
            msg: format!("MS2={ms2} is inconsistent with NELEC={nelec}"),
        });
    }
    let n_alpha = ((nelec as i64 + ms2) / 2) as usize;
    let n_beta = ((nelec as i64 - ms2) / 2) as usize;
    if n_alpha > norb || n_beta > norb {
        return Err(Error::Parse {
            line: header_line,
            msg: format!("{nelec} electrons with MS2={ms2} do not fit in {norb} orbitals"),
        });
    }

    let n = norb;
    let mut h = DMatrix::zeros(n, n);
    let mut h_set = vec![false; n * n];
    let mut g = Tensor4::zeros(n);
    let mut g_set = vec![false; g.data().len()];
    let mut core = 0.0;
    let mut core_set = false;

    let put = |slot: &mut f64, set: &mut bool, v: f64, line: usize| -> Result<()> {
        if *set && (*slot - v).abs() > DUPLICATE_TOL {
            return Err(Error::Parse {
                line,
                msg: format!("conflicting duplicate entry ({} vs {v})", *slot),
            });
        }
        *slot = v;
        *set = true;
        Ok(())
    };

    for (i, raw) in lines.iter().enumerate().skip(body_start) {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        let lineno = i + 1;
        let (value, idx) = parse_data_line(line)
            .ok_or_else(|| Error::Parse { line: lineno, msg: format!("malformed record `{line}`") })?;
        if !value.is_finite() {
            return Err(Error::Parse { line: lineno, msg: "non-finite value".into() });
        }
        if idx.iter().any(|&k| k < 0 || k as usize > n) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("index out of range 0..={n} in `{line}`"),
            });
        }
        let [i1, j1, k1, l1] = idx.map(|k| k as usize);
        match (i1, j1, k1, l1) {
            (0, 0, 0, 0) => put(&mut core, &mut core_set, value, lineno)?,
            (a, b, 0, 0) if a > 0 && b > 0 => {
                let (a, b) = (a - 1, b - 1);
                for (x, y) in [(a, b), (b, a)] {
                    put(&mut h[(x, y)], &mut h_set[x * n + y], value, lineno)?;
                }
            }
            (a, b, c, d) if a > 0 && b > 0 && c > 0 && d > 0 => {
                for (p, q, r, s) in eightfold_images(a - 1, b - 1, c - 1, d - 1) {
                    let k = g.idx(p, q, r, s);
                    put(&mut g.data_mut()[k], &mut g_set[k], value, lineno)?;
                }
            }
            (a, 0, 0, 0) if a > 0 => {
                // Orbital energies; not part of the Hamiltonian.
            }
            _ => {
                return Err(Error::Parse { line: lineno, msg: format!("unrecognised index pattern `{line}`") })
            }
        }
    }

    Ok(ElectronIntegrals {
        n_orbitals: n,
        n_alpha,
        n_beta,
        core_energy: core,
        repr: Representation::Restricted { h, g },
    })
}

/// Render restricted integrals as FCIDUMP text (one representative per symmetry class).
pub fn format_fcidump(x: &ElectronIntegrals) -> Result<String> {
    let Representation::Restricted { h, g } = &x.repr else {
        return Err(Error::Unsupported("FCIDUMP output requires restricted integrals".into()));
    };
    let n = x.n_orbitals;
    let mut out = String::new();
    let ms2 = x.n_alpha as i64 - x.n_beta as i64;
    writeln!(out, " &FCI NORB={n},NELEC={},MS2={ms2},", x.n_electrons()).unwrap();
    write!(out, "  ORBSYM=").unwrap();
    for _ in 0..n {
        write!(out, "1,").unwrap();
    }
    writeln!(out, "\n  ISYM=1,\n &END").unwrap();
    let record = |out: &mut String, v: f64, i: usize, j: usize, k: usize, l: usize| {
        writeln!(out, "{v:24.16e} {i:4} {j:4} {k:4} {l:4}").unwrap();
    };
    for i in 0..n {
        for j in 0..=i {
            let ij = i * (i + 1) / 2 + j;
            for k in 0..n {
                for l in 0..=k {
                    if k * (k + 1) / 2 + l > ij {
                        continue;
                    }
                    let v = g.get(i, j, k, l);
                    if v.abs() > WRITE_FLOOR {
                        record(&mut out, v, i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = h[(i, j)];
            if v.abs() > WRITE_FLOOR {
                record(&mut out, v, i + 1, j + 1, 0, 0);
            }
        }
    }
    record(&mut out, x.core_energy, 0, 0, 0, 0);
    Ok(out)
}

pub fn write_fcidump(x: &ElectronIntegrals, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_fcidump(x)?)?;
    Ok(())
}
