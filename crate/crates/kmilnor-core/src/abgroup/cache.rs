//! On-disk cache of Smith normal forms, keyed by content hash.
//!
//! Enabled by setting a cache directory (the CLI wires `KMILNOR_CACHE_DIR`).
//! Files are versioned plain text, written atomically via rename, so
//! concurrent runs can share a directory.

use super::matrix::IntMatrix;
use super::snf::{smith_normal_form, Smith};
use num_bigint::BigInt;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

const FORMAT: &str = "kmilnor-snf 1";

static CACHE_DIR: OnceLock<Option<PathBuf>> = OnceLock::new();

/// Sets the cache directory once per process; later calls are ignored.
pub fn set_cache_dir(dir: Option<PathBuf>) {
    let _ = CACHE_DIR.set(dir);
}

pub fn init_from_env() {
    set_cache_dir(std::env::var_os("KMILNOR_CACHE_DIR").map(PathBuf::from));
}

fn cache_dir() -> Option<&'static Path> {
    CACHE_DIR.get().and_then(|d| d.as_deref())
}

fn content_key(m: &IntMatrix) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}x{};", m.rows(), m.cols()).as_bytes());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            h.update(m.at(i, j).to_string().as_bytes());
            h.update(b",");
        }
    }
    hex_string(&h.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_matrix(out: &mut String, label: &str, m: &IntMatrix) {
    out.push_str(label);
    out.push(' ');
    out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn store(path: &Path, smith: &Smith) -> std::io::Result<()> {
    let mut text = String::new();
    text.push_str(FORMAT);
    text.push('\n');
    let diag: Vec<String> = smith.diag.iter().map(|d| d.to_string()).collect();
    text.push_str(&format!("diag {}\n{}\n", smith.diag.len(), diag.join(" ")));
    write_matrix(&mut text, "u", &smith.u);
    write_matrix(&mut text, "uinv", &smith.u_inv);
    write_matrix(&mut text, "v", &smith.v);
    write_matrix(&mut text, "vinv", &smith.v_inv);
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

struct Reader<'a> {
    lines: std::str::Lines<'a>,
}

impl<'a> Reader<'a> {
    fn line(&mut self) -> Option<&'a str> {
        self.lines.next()
    }

    fn matrix(&mut self, label: &str) -> Option<IntMatrix> {
        let header = self.line()?;
        let mut parts = header.split_whitespace();
        if parts.next()? != label {
            return None;
        }
        let rows: usize = parts.next()?.parse().ok()?;
        let cols: usize = parts.next()?.parse().ok()?;
        let mut data = Vec::with_capacity(rows);
        for _ in 0..rows {
            let line = self.line()?;
            let row: Option<Vec<BigInt>> = line
                .split_whitespace()
                .map(|t| BigInt::from_str(t).ok())
                .collect();
            let row = row?;
            if row.len() != cols {
                return None;
            }
            data.push(row);
        }
        Some(IntMatrix::from_rows(cols, data))
    }
}

fn load(path: &Path, rows: usize, cols: usize) -> Option<Smith> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut r = Reader { lines: text.lines() };
    if r.line()? != FORMAT {
        return None;
    }
    let dline = r.line()?;
    let mut parts = dline.split_whitespace();
    if parts.next()? != "diag" {
        return None;
    }
    let n: usize = parts.next()?.parse().ok()?;
    let diag: Option<Vec<BigInt>> = r
        .line()?
        .split_whitespace()
        .map(|t| BigInt::from_str(t).ok())
        .collect();
    let diag = diag?;
    if diag.len() != n || n != rows.min(cols) {
        return None;
    }
    let u = r.matrix("u")?;
    let u_inv = r.matrix("uinv")?;
    let v = r.matrix("v")?;
    let v_inv = r.matrix("vinv")?;
    if u.rows() != rows || v.rows() != cols {
        return None;
    }
    let rank = diag.iter().take_while(|d| !num_traits::Zero::is_zero(*d)).count();
    Some(Smith {
        diag,
        rank,
        u,
        u_inv,
        v,
        v_inv,
    })
}

/// Smith normal form with optional disk caching.
pub fn smith_cached(m: &IntMatrix) -> Smith {
    let Some(dir) = cache_dir() else {
        return smith_normal_form(m);
    };
    let path = dir.join(format!("{}.snf", content_key(m)));
    if let Some(s) = load(&path, m.rows(), m.cols()) {
        return s;
    }
    let s = smith_normal_form(m);
    let _ = std::fs::create_dir_all(dir);
    let _ = store(&path, &s);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_disk() {
        let dir = std::env::temp_dir().join(format!("kmilnor-snf-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let m = IntMatrix::from_i64_rows(2, &[vec![2, 4], vec![6, 8]]);
        let s = smith_normal_form(&m);
        let path = dir.join("probe.snf");
        store(&path, &s).unwrap();
        let loaded = load(&path, 2, 2).expect("cache should load");
        assert_eq!(loaded.diag, s.diag);
        assert_eq!(loaded.u, s.u);
        assert_eq!(loaded.v_inv, s.v_inv);
        assert_eq!(loaded.rank, s.rank);
        std::fs::remove_dir_all(&dir).ok();
    }
}
