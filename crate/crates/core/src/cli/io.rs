//! Output files: iteration trace, density grid, state and certificate.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::discretization::{FeSpace, FieldVector};
use crate::optimizer::IterationRecord;
use crate::verifier::Certificate;
use crate::Error;

const STATE_MAGIC: &str = "GPSTATE";
const STATE_VERSION: u32 = 1;

/// `{:.16e}` keeps 17 significant digits, enough for an exact round trip.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> crate::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            context: format!("creating {}", dir.display()),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

pub fn read_file(path: &Path) -> crate::Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading {}", path.display()),
        source,
    })
}

pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut s = String::from("iter,energy,energy_error,tau,beta,grad_norm,fallback\n");
    for r in trace {
        let err = r.energy_error.map(num).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iter,
            num(r.energy),
            err,
            num(r.tau),
            num(r.beta),
            num(r.grad_norm),
            u8::from(r.fallback)
        );
    }
    s
}

/// `|u|²` at all `(n+1)²` mesh nodes, one grid row per line, after an
/// `nx ny L` header.
pub fn density_grid(space: &FeSpace, u: &FieldVector) -> String {
    let mesh = space.mesh();
    let side = mesh.subdivisions() + 1;
    let rho = space.density_on_grid(u);
    let mut s = format!("{side} {side} {}\n", mesh.half_width());
    for row in rho.chunks(side) {
        let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Stored discrete state.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredState {
    pub n: usize,
    pub half_width: f64,
    pub u: FieldVector,
}

/// Header `GPSTATE 1 n L`, then `re im` per interior node in row-major order.
pub fn state_text(space: &FeSpace, u: &FieldVector) -> String {
    let mesh = space.mesh();
    let mut s = format!(
        "{STATE_MAGIC} {STATE_VERSION} {} {}\n",
        mesh.subdivisions(),
        num(mesh.half_width())
    );
    for (a, b) in u.re().iter().zip(u.im()) {
        let _ = writeln!(s, "{} {}", num(*a), num(*b));
    }
    s
}

pub fn parse_state(text: &str) -> Result<StoredState, String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty state file")?.split_whitespace().collect();
    if header.len() != 4 || header[0] != STATE_MAGIC {
        return Err(format!("bad state header '{}'", header.join(" ")));
    }
    if header[1] != STATE_VERSION.to_string() {
        return Err(format!("unsupported state version {}", header[1]));
    }
    let n: usize = header[2].parse().map_err(|_| format!("bad subdivision count '{}'", header[2]))?;
    let half_width: f64 = header[3].parse().map_err(|_| format!("bad half width '{}'", header[3]))?;
    if n < 2 {
        return Err(format!("subdivision count {n} too small"));
    }
    let dofs = (n - 1) * (n - 1);
    let mut re = Vec::with_capacity(dofs);
    let mut im = Vec::with_capacity(dofs);
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |t: Option<&str>| -> Result<f64, String> {
            t.and_then(|t| t.parse().ok())
                .ok_or_else(|| format!("bad value on line {}", k + 2))
        };
        re.push(parse(it.next())?);
        im.push(parse(it.next())?);
        if it.next().is_some() {
            return Err(format!("extra values on line {}", k + 2));
        }
    }
    if re.len() != dofs {
        return Err(format!("expected {dofs} values, found {}", re.len()));
    }
    Ok(StoredState {
        n,
        half_width,
        u: FieldVector::from_parts(&re, &im),
    })
}

pub fn write_state(path: &Path, space: &FeSpace, u: &FieldVector) -> crate::Result<()> {
    write_file(path, &state_text(space, u))
}

pub fn read_state(path: &Path) -> crate::Result<StoredState> {
    parse_state(&read_file(path)?).map_err(|m| Error::StateFormat(format!("{}: {m}", path.display())))
}

pub fn certificate_text(c: &Certificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "verdict = {}", c.verdict);
    let _ = writeln!(s, "lambda = {}", num(c.lambda));
    let _ = writeln!(s, "residual = {}", num(c.residual_norm));
    let _ = writeln!(s, "alignment = {}", num(c.alignment));
    let gaps: Vec<String> = c.spectrum.iter().map(|&m| num(m - c.lambda)).collect();
    let spec: Vec<String> = c.spectrum.iter().map(|&m| num(m)).collect();
    let _ = writeln!(s, "spectrum = {}", spec.join(" "));
    let _ = writeln!(s, "gaps = {}", gaps.join(" "));
    s
}
