//! Point-cloud readers (ASCII PLY, OBJ vertices, XYZ text) and writers.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::PointCloud;
use crate::error::{Error, Result};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line_no: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, format!("line {line_no}: bad number `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, format!("line {line_no}: non-finite value")));
    }
    Ok(v)
}

/// Reads a cloud, choosing the format from the file extension
/// (`.ply`, `.obj`, anything else is treated as XYZ text).
pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("ply") => parse_ply(path, &text),
        Some("obj") => parse_obj(path, &text),
        _ => parse_xyz(path, &text),
    }
}

/// One `x y z` triple per line; blank lines and `#` comments are skipped.
pub fn parse_xyz(path: &Path, text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(path, format!("line {}: expected 3 coordinates", i + 1)));
        }
        points.push(Vector3::new(
            parse_f64(path, i + 1, toks[0])?,
            parse_f64(path, i + 1, toks[1])?,
            parse_f64(path, i + 1, toks[2])?,
        ));
    }
    Ok(PointCloud::new(points))
}

/// Only `v x y z` lines are read; faces and everything else are ignored.
pub fn parse_obj(path: &Path, text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("v") {
            continue;
        }
        let coords: Vec<&str> = toks.take(3).collect();
        if coords.len() < 3 {
            return Err(parse_err(path, format!("line {}: short vertex", i + 1)));
        }
        points.push(Vector3::new(
            parse_f64(path, i + 1, coords[0])?,
            parse_f64(path, i + 1, coords[1])?,
            parse_f64(path, i + 1, coords[2])?,
        ));
    }
    Ok(PointCloud::new(points))
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

pub fn parse_ply(path: &Path, text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(path, "missing `ply` magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut ascii = false;
    loop {
        let Some((i, line)) = lines.next() else {
            return Err(parse_err(path, "unterminated header"));
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", ..] => ascii = true,
            ["format", ..] => return Err(parse_err(path, "only ASCII PLY is supported")),
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| parse_err(path, format!("line {}: bad element count", i + 1)))?,
                properties: Vec::new(),
            }),
            ["property", "list", ..] => {
                if let Some(e) = elements.last_mut() {
                    e.properties.push("list".into());
                }
            }
            ["property", _, name] => match elements.last_mut() {
                Some(e) => e.properties.push(name.to_string()),
                None => return Err(parse_err(path, "property before element")),
            },
            ["end_header"] => break,
            _ => {}
        }
    }
    if !ascii {
        return Err(parse_err(path, "missing format line"));
    }

    let mut points = Vec::new();
    let mut normals = Vec::new();
    for element in &elements {
        let vertex = element.name == "vertex";
        let col = |n: &str| element.properties.iter().position(|p| p == n);
        let xyz = [col("x"), col("y"), col("z")];
        let nrm = [col("nx"), col("ny"), col("nz")];
        let has_normals = nrm.iter().all(Option::is_some);
        if vertex && xyz.iter().any(Option::is_none) {
            return Err(parse_err(path, "vertex element lacks x/y/z"));
        }
        for _ in 0..element.count {
            let Some((i, line)) = lines.next() else {
                return Err(parse_err(path, format!("truncated `{}` data", element.name)));
            };
            if !vertex {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let get = |c: Option<usize>| -> Result<f64> {
                let c = c.expect("checked above");
                let tok = toks
                    .get(c)
                    .ok_or_else(|| parse_err(path, format!("line {}: missing column", i + 1)))?;
                parse_f64(path, i + 1, tok)
            };
            points.push(Vector3::new(get(xyz[0])?, get(xyz[1])?, get(xyz[2])?));
            if has_normals {
                let n = Vector3::new(get(nrm[0])?, get(nrm[1])?, get(nrm[2])?);
                let len = n.norm();
                if len <= 0.0 {
                    return Err(parse_err(path, format!("line {}: zero normal", i + 1)));
                }
                normals.push(n / len);
            }
        }
    }
    if normals.is_empty() {
        Ok(PointCloud::new(points))
    } else {
        PointCloud::with_normals(points, normals)
    }
}

pub fn write_xyz<W: Write>(cloud: &PointCloud, mut out: W) -> io::Result<()> {
    for p in cloud.points() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

/// ASCII PLY with normals when the cloud has them.
pub fn write_ply<W: Write>(cloud: &PointCloud, mut out: W) -> io::Result<()> {
    writeln!(out, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    let normals = cloud.normals();
    if normals.is_some() {
        writeln!(out, "property double nx\nproperty double ny\nproperty double nz")?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        match normals {
            Some(ns) => {
                let n = ns[i];
                writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z)?
            }
            None => writeln!(out, "{} {} {}", p.x, p.y, p.z)?,
        }
    }
    Ok(())
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => write_ply(cloud, &mut buf)?,
        _ => write_xyz(cloud, &mut buf)?,
    }
    fs::write(path, buf)?;
    Ok(())
}
