//! File formats: 16-bit PGM depth, TUM trajectories and depth lists, ASCII
//! PLY meshes and schema-tagged CSV tables.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::sdf::{DepthFrame, Intrinsics, VolumeMesh};
use crate::synth::{SceneSpec, TimedPose};

/// Writes depth in meters as binary 16-bit PGM (millimeters, big-endian).
pub fn write_pgm16(path: &Path, width: usize, height: usize, depth_m: &[f64]) -> Result<()> {
    let mut buf = format!("P5\n{width} {height}\n65535\n").into_bytes();
    buf.reserve(width * height * 2);
    for &d in depth_m {
        let mm = (d * 1000.0).round().clamp(0.0, 65535.0) as u16;
        buf.extend_from_slice(&mm.to_be_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads a 16-bit PGM of millimeters into meters.
pub fn read_pgm16(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut data = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        // skip whitespace and comments
        while pos < data.len() && (data[pos].is_ascii_whitespace() || data[pos] == b'#') {
            if data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(path, "truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
    }
    pos += 1; // single whitespace after maxval
    if tokens[0] != "P5" {
        return Err(Error::parse(path, format!("expected P5 magic, found {}", tokens[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(path, format!("bad header value {s}")));
    let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if maxval != 65535 {
        return Err(Error::parse(path, format!("expected maxval 65535, found {maxval}")));
    }
    let body = data.get(pos..).unwrap_or_default();
    if body.len() < w * h * 2 {
        return Err(Error::parse(path, "pixel data shorter than header size"));
    }
    let depth = body
        .chunks_exact(2)
        .take(w * h)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 1000.0)
        .collect();
    Ok((w, h, depth))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push((i + 1, t.to_string()));
    }
    Ok(out)
}

/// TUM trajectory: `timestamp tx ty tz qx qy qz qw` per line.
pub fn write_trajectory(path: &Path, poses: &[TimedPose]) -> Result<()> {
    let mut s = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for p in poses {
        let [x, y, z] = p.position;
        let [qx, qy, qz, qw] = p.quaternion;
        s.push_str(&format!(
            "{:.6} {x:.9} {y:.9} {z:.9} {qx:.12} {qy:.12} {qz:.12} {qw:.12}\n",
            p.timestamp
        ));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TimedPose>> {
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, format!("line {lineno}: non-numeric field")))?;
        if v.len() != 8 {
            return Err(Error::parse(path, format!("line {lineno}: expected 8 fields, found {}", v.len())));
        }
        let q = [v[4], v[5], v[6], v[7]];
        let qn = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(qn > 1e-9) {
            return Err(Error::parse(path, format!("line {lineno}: zero quaternion")));
        }
        out.push(TimedPose {
            timestamp: v[0],
            position: [v[1], v[2], v[3]],
            quaternion: q.map(|c| c / qn),
        });
    }
    Ok(out)
}

/// Depth image list: `timestamp relative/path.pgm` per line.
pub fn read_depth_list(path: &Path) -> Result<Vec<(f64, PathBuf)>> {
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path)? {
        let mut it = line.split_whitespace();
        let (Some(t), Some(file), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(path, format!("line {lineno}: expected timestamp and file")));
        };
        let t: f64 = t
            .parse()
            .map_err(|_| Error::parse(path, format!("line {lineno}: bad timestamp")))?;
        out.push((t, PathBuf::from(file)));
    }
    Ok(out)
}

pub const DEPTH_LIST: &str = "depth.txt";
pub const TRAJECTORY: &str = "groundtruth.txt";
pub const SCENE_FILE: &str = "scene.toml";

/// Writes frames as `depth/NNNNNN.pgm`, the depth list, the trajectory and
/// the scene ground truth.
pub fn write_dataset(dir: &Path, scene: &SceneSpec, frames: &[DepthFrame]) -> Result<()> {
    let depth_dir = dir.join("depth");
    fs::create_dir_all(&depth_dir).map_err(|e| Error::io(&depth_dir, e))?;
    let mut list = String::from("# timestamp filename\n");
    let mut poses = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let name = format!("depth/{i:06}.pgm");
        write_pgm16(&dir.join(&name), f.width, f.height, &f.depth)?;
        list.push_str(&format!("{:.6} {name}\n", f.timestamp));
        poses.push(TimedPose::new(f.timestamp, &f.pose));
    }
    let list_path = dir.join(DEPTH_LIST);
    fs::write(&list_path, list).map_err(|e| Error::io(&list_path, e))?;
    write_trajectory(&dir.join(TRAJECTORY), &poses)?;
    let scene_path = dir.join(SCENE_FILE);
    fs::write(&scene_path, scene.to_toml()).map_err(|e| Error::io(&scene_path, e))
}

/// Loads a dataset directory. Each depth image takes the pose with the same
/// timestamp, or the nearest one within `tolerance` seconds when positive.
pub fn read_dataset(dir: &Path, intrinsics: &Intrinsics, gravity_up: Vec3, tolerance: f64) -> Result<Vec<DepthFrame>> {
    let list = read_depth_list(&dir.join(DEPTH_LIST))?;
    let poses = read_trajectory(&dir.join(TRAJECTORY))?;
    let mut frames = Vec::with_capacity(list.len());
    for (index, (t, file)) in list.iter().enumerate() {
        let pose = poses
            .iter()
            .filter(|p| (p.timestamp - t).abs() <= tolerance)
            .min_by(|a, b| (a.timestamp - t).abs().total_cmp(&(b.timestamp - t).abs()))
            .ok_or(Error::MissingPose {
                index,
                timestamp: *t,
            })?;
        let (width, height, depth) = read_pgm16(&dir.join(file))?;
        frames.push(DepthFrame {
            width,
            height,
            depth,
            intrinsics: *intrinsics,
            pose: pose.pose(),
            gravity_up,
            timestamp: *t,
        });
    }
    Ok(frames)
}

pub type Rgb = [u8; 3];

/// ASCII PLY of all meshes (vertices are not shared between volumes).
pub fn write_ply(path: &Path, meshes: &[&VolumeMesh], colors: Option<&dyn Fn(&VolumeMesh, usize) -> Rgb>) -> Result<()> {
    let nv: usize = meshes.iter().map(|m| m.vertices.len()).sum();
    let nf: usize = meshes.iter().map(|m| m.triangles.len()).sum();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let werr = |e| Error::io(path, e);
    let mut header = format!("ply\nformat ascii 1.0\nelement vertex {nv}\nproperty float x\nproperty float y\nproperty float z\n");
    if colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str(&format!("element face {nf}\nproperty list uchar int vertex_indices\nend_header\n"));
    w.write_all(header.as_bytes()).map_err(werr)?;
    for m in meshes {
        for (i, v) in m.vertices.iter().enumerate() {
            let p = v.position;
            match colors {
                Some(c) => {
                    let [r, g, b] = c(m, i);
                    writeln!(w, "{:.6} {:.6} {:.6} {r} {g} {b}", p.x, p.y, p.z)
                }
                None => writeln!(w, "{:.6} {:.6} {:.6}", p.x, p.y, p.z),
            }
            .map_err(werr)?;
        }
    }
    let mut base = 0usize;
    for m in meshes {
        for t in &m.triangles {
            writeln!(
                w,
                "3 {} {} {}",
                base + t[0] as usize,
                base + t[1] as usize,
                base + t[2] as usize
            )
            .map_err(werr)?;
        }
        base += m.vertices.len();
    }
    w.flush().map_err(werr)
}

/// Vertex and face counts of an ASCII PLY written by [`write_ply`].
pub fn read_ply_counts(path: &Path) -> Result<(usize, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut v = None;
    let mut f = None;
    for line in text.lines() {
        if let Some(n) = line.strip_prefix("element vertex ") {
            v = n.trim().parse().ok();
        } else if let Some(n) = line.strip_prefix("element face ") {
            f = n.trim().parse().ok();
        } else if line == "end_header" {
            break;
        }
    }
    match (v, f) {
        (Some(v), Some(f)) => Ok((v, f)),
        _ => Err(Error::parse(path, "missing PLY element counts")),
    }
}

/// CSV with a `# schema: <tag>` first line followed by a header row.
pub fn write_csv(path: &Path, schema: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufWriter::new(f);
    writeln!(buf, "# schema: {schema}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a schema-tagged CSV, failing when the tag differs from `schema`.
pub fn read_csv(path: &Path, schema: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let found = first.trim().strip_prefix("# schema:").map(str::trim).unwrap_or("<missing>");
    if found != schema {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: schema.to_string(),
            found: found.to_string(),
        });
    }
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}
