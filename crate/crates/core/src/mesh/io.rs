//! Wavefront OBJ and Stanford PLY readers and writers.
//!
//! Only geometry is handled: vertex positions and polygonal faces (fan
//! triangulated). PLY input may be `ascii` or `binary_little_endian`; output
//! is always ASCII. Floats are written with Rust's shortest round-trip
//! formatting, so write → read is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point, TriangleMesh};
use crate::error::{Error, Result};

pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match ext.as_deref() {
        Some("obj") => {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::format(path.display().to_string(), "OBJ is not UTF-8"))?;
            parse_obj(&text)
        }
        Some("ply") => parse_ply(&bytes),
        _ => Err(Error::format(
            path.display().to_string(),
            "unsupported mesh extension (expected .obj or .ply)",
        )),
    }
}

pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("ply") => to_ply(mesh),
        _ => to_obj(mesh),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .take(3)
                    .map(|p| p.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::format(format!("obj line {}", lineno + 1), e.to_string()))?;
                if coords.len() != 3 {
                    return Err(Error::format(
                        format!("obj line {}", lineno + 1),
                        "vertex needs 3 coordinates",
                    ));
                }
                vertices.push(Point::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for p in parts {
                    let first = p.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| {
                        Error::format(format!("obj line {}", lineno + 1), "bad face index")
                    })?;
                    let resolved = if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        i - 1
                    };
                    if resolved < 0 {
                        return Err(Error::format(
                            format!("obj line {}", lineno + 1),
                            "face index out of range",
                        ));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(Error::format(
                        format!("obj line {}", lineno + 1),
                        "face needs at least 3 vertices",
                    ));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn to_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn to_ply(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.num_vertices(),
        mesh.num_triangles()
    );
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

pub fn parse_ply(bytes: &[u8]) -> Result<TriangleMesh> {
    let err = |m: &str| Error::format("ply header", m);
    let header_end = find_subslice(bytes, b"end_header")
        .ok_or_else(|| err("missing end_header"))?;
    let mut body_start = header_end + b"end_header".len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| err("not UTF-8"))?;
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(err("missing magic"));
    }
    let mut binary = false;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["format", "ascii", _] => binary = false,
            ["format", "binary_little_endian", _] => binary = true,
            ["format", other, _] => return Err(err(&format!("unsupported format {other}"))),
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| err("bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", c, i, name] => {
                let el = elements.last_mut().ok_or_else(|| err("property before element"))?;
                el.props.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(c).ok_or_else(|| err("bad list count type"))?,
                    item: Scalar::parse(i).ok_or_else(|| err("bad list item type"))?,
                });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| err("property before element"))?;
                el.props.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty).ok_or_else(|| err("bad property type"))?,
                });
            }
            _ => {}
        }
    }

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let body = &bytes[body_start..];
    let mut reader: Box<dyn ValueReader> = if binary {
        Box::new(BinaryReader { data: body, pos: 0 })
    } else {
        let text = std::str::from_utf8(body).map_err(|_| Error::format("ply body", "not UTF-8"))?;
        Box::new(AsciiReader {
            tokens: text.split_whitespace(),
        })
    };
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            let mut face: Vec<u32> = Vec::new();
            for p in &el.props {
                match p {
                    Property::Scalar { name, ty } => {
                        let v = reader.next(*ty)?;
                        match name.as_str() {
                            "x" => xyz[0] = v,
                            "y" => xyz[1] = v,
                            "z" => xyz[2] = v,
                            _ => {}
                        }
                    }
                    Property::List { name, count, item } => {
                        let n = reader.next(*count)? as usize;
                        for _ in 0..n {
                            let v = reader.next(*item)?;
                            if name == "vertex_indices" || name == "vertex_index" {
                                face.push(v as u32);
                            }
                        }
                    }
                }
            }
            match el.name.as_str() {
                "vertex" => vertices.push(Point::new(xyz[0], xyz[1], xyz[2])),
                "face" => {
                    if face.len() < 3 {
                        return Err(Error::format("ply face", "face needs at least 3 vertices"));
                    }
                    for k in 1..face.len() - 1 {
                        triangles.push([face[0], face[k], face[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

trait ValueReader {
    fn next(&mut self, ty: Scalar) -> Result<f64>;
}

struct AsciiReader<'a> {
    tokens: std::str::SplitWhitespace<'a>,
}

impl ValueReader for AsciiReader<'_> {
    fn next(&mut self, _ty: Scalar) -> Result<f64> {
        let tok = self
            .tokens
            .next()
            .ok_or_else(|| Error::format("ply body", "unexpected end of data"))?;
        tok.parse()
            .map_err(|_| Error::format("ply body", format!("bad number {tok:?}")))
    }
}

struct BinaryReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl ValueReader for BinaryReader<'_> {
    fn next(&mut self, ty: Scalar) -> Result<f64> {
        let end = self.pos + ty.size();
        let slice = self
            .data
            .get(self.pos..end)
            .ok_or_else(|| Error::format("ply body", "unexpected end of data"))?;
        self.pos = end;
        Ok(ty.read_le(slice))
    }
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn obj_round_trip_is_lossless() {
        let m = primitives::icosphere(0.37, 1);
        let back = parse_obj(&to_obj(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn ply_ascii_round_trip_is_lossless() {
        let m = primitives::prism(7, 0.2, &[0.0, 1.0]);
        let back = parse_ply(to_ply(&m).as_bytes()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn obj_quads_are_fan_triangulated() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn binary_ply_is_read() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for v in [[0f32, 0., 0.], [1., 0., 0.], [0., 1., 0.]] {
            for c in v {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        bytes.push(3);
        for i in [0i32, 1, 2] {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        let m = parse_ply(&bytes).unwrap();
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
        assert_eq!(m.vertices()[1], Point::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn truncated_ply_errors() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        assert!(parse_ply(text.as_bytes()).is_err());
    }
}
