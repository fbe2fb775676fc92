//! OBJ and PLY readers and writers.
//!
//! OBJ support covers `v x y z` and `f i j k` records (1-based indices);
//! everything else is ignored. PLY covers ascii and binary little-endian
//! files with a `vertex` element (x, y, z and optional red, green, blue)
//! and a `face` element carrying a `vertex_indices` list.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, TriangleMesh};

/// Loads an OBJ or PLY file, chosen by extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let mesh = match ext.as_str() {
        "obj" => {
            let text = std::str::from_utf8(&bytes).map_err(|e| MeshError::Parse {
                format: "obj",
                record: 0,
                message: e.to_string(),
            })?;
            parse_obj(text)?
        }
        "ply" => parse_ply(&bytes)?,
        other => return Err(MeshError::UnsupportedFormat(other.to_string())),
    };
    if mesh.is_empty() {
        return Err(MeshError::NoTriangles);
    }
    Ok(mesh)
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let err = |message: String| MeshError::Parse {
            format: "obj",
            record: lineno + 1,
            message,
        };
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| err(format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|t| {
                        // accept `i`, `i/t` and `i/t/n`; only the position index matters
                        let head = t.split('/').next().unwrap_or(t);
                        match head.parse::<usize>() {
                            Ok(i) if i >= 1 => Ok(i - 1),
                            _ => Err(err(format!("bad face index {t:?}"))),
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(err(format!("only triangles are supported, got {} indices", idx.len())));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_obj(mut out: impl Write, mesh: &TriangleMesh) -> std::io::Result<()> {
    for v in mesh.vertices() {
        // `{}` on f64 prints the shortest string that round-trips exactly
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn save_obj(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<(), MeshError> {
    write_file(path.as_ref(), |w| write_obj(w, mesh))
}

/// Writes binary little-endian PLY with double coordinates and uchar colors when present.
pub fn write_ply(mut out: impl Write, mesh: &TriangleMesh) -> std::io::Result<()> {
    let colors = mesh.vertex_colors();
    writeln!(out, "ply")?;
    writeln!(out, "format binary_little_endian 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertex_count())?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property double {axis}")?;
    }
    if colors.is_some() {
        for c in ["red", "green", "blue"] {
            writeln!(out, "property uchar {c}")?;
        }
    }
    writeln!(out, "element face {}", mesh.triangle_count())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    for (i, v) in mesh.vertices().iter().enumerate() {
        for c in v.coords.iter() {
            out.write_all(&c.to_le_bytes())?;
        }
        if let Some(colors) = colors {
            for c in colors[i] {
                out.write_all(&[(c.clamp(0.0, 1.0) * 255.0).round() as u8])?;
            }
        }
    }
    for t in mesh.triangles() {
        out.write_all(&[3u8])?;
        for &i in t {
            out.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_ply(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<(), MeshError> {
    write_file(path.as_ref(), |w| write_ply(w, mesh))
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), MeshError> {
    let io_err = |source| MeshError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    body(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
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
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(Scalar, String),
    List(Scalar, Scalar, String),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLittleEndian,
}

/// Source of property values, either whitespace tokens or raw little-endian bytes.
trait ValueSource {
    fn read(&mut self, ty: Scalar) -> Result<f64, String>;
}

struct AsciiSource<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl ValueSource for AsciiSource<'_> {
    fn read(&mut self, _ty: Scalar) -> Result<f64, String> {
        let tok = self.tokens.next().ok_or("unexpected end of data")?;
        tok.parse::<f64>().map_err(|e| format!("bad value {tok:?}: {e}"))
    }
}

struct BinarySource<'a> {
    data: &'a [u8],
    pos: usize,
}

impl ValueSource for BinarySource<'_> {
    fn read(&mut self, ty: Scalar) -> Result<f64, String> {
        let n = ty.size();
        let bytes = self
            .data
            .get(self.pos..self.pos + n)
            .ok_or("unexpected end of data")?;
        self.pos += n;
        let four = || -> [u8; 4] { bytes[..4].try_into().expect("4 bytes") };
        Ok(match ty {
            Scalar::I8 => bytes[0] as i8 as f64,
            Scalar::U8 => bytes[0] as f64,
            Scalar::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(four()) as f64,
            Scalar::U32 => u32::from_le_bytes(four()) as f64,
            Scalar::F32 => f32::from_le_bytes(four()) as f64,
            Scalar::F64 => f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")),
        })
    }
}

pub fn parse_ply(bytes: &[u8]) -> Result<TriangleMesh, MeshError> {
    let err = |record: usize, message: String| MeshError::Parse {
        format: "ply",
        record,
        message,
    };

    let (elements, encoding, body_start) = parse_ply_header(bytes)?;
    let body = &bytes[body_start..];

    let mut vertices = Vec::new();
    let mut colors: Option<Vec<[f64; 3]>> = None;
    let mut triangles = Vec::new();

    let text;
    let mut ascii;
    let mut binary;
    let source: &mut dyn ValueSource = match encoding {
        Encoding::Ascii => {
            text = std::str::from_utf8(body).map_err(|e| err(0, e.to_string()))?;
            ascii = AsciiSource {
                tokens: text.split_ascii_whitespace(),
            };
            &mut ascii
        }
        Encoding::BinaryLittleEndian => {
            binary = BinarySource { data: body, pos: 0 };
            &mut binary
        }
    };

    let mut record = 0usize;
    for element in &elements {
        let prop_index = |name: &str| {
            element.properties.iter().position(|p| match p {
                Property::Scalar(_, n) | Property::List(_, _, n) => n == name,
            })
        };
        match element.name.as_str() {
            "vertex" => {
                let xyz = ["x", "y", "z"].map(prop_index);
                let [Some(ix), Some(iy), Some(iz)] = xyz else {
                    return Err(err(record, "vertex element lacks x/y/z".into()));
                };
                let rgb = ["red", "green", "blue"].map(prop_index);
                let rgb = match rgb {
                    [Some(r), Some(g), Some(b)] => Some([r, g, b]),
                    _ => None,
                };
                let mut cols = rgb.map(|_| Vec::with_capacity(element.count));
                vertices.reserve(element.count);
                let mut values = vec![0.0; element.properties.len()];
                for _ in 0..element.count {
                    record += 1;
                    for (k, prop) in element.properties.iter().enumerate() {
                        values[k] = read_property(source, prop).map_err(|m| err(record, m))?;
                    }
                    vertices.push(Point3::new(values[ix], values[iy], values[iz]));
                    if let (Some(idx), Some(cols)) = (rgb, cols.as_mut()) {
                        let mut c = [0.0; 3];
                        for (ch, &i) in idx.iter().enumerate() {
                            let Property::Scalar(ty, _) = element.properties[i] else {
                                return Err(err(record, "color must be a scalar".into()));
                            };
                            c[ch] = match ty {
                                Scalar::F32 | Scalar::F64 => values[i],
                                Scalar::U16 => values[i] / 65535.0,
                                _ => values[i] / 255.0,
                            };
                        }
                        cols.push(c);
                    }
                }
                colors = cols;
            }
            "face" => {
                let list = prop_index("vertex_indices").or_else(|| prop_index("vertex_index"));
                let Some(li) = list else {
                    return Err(err(record, "face element lacks vertex_indices".into()));
                };
                triangles.reserve(element.count);
                for _ in 0..element.count {
                    record += 1;
                    for (k, prop) in element.properties.iter().enumerate() {
                        if k != li {
                            skip_property(source, prop).map_err(|m| err(record, m))?;
                            continue;
                        }
                        let Property::List(count_ty, item_ty, _) = prop else {
                            return Err(err(record, "vertex_indices must be a list".into()));
                        };
                        let n = source.read(*count_ty).map_err(|m| err(record, m))? as usize;
                        if n != 3 {
                            return Err(err(record, format!("only triangles are supported, got {n} indices")));
                        }
                        let mut tri = [0usize; 3];
                        for slot in &mut tri {
                            let v = source.read(*item_ty).map_err(|m| err(record, m))?;
                            if v < 0.0 {
                                return Err(err(record, format!("negative index {v}")));
                            }
                            *slot = v as usize;
                        }
                        triangles.push(tri);
                    }
                }
            }
            _ => {
                for _ in 0..element.count {
                    record += 1;
                    for prop in &element.properties {
                        skip_property(source, prop).map_err(|m| err(record, m))?;
                    }
                }
            }
        }
    }

    let mesh = TriangleMesh::new(vertices, triangles)?;
    match colors {
        Some(c) => mesh.with_colors(c),
        None => Ok(mesh),
    }
}

fn read_property(source: &mut dyn ValueSource, prop: &Property) -> Result<f64, String> {
    match prop {
        Property::Scalar(ty, _) => source.read(*ty),
        Property::List(..) => {
            skip_property(source, prop)?;
            Ok(0.0)
        }
    }
}

fn skip_property(source: &mut dyn ValueSource, prop: &Property) -> Result<(), String> {
    match prop {
        Property::Scalar(ty, _) => source.read(*ty).map(|_| ()),
        Property::List(count_ty, item_ty, _) => {
            let n = source.read(*count_ty)? as usize;
            for _ in 0..n {
                source.read(*item_ty)?;
            }
            Ok(())
        }
    }
}

fn parse_ply_header(bytes: &[u8]) -> Result<(Vec<Element>, Encoding, usize), MeshError> {
    let err = |record: usize, message: String| MeshError::Parse {
        format: "ply",
        record,
        message,
    };
    let mut pos = 0usize;
    let mut lineno = 0usize;
    let mut next_line = || -> Option<(usize, String)> {
        if pos >= bytes.len() {
            return None;
        }
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .unwrap_or(bytes.len());
        let line = String::from_utf8_lossy(&bytes[pos..end]).trim_end_matches('\r').to_string();
        pos = (end + 1).min(bytes.len());
        lineno += 1;
        Some((lineno, line))
    };

    match next_line() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(err(1, "missing 'ply' magic".into())),
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let Some((n, line)) = next_line() else {
            return Err(err(lineno, "header ends without end_header".into()));
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => encoding = Some(Encoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(Encoding::BinaryLittleEndian),
            ["format", other, ..] => return Err(MeshError::UnsupportedFormat(format!("ply {other}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| err(n, format!("bad element count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count_ty, item_ty, name] => {
                let (Some(c), Some(i)) = (Scalar::parse(count_ty), Scalar::parse(item_ty)) else {
                    return Err(err(n, format!("unknown list types {count_ty} {item_ty}")));
                };
                elements
                    .last_mut()
                    .ok_or_else(|| err(n, "property before element".into()))?
                    .properties
                    .push(Property::List(c, i, name.to_string()));
            }
            ["property", ty, name] => {
                let ty = Scalar::parse(ty).ok_or_else(|| err(n, format!("unknown type {ty}")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| err(n, "property before element".into()))?
                    .properties
                    .push(Property::Scalar(ty, name.to_string()));
            }
            ["end_header"] => break,
            _ => return Err(err(n, format!("unrecognized header line {line:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| err(lineno, "missing format line".into()))?;
    Ok((elements, encoding, pos))
}
