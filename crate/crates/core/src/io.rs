//! File formats: PLY point clouds in, PLY/OBJ meshes out, and a raw field
//! dump for external viewers.
//!
//! PLY support covers `ascii` and `binary_little_endian` with any mix of
//! scalar and list properties; only the `vertex` element is retained.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::surface::{EvalGrid, ScalarField, SurfaceMesh, MASK_SENTINEL};

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PLY encoding: {0}")]
    UnsupportedFormat(String),
    #[error("PLY body does not match header: {0}")]
    CountMismatch(String),
    #[error("vertex element lacks nx/ny/nz; estimate normals with an external tool first")]
    MissingNormals,
    #[error("PLY vertex {0} has a non-finite value")]
    NonFinite(usize),
    #[error("PLY vertex {0} has a zero-length normal")]
    InvalidNormal(usize),
    #[error("malformed PLY body: {0}")]
    MalformedBody(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    fn parse(name: &str) -> Option<Scalar> {
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

    fn decode_le(self, b: &[u8]) -> f64 {
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

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
}

fn header_err(msg: impl Into<String>) -> Error {
    PlyError::MalformedHeader(msg.into()).into()
}

fn read_header<R: BufRead>(r: &mut R) -> Result<Header> {
    let mut line = String::new();
    let mut next_line = |line: &mut String| -> Result<bool> {
        line.clear();
        Ok(r.read_line(line)? > 0)
    };
    if !next_line(&mut line)? || line.trim_end() != "ply" {
        return Err(header_err("missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        if !next_line(&mut line)? {
            return Err(header_err("unexpected end of header"));
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            None | Some("comment") | Some("obj_info") => continue,
            Some("end_header") => break,
            Some("format") => {
                let kind = tok.next().unwrap_or_default();
                encoding = Some(match kind {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(PlyError::UnsupportedFormat(
                            "binary_big_endian is not supported; convert to little endian or ascii"
                                .into(),
                        )
                        .into())
                    }
                    other => return Err(header_err(format!("unknown format '{other}'"))),
                });
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| header_err("element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| header_err(format!("element '{name}' has no valid count")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| header_err("property before any element"))?;
                let first = tok.next().ok_or_else(|| header_err("empty property"))?;
                let prop = if first == "list" {
                    let count = tok.next().and_then(Scalar::parse);
                    let item = tok.next().and_then(Scalar::parse);
                    match (count, item, tok.next()) {
                        (Some(count), Some(item), Some(_)) => Property::List { count, item },
                        _ => return Err(header_err(format!("bad list property: {}", line.trim()))),
                    }
                } else {
                    let ty = Scalar::parse(first)
                        .ok_or_else(|| header_err(format!("unknown property type '{first}'")))?;
                    let name = tok.next().ok_or_else(|| header_err("property without name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                el.properties.push(prop);
            }
            Some(other) => return Err(header_err(format!("unexpected header keyword '{other}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| header_err("missing format line"))?;
    Ok(Header { encoding, elements })
}

/// Source of numeric values for one element instance after another.
trait ValueSource {
    fn next_value(&mut self, ty: Scalar) -> Result<Option<f64>>;
    fn at_end(&mut self) -> Result<bool>;
}

struct AsciiSource<R> {
    reader: R,
    tokens: Vec<String>,
    pos: usize,
}

impl<R: BufRead> AsciiSource<R> {
    fn fill(&mut self) -> Result<bool> {
        while self.pos >= self.tokens.len() {
            let mut line = String::new();
            if self.reader.read_line(&mut line)? == 0 {
                return Ok(false);
            }
            self.tokens = line.split_whitespace().map(str::to_string).collect();
            self.pos = 0;
        }
        Ok(true)
    }
}

impl<R: BufRead> ValueSource for AsciiSource<R> {
    fn next_value(&mut self, _ty: Scalar) -> Result<Option<f64>> {
        if !self.fill()? {
            return Ok(None);
        }
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t.parse::<f64>()
            .map(Some)
            .map_err(|_| PlyError::MalformedBody(format!("cannot parse '{t}' as a number")).into())
    }

    fn at_end(&mut self) -> Result<bool> {
        Ok(!self.fill()?)
    }
}

struct BinarySource<R> {
    reader: R,
}

impl<R: Read> ValueSource for BinarySource<R> {
    fn next_value(&mut self, ty: Scalar) -> Result<Option<f64>> {
        let mut buf = [0u8; 8];
        let n = ty.size();
        match self.reader.read_exact(&mut buf[..n]) {
            Ok(()) => Ok(Some(ty.decode_le(&buf[..n]))),
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn at_end(&mut self) -> Result<bool> {
        let mut b = [0u8; 1];
        Ok(self.reader.read(&mut b)? == 0)
    }
}

fn read_vertices(header: &Header, src: &mut dyn ValueSource) -> Result<Vec<Vec<f64>>> {
    let mut vertices = Vec::new();
    for el in &header.elements {
        let keep = el.name == "vertex";
        for inst in 0..el.count {
            let mut row = Vec::new();
            for prop in &el.properties {
                let short = || {
                    Error::from(PlyError::CountMismatch(format!(
                        "element '{}' declares {} entries but data ends at entry {inst}",
                        el.name, el.count
                    )))
                };
                match prop {
                    Property::Scalar { ty, .. } => {
                        let v = src.next_value(*ty)?.ok_or_else(short)?;
                        if keep {
                            row.push(v);
                        }
                    }
                    Property::List { count, item } => {
                        let len = src.next_value(*count)?.ok_or_else(short)?;
                        if !(len >= 0.0) || len.fract() != 0.0 {
                            return Err(PlyError::MalformedBody(format!("bad list length {len}")).into());
                        }
                        for _ in 0..len as usize {
                            src.next_value(*item)?.ok_or_else(short)?;
                        }
                        if keep {
                            row.push(f64::NAN);
                        }
                    }
                }
            }
            if keep {
                vertices.push(row);
            }
        }
    }
    if !src.at_end()? {
        return Err(PlyError::CountMismatch("data continues past the declared element counts".into()).into());
    }
    Ok(vertices)
}

/// Parses a PLY stream into an oriented point cloud.
pub fn parse_ply<R: BufRead>(mut reader: R) -> Result<PointCloud> {
    let header = read_header(&mut reader)?;
    let vertex = header
        .elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| header_err("no vertex element"))?;
    let slot = |name: &str| {
        vertex.properties.iter().position(|p| match p {
            Property::Scalar { name: n, .. } => n == name,
            Property::List { .. } => false,
        })
    };
    let xyz = match (slot("x"), slot("y"), slot("z")) {
        (Some(x), Some(y), Some(z)) => [x, y, z],
        _ => return Err(header_err("vertex element lacks x/y/z")),
    };
    let nrm = match (slot("nx"), slot("ny"), slot("nz")) {
        (Some(x), Some(y), Some(z)) => [x, y, z],
        _ => return Err(PlyError::MissingNormals.into()),
    };
    if vertex.count == 0 {
        return Err(Error::Empty("PLY vertex element"));
    }

    let rows = match header.encoding {
        PlyEncoding::Ascii => read_vertices(
            &header,
            &mut AsciiSource {
                reader,
                tokens: Vec::new(),
                pos: 0,
            },
        )?,
        PlyEncoding::BinaryLittleEndian => read_vertices(&header, &mut BinarySource { reader })?,
    };

    let mut points = Vec::with_capacity(rows.len());
    let mut normals = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let p = Point3::new(row[xyz[0]], row[xyz[1]], row[xyz[2]]);
        let n = Point3::new(row[nrm[0]], row[nrm[1]], row[nrm[2]]);
        if !p.is_finite() || !n.is_finite() {
            return Err(PlyError::NonFinite(i).into());
        }
        let n = crate::geometry::UnitVector3::from_point(n).map_err(|_| PlyError::InvalidNormal(i))?;
        points.push(p);
        normals.push(n);
    }
    PointCloud::new(points, normals)
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let file = File::open(path)?;
    parse_ply(BufReader::new(file))
}

/// Writes positions and normals as 64-bit reals.
pub fn write_ply_cloud<W: Write>(mut w: W, cloud: &PointCloud, encoding: PlyEncoding) -> Result<()> {
    let fmt = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply\nformat {fmt} 1.0\nelement vertex {}", cloud.len())?;
    for name in ["x", "y", "z", "nx", "ny", "nz"] {
        writeln!(w, "property double {name}")?;
    }
    writeln!(w, "end_header")?;
    for (p, n) in cloud.points().iter().zip(cloud.normals()) {
        let row = [p.x, p.y, p.z, n.nx(), n.ny(), n.nz()];
        match encoding {
            PlyEncoding::Ascii => {
                writeln!(w, "{} {} {} {} {} {}", row[0], row[1], row[2], row[3], row[4], row[5])?
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in row {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_ply_cloud(path: impl AsRef<Path>, cloud: &PointCloud, encoding: PlyEncoding) -> Result<()> {
    write_ply_cloud(BufWriter::new(File::create(path)?), cloud, encoding)
}

pub fn write_mesh_ply<W: Write>(mut w: W, mesh: &SurfaceMesh) -> Result<()> {
    writeln!(
        w,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header",
        mesh.vertices.len(),
        mesh.triangles.len()
    )?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mesh_obj<W: Write>(mut w: W, mesh: &SurfaceMesh) -> Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Ply,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ply" => Some(MeshFormat::Ply),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

pub fn save_mesh(path: impl AsRef<Path>, mesh: &SurfaceMesh, format: MeshFormat) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        MeshFormat::Ply => write_mesh_ply(w, mesh),
        MeshFormat::Obj => write_mesh_obj(w, mesh),
    }
}

/// Field dump: a short text header terminated by `end\n`, then node values
/// as little-endian f32, x fastest.
///
/// ```text
/// gaussurf-field 1
/// dims <nx> <ny> <nz>
/// bbox <minx> <miny> <minz> <maxx> <maxy> <maxz>
/// sentinel <value>
/// end
/// ```
pub fn write_field_dump<W: Write>(mut w: W, grid: &EvalGrid, field: &ScalarField) -> Result<()> {
    if field.values.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            got: field.values.len(),
        });
    }
    let [nx, ny, nz] = grid.resolution();
    let b = grid.bbox();
    writeln!(w, "gaussurf-field 1")?;
    writeln!(w, "dims {nx} {ny} {nz}")?;
    writeln!(
        w,
        "bbox {} {} {} {} {} {}",
        b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z
    )?;
    writeln!(w, "sentinel {MASK_SENTINEL}")?;
    writeln!(w, "end")?;
    for v in &field.values {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed field dump: dims, bbox corners, sentinel, values.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub dims: [usize; 3],
    pub bbox: [f64; 6],
    pub sentinel: f64,
    pub values: Vec<f32>,
}

pub fn read_field_dump<R: BufRead>(mut r: R) -> Result<FieldDump> {
    let bad = |m: &str| Error::invalid(format!("field dump: {m}"));
    let mut dims = None;
    let mut bbox = None;
    let mut sentinel = None;
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim() != "gaussurf-field 1" {
        return Err(bad("bad magic"));
    }
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("missing end marker"));
        }
        let mut tok = line.split_whitespace();
        let nums = |tok: std::str::SplitWhitespace| -> Vec<f64> { tok.filter_map(|t| t.parse().ok()).collect() };
        match tok.next() {
            Some("dims") => {
                let v = nums(tok);
                if v.len() != 3 {
                    return Err(bad("dims"));
                }
                dims = Some([v[0] as usize, v[1] as usize, v[2] as usize]);
            }
            Some("bbox") => {
                let v = nums(tok);
                bbox = Some(v.try_into().map_err(|_| bad("bbox"))?);
            }
            Some("sentinel") => sentinel = nums(tok).first().copied(),
            Some("end") => break,
            _ => return Err(bad("unknown header line")),
        }
    }
    let dims = dims.ok_or_else(|| bad("missing dims"))?;
    let count = dims[0] * dims[1] * dims[2];
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 4 * count {
        return Err(bad("payload size does not match dims"));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(FieldDump {
        dims,
        bbox: bbox.ok_or_else(|| bad("missing bbox"))?,
        sentinel: sentinel.ok_or_else(|| bad("missing sentinel"))?,
        values,
    })
}

pub fn save_field_dump(path: impl AsRef<Path>, grid: &EvalGrid, field: &ScalarField) -> Result<()> {
    write_field_dump(BufWriter::new(File::create(path)?), grid, field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &[u8]) -> Result<PointCloud> {
        parse_ply(s)
    }

    #[test]
    fn one_vertex_ascii() {
        let src = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nproperty float nz\nend_header\n1 2 3 0 0 2\n";
        let cloud = parse(src).unwrap();
        assert_eq!(cloud.points(), &[Point3::new(1.0, 2.0, 3.0)]);
        assert_eq!(cloud.normals()[0].nz(), 1.0);
    }

    #[test]
    fn missing_normals() {
        let src = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        assert!(matches!(parse(src), Err(Error::Ply(PlyError::MissingNormals))));
    }

    #[test]
    fn count_mismatch() {
        let short = b"ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nproperty float nz\nend_header\n1 2 3 0 0 1\n";
        assert!(matches!(parse(short), Err(Error::Ply(PlyError::CountMismatch(_)))));
        let long = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nproperty float nz\nend_header\n1 2 3 0 0 1\n4 5 6 0 0 1\n";
        assert!(matches!(parse(long), Err(Error::Ply(PlyError::CountMismatch(_)))));
    }

    #[test]
    fn header_problems() {
        assert!(matches!(parse(b"plx\n"), Err(Error::Ply(PlyError::MalformedHeader(_)))));
        let be = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse(be), Err(Error::Ply(PlyError::UnsupportedFormat(_)))));
        let no_end = b"ply\nformat ascii 1.0\nelement vertex 1\n";
        assert!(matches!(parse(no_end), Err(Error::Ply(PlyError::MalformedHeader(_)))));
    }

    #[test]
    fn non_finite_rejected() {
        let src = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nproperty float nz\nend_header\nnan 2 3 0 0 1\n";
        assert!(matches!(parse(src), Err(Error::Ply(PlyError::NonFinite(0)))));
    }

    #[test]
    fn binary_with_faces_and_mixed_types() {
        let mut buf = b"ply\nformat binary_little_endian 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty double nx\nproperty double ny\nproperty double nz\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for (p, n) in [([0f32, 0.0, 1.0], [0f64, 0.0, 1.0]), ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])] {
            for v in p {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.push(200);
            for v in n {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf.push(3);
        for i in [0i32, 1, 0] {
            buf.extend_from_slice(&i.to_le_bytes());
        }
        let cloud = parse(&buf).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.points()[1], Point3::new(1.0, 0.0, 0.0));
        assert_eq!(cloud.normals()[1].nx(), 1.0);
    }

    #[test]
    fn field_dump_round_trip() {
        let pts = [Point3::ORIGIN, Point3::new(1.0, 1.0, 1.0)];
        let grid = crate::surface::build_grid(&pts, [3, 4, 5], 10.0, 0.0).unwrap();
        let field = ScalarField {
            values: (0..60).map(|i| i as f64 * 0.5).collect(),
        };
        let mut bytes = Vec::new();
        write_field_dump(&mut bytes, &grid, &field).unwrap();
        let dump = read_field_dump(bytes.as_slice()).unwrap();
        assert_eq!(dump.dims, [3, 4, 5]);
        assert_eq!(dump.sentinel, MASK_SENTINEL);
        assert_eq!(dump.values[7], 3.5);
        assert_eq!(dump.bbox, [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }
}
