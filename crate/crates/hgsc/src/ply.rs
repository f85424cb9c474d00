//! Lossless PLY import/export in the standard 3DGS vertex layout.
//!
//! Reads ascii and binary little-endian files; always writes binary little
//! endian. Property order on write is fixed: `x y z`, `f_dc_0..2`,
//! `f_rest_0..`, `opacity`, `scale_0..2`, `rot_0..3`, all 32-bit floats.
//! Normals (`nx ny nz`) found in 3DGS exports are accepted on read and
//! dropped. Higher-order SH values use the 3DGS `f_rest` layout: channel
//! major, i.e. all R band coefficients, then G, then B.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scene::{sh_degree_from_count, GaussianCloud, GaussianPrimitive};

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

struct Header {
    format: PlyFormat,
    vertex_count: usize,
    /// Property names of the `vertex` element, in file order.
    properties: Vec<String>,
}

fn parse_header(reader: &mut impl BufRead) -> Result<Header> {
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::PlyFormat("missing 'ply' magic line".into()));
    }

    let mut format = None;
    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut in_vertex_element = false;

    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::PlyFormat("unexpected end of header".into()));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | [] => {}
            ["format", fmt, _version] => {
                format = Some(match *fmt {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => {
                        return Err(Error::PlyFormat(format!("unsupported format '{other}'")))
                    }
                });
            }
            ["element", name, count] => {
                in_vertex_element = *name == "vertex";
                if in_vertex_element {
                    vertex_count = Some(count.parse::<usize>().map_err(|_| {
                        Error::PlyFormat(format!("bad vertex count '{count}'"))
                    })?);
                } else if vertex_count.is_none() {
                    return Err(Error::PlyFormat(format!(
                        "unsupported leading element '{name}'"
                    )));
                }
            }
            ["property", ty, name] if in_vertex_element => {
                if *ty != "float" && *ty != "float32" {
                    return Err(Error::PlyFormat(format!(
                        "property '{name}' has type '{ty}', expected float"
                    )));
                }
                properties.push((*name).to_string());
            }
            ["property", ..] => {} // property of a trailing non-vertex element
            other => {
                return Err(Error::PlyFormat(format!(
                    "unrecognized header line '{}'",
                    other.join(" ")
                )))
            }
        }
    }

    Ok(Header {
        format: format.ok_or_else(|| Error::PlyFormat("missing 'format' line".into()))?,
        vertex_count: vertex_count
            .ok_or_else(|| Error::PlyFormat("missing 'element vertex' line".into()))?,
        properties,
    })
}

/// Column indices of every property the codec consumes.
struct Layout {
    xyz: [usize; 3],
    f_dc: [usize; 3],
    f_rest: Vec<usize>,
    opacity: usize,
    scale: [usize; 3],
    rot: [usize; 4],
    sh_degree: u8,
}

impl Layout {
    fn resolve(props: &[String]) -> Result<Self> {
        let find = |name: &str| -> Result<usize> {
            props
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| Error::PlyFormat(format!("missing required property '{name}'")))
        };

        let mut f_rest = Vec::new();
        while props
            .iter()
            .any(|p| p == &format!("f_rest_{}", f_rest.len()))
        {
            f_rest.push(find(&format!("f_rest_{}", f_rest.len()))?);
        }
        if f_rest.len() % 3 != 0 {
            return Err(Error::PlyFormat(format!(
                "f_rest property count {} is not a multiple of 3",
                f_rest.len()
            )));
        }
        let triples = f_rest.len() / 3 + 1;
        let sh_degree = sh_degree_from_count(triples).ok_or_else(|| {
            Error::PlyFormat(format!(
                "{} f_rest properties do not correspond to an SH degree in 0..=3",
                f_rest.len()
            ))
        })?;

        Ok(Layout {
            xyz: [find("x")?, find("y")?, find("z")?],
            f_dc: [find("f_dc_0")?, find("f_dc_1")?, find("f_dc_2")?],
            f_rest,
            opacity: find("opacity")?,
            scale: [find("scale_0")?, find("scale_1")?, find("scale_2")?],
            rot: [find("rot_0")?, find("rot_1")?, find("rot_2")?, find("rot_3")?],
            sh_degree,
        })
    }
}

/// Load a 3DGS cloud. Quaternions are canonicalized; `sh_degree` is inferred
/// from the `f_rest` property count; the bounding box is computed.
pub fn load_ply(path: impl AsRef<Path>) -> Result<GaussianCloud> {
    let file = File::open(path.as_ref())?;
    let mut reader = BufReader::new(file);
    let header = parse_header(&mut reader)?;
    let layout = Layout::resolve(&header.properties)?;
    let n_props = header.properties.len();

    let mut rows: Vec<f32> = Vec::with_capacity(header.vertex_count * n_props);
    match header.format {
        PlyFormat::BinaryLittleEndian => {
            let mut buf = vec![0u8; header.vertex_count * n_props * 4];
            reader.read_exact(&mut buf).map_err(|_| {
                Error::PlyFormat("file truncated before end of vertex data".into())
            })?;
            rows.extend(
                buf.chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            );
        }
        PlyFormat::Ascii => {
            let mut body = String::new();
            reader.read_to_string(&mut body)?;
            for tok in body.split_whitespace().take(header.vertex_count * n_props) {
                rows.push(tok.parse::<f32>().map_err(|_| {
                    Error::PlyFormat(format!("bad ascii float '{tok}'"))
                })?);
            }
            if rows.len() < header.vertex_count * n_props {
                return Err(Error::PlyFormat(
                    "file truncated before end of vertex data".into(),
                ));
            }
        }
    }

    let b = layout.f_rest.len() / 3 + 1;
    let mut primitives = Vec::with_capacity(header.vertex_count);
    for index in 0..header.vertex_count {
        let row = &rows[index * n_props..(index + 1) * n_props];
        let get = |col: usize| row[col] as f64;

        let mut sh = Vec::with_capacity(b);
        sh.push([get(layout.f_dc[0]), get(layout.f_dc[1]), get(layout.f_dc[2])]);
        // f_rest is channel-major: all R coefficients, then G, then B
        for j in 0..b - 1 {
            sh.push([
                get(layout.f_rest[j]),
                get(layout.f_rest[(b - 1) + j]),
                get(layout.f_rest[2 * (b - 1) + j]),
            ]);
        }

        let fields_finite = row.iter().all(|v| v.is_finite());
        if !fields_finite {
            return Err(Error::PlyData {
                index,
                msg: "non-finite value".into(),
            });
        }

        let prim = GaussianPrimitive::new(
            Vector3::new(get(layout.xyz[0]), get(layout.xyz[1]), get(layout.xyz[2])),
            Vector3::new(
                get(layout.scale[0]),
                get(layout.scale[1]),
                get(layout.scale[2]),
            ),
            [
                get(layout.rot[0]),
                get(layout.rot[1]),
                get(layout.rot[2]),
                get(layout.rot[3]),
            ],
            get(layout.opacity),
            sh,
        )
        .map_err(|e| Error::PlyData {
            index,
            msg: e.to_string(),
        })?;
        primitives.push(prim);
    }

    GaussianCloud::new(primitives, layout.sh_degree)
}

/// Write a cloud as binary little-endian PLY in the fixed 3DGS property
/// order. `load_ply(save_ply(c))` reproduces `c` bit-exactly when every
/// attribute value of `c` is representable as f32.
pub fn save_ply(cloud: &GaussianCloud, path: impl AsRef<Path>) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::Argument("refusing to write an empty cloud".into()));
    }
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);

    let b = crate::scene::sh_coeff_count(cloud.sh_degree);
    let mut header = String::new();
    header.push_str("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    for name in ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"] {
        header.push_str(&format!("property float {name}\n"));
    }
    for i in 0..3 * (b - 1) {
        header.push_str(&format!("property float f_rest_{i}\n"));
    }
    header.push_str("property float opacity\n");
    for name in ["scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"] {
        header.push_str(&format!("property float {name}\n"));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes())?;

    let put = |w: &mut BufWriter<File>, v: f64| -> Result<()> {
        w.write_all(&(v as f32).to_le_bytes())?;
        Ok(())
    };
    for p in &cloud.primitives {
        for i in 0..3 {
            put(&mut w, p.position[i])?;
        }
        for c in 0..3 {
            put(&mut w, p.sh[0][c])?;
        }
        // channel-major f_rest
        for c in 0..3 {
            for j in 1..b {
                put(&mut w, p.sh[j][c])?;
            }
        }
        put(&mut w, p.opacity_logit)?;
        for i in 0..3 {
            put(&mut w, p.log_scale[i])?;
        }
        for c in p.rotation {
            put(&mut w, c)?;
        }
    }
    w.flush()?;
    Ok(())
}
