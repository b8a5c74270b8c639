//! A small OBJ subset: `v`, `vn`, `f`, `g`/`o`, `usemtl`, plus a sidecar
//! material table with one `name dr dg db sr sg sb shininess alpha` record
//! per line.

use std::collections::HashMap;
use std::path::Path;

use glam::DVec3;

use super::{face_normal, Material, Scene, SceneError, Triangle, Vertex};

const DEFAULT_NAME: &str = "default";

fn parse_err(line: usize, message: impl Into<String>) -> SceneError {
    SceneError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64, SceneError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn parse_vec3<'a>(
    toks: &mut impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<DVec3, SceneError> {
    let mut v = [0.0; 3];
    for c in &mut v {
        let tok = toks
            .next()
            .ok_or_else(|| parse_err(line, "expected three coordinates"))?;
        *c = parse_real(tok, line)?;
    }
    Ok(DVec3::from_array(v))
}

fn resolve_index(raw: &str, len: usize, line: usize) -> Result<usize, SceneError> {
    let i: i64 = raw
        .parse()
        .map_err(|_| parse_err(line, format!("bad index {raw:?}")))?;
    let resolved = match i {
        0 => None,
        i if i > 0 => Some(i as usize - 1),
        i => (len as i64 + i).try_into().ok(),
    };
    match resolved {
        Some(r) if r < len => Ok(r),
        _ => Err(parse_err(line, format!("index {i} out of range"))),
    }
}

/// Assigns dense ids to names in order of first use.
#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn id(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }
}

pub fn parse_material_table(text: &str) -> Result<HashMap<String, Material>, SceneError> {
    let mut table = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 9 {
            return Err(parse_err(
                line,
                format!("material record needs 9 fields, found {}", toks.len()),
            ));
        }
        let mut vals = [0.0; 8];
        for (v, tok) in vals.iter_mut().zip(&toks[1..]) {
            *v = parse_real(tok, line)?;
        }
        if vals[..6].iter().chain([&vals[7]]).any(|c| !(0.0..=1.0).contains(c)) {
            return Err(parse_err(line, "color and alpha values must lie in [0, 1]"));
        }
        if !(vals[6] > 0.0) {
            return Err(parse_err(line, "shininess must be positive"));
        }
        table.insert(
            toks[0].to_owned(),
            Material {
                diffuse: DVec3::new(vals[0], vals[1], vals[2]),
                specular: DVec3::new(vals[3], vals[4], vals[5]),
                shininess: vals[6],
                alpha: vals[7],
            },
        );
    }
    Ok(table)
}

/// Parses scene text. Materials named by `usemtl` but missing from `table`
/// fall back to [`Material::default`].
pub fn parse_scene(text: &str, table: &HashMap<String, Material>) -> Result<Scene, SceneError> {
    let mut positions: Vec<DVec3> = Vec::new();
    let mut normals: Vec<DVec3> = Vec::new();
    let mut objects = Interner::default();
    let mut materials = Interner::default();
    let mut group = DEFAULT_NAME.to_owned();
    let mut material = DEFAULT_NAME.to_owned();
    let mut triangles = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        let Some(keyword) = toks.next() else {
            continue;
        };
        match keyword {
            "v" => positions.push(parse_vec3(&mut toks, line)?),
            "vn" => normals.push(parse_vec3(&mut toks, line)?),
            "g" | "o" => {
                group = toks.collect::<Vec<_>>().join(" ");
                if group.is_empty() {
                    group = DEFAULT_NAME.to_owned();
                }
            }
            "usemtl" => {
                material = toks
                    .next()
                    .ok_or_else(|| parse_err(line, "usemtl needs a name"))?
                    .to_owned();
            }
            "f" => {
                let mut corners = Vec::new();
                for tok in toks {
                    let mut parts = tok.split('/');
                    let p = resolve_index(parts.next().unwrap_or(""), positions.len(), line)?;
                    let _uv = parts.next();
                    let n = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve_index(s, normals.len(), line)?),
                        _ => None,
                    };
                    if parts.next().is_some() {
                        return Err(parse_err(line, format!("malformed face corner {tok:?}")));
                    }
                    corners.push((p, n));
                }
                if corners.len() < 3 {
                    return Err(parse_err(line, "face needs at least three vertices"));
                }
                let object_id = objects.id(&group);
                let material_id = materials.id(&material);
                for k in 1..corners.len() - 1 {
                    let idx = [corners[0], corners[k], corners[k + 1]];
                    let fnorm = face_normal(
                        positions[idx[0].0],
                        positions[idx[1].0],
                        positions[idx[2].0],
                    );
                    let vertices = idx.map(|(p, n)| {
                        let normal = n
                            .map(|n| normals[n].normalize_or_zero())
                            .filter(|n| *n != DVec3::ZERO)
                            .unwrap_or(fnorm);
                        Vertex::new(positions[p], normal)
                    });
                    triangles.push(Triangle::new(vertices, material_id, object_id));
                }
            }
            "vt" | "s" | "mtllib" => {}
            other => return Err(parse_err(line, format!("unsupported keyword {other:?}"))),
        }
    }

    let materials = materials
        .names
        .iter()
        .map(|name| table.get(name).copied().unwrap_or_default())
        .collect();
    Scene::new(triangles, materials)
}

pub fn load_scene(path: &Path, material_table: Option<&Path>) -> Result<Scene, SceneError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| SceneError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let table = match material_table {
        Some(p) => parse_material_table(&read(p)?)?,
        None => HashMap::new(),
    };
    parse_scene(&read(path)?, &table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scene, SceneError> {
        parse_scene(text, &HashMap::new())
    }

    #[test]
    fn single_triangle() {
        let s = parse("v 0 0 0\nv 2 0 0\nv 0 1 3\nf 1 2 3\n").unwrap();
        assert_eq!(s.triangles.len(), 1);
        assert_eq!(s.bounds.min, DVec3::ZERO);
        assert_eq!(s.bounds.max, DVec3::new(2.0, 1.0, 3.0));
    }

    #[test]
    fn quad_fans_into_two_triangles_sharing_diagonal() {
        let s = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(s.triangles.len(), 2);
        let [a0, _, a2] = s.triangles[0].positions();
        let [b0, b1, _] = s.triangles[1].positions();
        assert_eq!((a0, a2), (b0, b1));
    }

    #[test]
    fn missing_normals_fall_back_to_face_normal() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1 3 4\nf 2 3 4\n";
        let s = parse(text).unwrap();
        for t in &s.triangles {
            let [a, b, c] = t.positions();
            let cross = (b - a).cross(c - a);
            let oracle = cross / cross.length();
            for v in t.vertices {
                assert!((v.normal - oracle).length() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_normals_are_normalized() {
        let s = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 3\nf 1//1 2//1 3//1\n").unwrap();
        for v in s.triangles[0].vertices {
            assert!((v.normal.length() - 1.0).abs() < 1e-6);
            assert_eq!(v.normal, DVec3::Z);
        }
    }

    #[test]
    fn groups_and_materials_get_ids_in_order_of_use() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\n\
                    g a\nusemtl red\nf 1 2 3\n\
                    g b\nf 1 2 3\n\
                    usemtl blue\nf -3 -2 -1\n\
                    g a\nf 1/1/1 2 3\n";
        let table = parse_material_table("red 1 0 0 0 0 0 8 0.5\n").unwrap();
        let err = parse_scene(text, &table).unwrap_err();
        // the last face references a normal that does not exist
        assert!(matches!(err, SceneError::Parse { line: 12, .. }));

        let text = text.replace("f 1/1/1 2 3", "f 1/7 2 3");
        let s = parse_scene(&text, &table).unwrap();
        let ids: Vec<_> = s.triangles.iter().map(|t| (t.object_id, t.material_id)).collect();
        assert_eq!(ids, vec![(0, 0), (1, 0), (1, 1), (0, 1)]);
        assert_eq!(s.materials[0].alpha, 0.5);
        assert_eq!(s.materials[1], Material::default());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("v 0 0 0\nv 1 nan 0\n", 2),
            ("v 0 0 0\nv 1 inf 0\n", 2),
            ("v 0 0\n", 1),
            ("v 0 0 0\n\nf 1 1\n", 3),
            ("v 0 0 0\nf 1 2 3\n", 2),
            ("bogus 1\n", 1),
        ];
        for (text, expected) in cases {
            match parse(text) {
                Err(SceneError::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_scene_is_an_error() {
        assert!(matches!(parse("# nothing\nv 0 0 0\n"), Err(SceneError::Empty)));
    }

    #[test]
    fn degenerate_faces_are_kept() {
        let s = parse("v 0 0 0\nv 1 1 1\nv 2 2 2\nf 1 2 3\n").unwrap();
        assert_eq!(s.triangles.len(), 1);
        assert!(s.triangles[0].is_degenerate());
    }

    #[test]
    fn material_table_validation() {
        assert!(parse_material_table("m 1 0 0 0 0 0 8\n").is_err());
        assert!(parse_material_table("m 1.5 0 0 0 0 0 8 1\n").is_err());
        assert!(parse_material_table("m 1 0 0 0 0 0 0 1\n").is_err());
        let t = parse_material_table("# c\nm 0.1 0.2 0.3 0.4 0.5 0.6 7 0.25 # trailing\n").unwrap();
        assert_eq!(t["m"].shininess, 7.0);
    }
}
