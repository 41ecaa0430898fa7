//! COLMAP sparse reconstructions (cameras, images, points3D), text or binary.

use crate::error::{Error, Result};
use crate::gaussian::{normalize_quaternion, unit_quaternion_to_matrix, Camera};
use nalgebra::{Vector2, Vector3, Vector4};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Point positions and their colors in [0, 1].
pub type PointCloud = (Vec<Vector3<f64>>, Vec<Vector3<f64>>);

#[derive(Clone, Debug, PartialEq)]
pub struct Intrinsics {
    pub width: u32,
    pub height: u32,
    pub focal: Vector2<f64>,
    pub principal_point: Vector2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColmapImage {
    pub id: u32,
    pub name: String,
    pub camera_id: u32,
    /// World→camera rotation as (w, x, y, z).
    pub quaternion: Vector4<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ColmapModel {
    pub cameras: BTreeMap<u32, Intrinsics>,
    pub images: Vec<ColmapImage>,
    pub points: Vec<Vector3<f64>>,
    /// Point colors in [0, 1].
    pub colors: Vec<Vector3<f64>>,
}

impl ColmapModel {
    pub fn camera(&self, image: &ColmapImage) -> Result<Camera<f64>> {
        let k = self.cameras.get(&image.camera_id).ok_or_else(|| {
            Error::Format(format!(
                "image {} references missing camera {}",
                image.name, image.camera_id
            ))
        })?;
        let q = normalize_quaternion(&image.quaternion).map_err(|_| {
            Error::Format(format!(
                "image {} has a zero rotation quaternion",
                image.name
            ))
        })?;
        Camera::new(
            unit_quaternion_to_matrix(&q),
            image.translation,
            k.focal,
            k.principal_point,
            k.width,
            k.height,
        )
    }
}

/// Camera model names by COLMAP's numeric id, with their parameter counts.
const MODELS: [(&str, usize); 11] = [
    ("SIMPLE_PINHOLE", 3),
    ("PINHOLE", 4),
    ("SIMPLE_RADIAL", 4),
    ("RADIAL", 5),
    ("OPENCV", 8),
    ("OPENCV_FISHEYE", 8),
    ("FULL_OPENCV", 12),
    ("FOV", 5),
    ("SIMPLE_RADIAL_FISHEYE", 4),
    ("RADIAL_FISHEYE", 5),
    ("THIN_PRISM_FISHEYE", 12),
];

fn intrinsics(model: &str, width: u32, height: u32, params: &[f64]) -> Result<Intrinsics> {
    let (focal, pp) = match (model, params) {
        ("SIMPLE_PINHOLE", [f, cx, cy]) => (Vector2::new(*f, *f), Vector2::new(*cx, *cy)),
        ("PINHOLE", [fx, fy, cx, cy]) => (Vector2::new(*fx, *fy), Vector2::new(*cx, *cy)),
        ("SIMPLE_PINHOLE" | "PINHOLE", _) => {
            return Err(Error::Format(format!(
                "{model} camera with {} parameters",
                params.len()
            )))
        }
        _ => return Err(Error::UnsupportedCameraModel(model.to_string())),
    };
    Ok(Intrinsics {
        width,
        height,
        focal,
        principal_point: pp,
    })
}

/// Directory holding the model files: `<dir>/sparse/0`, `<dir>/sparse` or `<dir>`.
pub fn find_model_dir(dir: &Path) -> Result<PathBuf> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    for cand in [
        dir.join("sparse").join("0"),
        dir.join("sparse"),
        dir.to_path_buf(),
    ] {
        if cand.join("cameras.bin").is_file() || cand.join("cameras.txt").is_file() {
            return Ok(cand);
        }
    }
    Err(Error::MissingFile(
        dir.join("sparse").join("0").join("cameras.bin"),
    ))
}

/// Reads a model directory, preferring binary files when both variants exist.
pub fn load_colmap(dir: &Path) -> Result<ColmapModel> {
    let dir = find_model_dir(dir)?;
    let pick = |stem: &str| -> Result<(PathBuf, bool)> {
        let bin = dir.join(format!("{stem}.bin"));
        let txt = dir.join(format!("{stem}.txt"));
        if bin.is_file() {
            Ok((bin, true))
        } else if txt.is_file() {
            Ok((txt, false))
        } else {
            Err(Error::MissingFile(txt))
        }
    };
    let (cam_path, cam_bin) = pick("cameras")?;
    let (img_path, img_bin) = pick("images")?;
    let (pts_path, pts_bin) = pick("points3D")?;
    let cameras = if cam_bin {
        binary::cameras(&cam_path)?
    } else {
        text::cameras(&cam_path)?
    };
    let images = if img_bin {
        binary::images(&img_path)?
    } else {
        text::images(&img_path)?
    };
    let (points, colors) = if pts_bin {
        binary::points(&pts_path)?
    } else {
        text::points(&pts_path)?
    };
    for img in &images {
        if !cameras.contains_key(&img.camera_id) {
            return Err(Error::parse(
                &img_path,
                format!(
                    "image {} references missing camera {}",
                    img.name, img.camera_id
                ),
            ));
        }
    }
    if let Some(p) = points.iter().find(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(Error::parse(&pts_path, format!("non-finite point {p:?}")));
    }
    Ok(ColmapModel {
        cameras,
        images,
        points,
        colors,
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

pub mod text {
    use super::*;

    fn field<T: std::str::FromStr>(
        path: &Path,
        line_no: usize,
        tok: Option<&str>,
        what: &str,
    ) -> Result<T> {
        let tok =
            tok.ok_or_else(|| Error::parse(path, format!("line {line_no}: missing {what}")))?;
        tok.parse()
            .map_err(|_| Error::parse(path, format!("line {line_no}: bad {what} '{tok}'")))
    }

    fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
        src.lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
    }

    pub fn parse_cameras(path: &Path, src: &str) -> Result<BTreeMap<u32, Intrinsics>> {
        let mut out = BTreeMap::new();
        for (n, line) in content_lines(src) {
            let mut t = line.split_whitespace();
            let id: u32 = field(path, n, t.next(), "camera id")?;
            let model: String = field(path, n, t.next(), "camera model")?;
            let w: u32 = field(path, n, t.next(), "width")?;
            let h: u32 = field(path, n, t.next(), "height")?;
            let params = t
                .map(|p| field::<f64>(path, n, Some(p), "camera parameter"))
                .collect::<Result<Vec<_>>>()?;
            out.insert(id, intrinsics(&model, w, h, &params)?);
        }
        Ok(out)
    }

    pub fn parse_images(path: &Path, src: &str) -> Result<Vec<ColmapImage>> {
        let mut out = Vec::new();
        let mut lines = src.lines().enumerate();
        while let Some((i, raw)) = lines.next() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let n = i + 1;
            let mut t = line.split_whitespace();
            let id: u32 = field(path, n, t.next(), "image id")?;
            let mut v = [0.0f64; 7];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = field(
                    path,
                    n,
                    t.next(),
                    if k < 4 { "quaternion" } else { "translation" },
                )?;
            }
            let camera_id: u32 = field(path, n, t.next(), "camera id")?;
            let name: String = t.collect::<Vec<_>>().join(" ");
            if name.is_empty() {
                return Err(Error::parse(path, format!("line {n}: missing image name")));
            }
            // The following line lists 2D observations and may be empty.
            lines.next();
            out.push(ColmapImage {
                id,
                name,
                camera_id,
                quaternion: Vector4::new(v[0], v[1], v[2], v[3]),
                translation: Vector3::new(v[4], v[5], v[6]),
            });
        }
        Ok(out)
    }

    pub fn parse_points(path: &Path, src: &str) -> Result<PointCloud> {
        let mut pts = Vec::new();
        let mut cols = Vec::new();
        for (n, line) in content_lines(src) {
            let mut t = line.split_whitespace();
            let _id: u64 = field(path, n, t.next(), "point id")?;
            let mut p = Vector3::zeros();
            for a in 0..3 {
                p[a] = field(path, n, t.next(), "coordinate")?;
            }
            let mut c = Vector3::zeros();
            for a in 0..3 {
                c[a] = field::<u8>(path, n, t.next(), "color")? as f64 / 255.0;
            }
            pts.push(p);
            cols.push(c);
        }
        Ok((pts, cols))
    }

    fn load(path: &Path) -> Result<String> {
        String::from_utf8(read(path)?).map_err(|_| Error::parse(path, "not valid UTF-8"))
    }

    pub fn cameras(path: &Path) -> Result<BTreeMap<u32, Intrinsics>> {
        parse_cameras(path, &load(path)?)
    }

    pub fn images(path: &Path) -> Result<Vec<ColmapImage>> {
        parse_images(path, &load(path)?)
    }

    pub fn points(path: &Path) -> Result<PointCloud> {
        parse_points(path, &load(path)?)
    }
}

pub mod binary {
    use super::*;

    struct Reader<'a> {
        path: &'a Path,
        buf: &'a [u8],
        pos: usize,
    }

    impl<'a> Reader<'a> {
        fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
            let end = self.pos + N;
            let bytes = self.buf.get(self.pos..end).ok_or_else(|| {
                Error::parse(
                    self.path,
                    format!("unexpected end of file at byte {}", self.pos),
                )
            })?;
            self.pos = end;
            Ok(bytes.try_into().expect("length checked"))
        }
        fn u8(&mut self) -> Result<u8> {
            Ok(self.take::<1>()?[0])
        }
        fn i32(&mut self) -> Result<i32> {
            Ok(i32::from_le_bytes(self.take()?))
        }
        fn u64(&mut self) -> Result<u64> {
            Ok(u64::from_le_bytes(self.take()?))
        }
        fn f64(&mut self) -> Result<f64> {
            Ok(f64::from_le_bytes(self.take()?))
        }
        fn skip(&mut self, n: u64) -> Result<()> {
            let end = usize::try_from(n)
                .ok()
                .and_then(|n| self.pos.checked_add(n))
                .filter(|e| *e <= self.buf.len())
                .ok_or_else(|| {
                    Error::parse(
                        self.path,
                        format!("unexpected end of file at byte {}", self.pos),
                    )
                })?;
            self.pos = end;
            Ok(())
        }
        fn cstr(&mut self) -> Result<String> {
            let rest = &self.buf[self.pos..];
            let len = rest
                .iter()
                .position(|b| *b == 0)
                .ok_or_else(|| Error::parse(self.path, "unterminated image name"))?;
            let s = String::from_utf8(rest[..len].to_vec())
                .map_err(|_| Error::parse(self.path, "image name is not valid UTF-8"))?;
            self.pos += len + 1;
            Ok(s)
        }
        fn count(&mut self) -> Result<usize> {
            let n = self.u64()?;
            usize::try_from(n)
                .map_err(|_| Error::parse(self.path, format!("record count {n} too large")))
        }
        fn id(&mut self, what: &str) -> Result<u32> {
            let v = self.i32()?;
            u32::try_from(v).map_err(|_| Error::parse(self.path, format!("negative {what} {v}")))
        }
    }

    pub fn parse_cameras(path: &Path, buf: &[u8]) -> Result<BTreeMap<u32, Intrinsics>> {
        let mut r = Reader { path, buf, pos: 0 };
        let mut out = BTreeMap::new();
        for _ in 0..r.count()? {
            let id = r.id("camera id")?;
            let model_id = r.i32()?;
            let w = r.u64()?;
            let h = r.u64()?;
            let (name, nparams) = usize::try_from(model_id)
                .ok()
                .and_then(|m| MODELS.get(m))
                .copied()
                .ok_or_else(|| Error::UnsupportedCameraModel(format!("id {model_id}")))?;
            let params = (0..nparams).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let dim = |v: u64| {
                u32::try_from(v)
                    .map_err(|_| Error::parse(path, format!("camera {id} size {v} too large")))
            };
            out.insert(id, intrinsics(name, dim(w)?, dim(h)?, &params)?);
        }
        Ok(out)
    }

    pub fn parse_images(path: &Path, buf: &[u8]) -> Result<Vec<ColmapImage>> {
        let mut r = Reader { path, buf, pos: 0 };
        let mut out = Vec::new();
        for _ in 0..r.count()? {
            let id = r.id("image id")?;
            let q = Vector4::new(r.f64()?, r.f64()?, r.f64()?, r.f64()?);
            let t = Vector3::new(r.f64()?, r.f64()?, r.f64()?);
            let camera_id = r.id("camera id")?;
            let name = r.cstr()?;
            let n2d = r.u64()?;
            r.skip(n2d.saturating_mul(24))?;
            out.push(ColmapImage {
                id,
                name,
                camera_id,
                quaternion: q,
                translation: t,
            });
        }
        Ok(out)
    }

    pub fn parse_points(path: &Path, buf: &[u8]) -> Result<PointCloud> {
        let mut r = Reader { path, buf, pos: 0 };
        let n = r.count()?;
        let mut pts = Vec::new();
        let mut cols = Vec::new();
        for _ in 0..n {
            let _id = r.u64()?;
            pts.push(Vector3::new(r.f64()?, r.f64()?, r.f64()?));
            cols.push(Vector3::new(r.u8()?, r.u8()?, r.u8()?).map(|c| c as f64 / 255.0));
            let _error = r.f64()?;
            let track = r.u64()?;
            r.skip(track.saturating_mul(8))?;
        }
        Ok((pts, cols))
    }

    pub fn cameras(path: &Path) -> Result<BTreeMap<u32, Intrinsics>> {
        parse_cameras(path, &read(path)?)
    }

    pub fn images(path: &Path) -> Result<Vec<ColmapImage>> {
        parse_images(path, &read(path)?)
    }

    pub fn points(path: &Path) -> Result<PointCloud> {
        parse_points(path, &read(path)?)
    }
}

/// Writes a text model; used to package synthetic scenes as datasets.
pub fn write_text(dir: &Path, model: &ColmapModel) -> Result<()> {
    use std::fmt::Write;
    std::fs::create_dir_all(dir)?;
    let mut cams = String::from("# Camera list with one line of data per camera:\n#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n");
    for (id, k) in &model.cameras {
        writeln!(
            cams,
            "{id} PINHOLE {} {} {} {} {} {}",
            k.width, k.height, k.focal.x, k.focal.y, k.principal_point.x, k.principal_point.y
        )
        .expect("write to string");
    }
    let mut imgs = String::from("# Image list with two lines of data per image:\n#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n#   POINTS2D[] as (X, Y, POINT3D_ID)\n");
    for im in &model.images {
        let (q, t) = (im.quaternion, im.translation);
        writeln!(
            imgs,
            "{} {} {} {} {} {} {} {} {} {}\n",
            im.id, q[0], q[1], q[2], q[3], t.x, t.y, t.z, im.camera_id, im.name
        )
        .expect("write to string");
    }
    let mut pts = String::from("# 3D point list with one line of data per point:\n#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n");
    for (i, (p, c)) in model.points.iter().zip(&model.colors).enumerate() {
        let c = c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
        writeln!(
            pts,
            "{} {} {} {} {} {} {} 0",
            i + 1,
            p.x,
            p.y,
            p.z,
            c.x,
            c.y,
            c.z
        )
        .expect("write to string");
    }
    std::fs::write(dir.join("cameras.txt"), cams)?;
    std::fs::write(dir.join("images.txt"), imgs)?;
    std::fs::write(dir.join("points3D.txt"), pts)?;
    Ok(())
}

/// COLMAP (w, x, y, z) quaternion of a rotation matrix.
pub fn quaternion_from_matrix(r: &nalgebra::Matrix3<f64>) -> Vector4<f64> {
    let q = nalgebra::UnitQuaternion::from_matrix(r);
    Vector4::new(q.w, q.i, q.j, q.k)
}
