//! NPY and NPZ reading and writing restricted to C-order little-endian
//! float32/float64 arrays.
//!
//! Anything else (big-endian, Fortran order, integer or structured dtypes)
//! is rejected rather than converted. NPZ archives are written with a fixed
//! timestamp and sorted entry names so that equal inputs give equal bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Cursor, Read, Seek, Write};
use std::path::Path;

use npyz::zip::write::FileOptions;
use npyz::zip::{self, CompressionMethod, ZipWriter};
use npyz::{NpyFile, Order, WriterBuilder};
use snacs_core::{DType, Tensor};

use crate::error::{AppError, Result};

fn parse_npy<R: Read>(reader: R, path: &Path) -> Result<Tensor> {
    let npy = NpyFile::new(reader).map_err(|e| AppError::format(path, format!("bad NPY header: {e}")))?;
    if npy.order() != Order::C {
        return Err(AppError::format(path, "Fortran-order arrays are not supported"));
    }
    let descr = match npy.dtype() {
        npyz::DType::Plain(ts) => ts.to_string(),
        other => {
            return Err(AppError::format(path, format!("unsupported dtype {}", other.descr())));
        }
    };
    let shape: Vec<usize> = npy.shape().iter().map(|&s| s as usize).collect();
    let tensor = match descr.as_str() {
        "<f4" => {
            let v: Vec<f32> = npy.into_vec().map_err(|e| AppError::format(path, e.to_string()))?;
            Tensor::from_f32(shape, &v)
        }
        "<f8" => {
            let v: Vec<f64> = npy.into_vec().map_err(|e| AppError::format(path, e.to_string()))?;
            Tensor::new(DType::F64, shape, v)
        }
        other => {
            return Err(AppError::format(
                path,
                format!("unsupported dtype {other}; expected <f4 or <f8"),
            ))
        }
    };
    tensor.map_err(|e| AppError::format(path, e.to_string()))
}

/// Serializes one tensor as NPY v1.0 with its own dtype.
pub fn write_npy<W: Write>(writer: W, t: &Tensor) -> io::Result<()> {
    let shape: Vec<u64> = t.shape().iter().map(|&s| s as u64).collect();
    match t.dtype() {
        DType::F32 => {
            let mut w = npyz::WriteOptions::<f32>::new()
                .default_dtype()
                .shape(&shape)
                .writer(writer)
                .begin_nd()?;
            w.extend(t.data().iter().map(|&v| v as f32))?;
            w.finish()
        }
        DType::F64 => {
            let mut w = npyz::WriteOptions::<f64>::new()
                .default_dtype()
                .shape(&shape)
                .writer(writer)
                .begin_nd()?;
            w.extend(t.data().iter().copied())?;
            w.finish()
        }
    }
}

pub fn npy_bytes(t: &Tensor) -> Vec<u8> {
    let mut buf = Vec::new();
    write_npy(&mut buf, t).expect("writing to memory cannot fail");
    buf
}

pub fn read_npy_bytes(bytes: &[u8], path: &Path) -> Result<Tensor> {
    parse_npy(bytes, path)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| AppError::io(path, e))
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    parse_npy(BufReader::new(open(path)?), path)
}

pub fn write_npy_file(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_npy(&mut w, t).map_err(|e| AppError::io(path, e))?;
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Read-only view of an NPZ archive.
pub struct NpzBundle<R: Read + Seek> {
    archive: npyz::npz::NpzArchive<R>,
    label: std::path::PathBuf,
}

impl NpzBundle<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(BufReader::new(open(path)?), path)
    }
}

impl<R: Read + Seek> NpzBundle<R> {
    pub fn from_reader(reader: R, label: &Path) -> Result<Self> {
        let archive = npyz::npz::NpzArchive::new(reader)
            .map_err(|e| AppError::format(label, format!("not a zip archive: {e}")))?;
        Ok(NpzBundle {
            archive,
            label: label.to_path_buf(),
        })
    }

    /// Entry names without the `.npy` suffix, sorted.
    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.archive.array_names().map(String::from).collect();
        v.sort();
        v
    }

    pub fn get(&mut self, name: &str) -> Result<Tensor> {
        let label = self.label.join(name);
        let mut file = match self.archive.zip_archive().by_name(&npyz::npz::file_name_from_array_name(name)) {
            Ok(f) => f,
            Err(zip::result::ZipError::FileNotFound) => {
                return Err(AppError::format(&self.label, format!("no entry named {name:?}")))
            }
            Err(e) => return Err(AppError::format(&label, e.to_string())),
        };
        let mut raw = Vec::new();
        file.read_to_end(&mut raw).map_err(|e| AppError::format(&label, e.to_string()))?;
        parse_npy(raw.as_slice(), &label)
    }

    pub fn read_all(&mut self) -> Result<BTreeMap<String, Tensor>> {
        let mut out = BTreeMap::new();
        for name in self.names() {
            let t = self.get(&name)?;
            out.insert(name, t);
        }
        Ok(out)
    }
}

/// Reads `path`; `entry` selects an array when the file is an NPZ archive.
pub fn read_tensor(path: impl AsRef<Path>, entry: Option<&str>) -> Result<Tensor> {
    let path = path.as_ref();
    let mut magic = [0u8; 4];
    let n = open(path)?.read(&mut magic).map_err(|e| AppError::io(path, e))?;
    let is_zip = n == 4 && magic == *b"PK\x03\x04";
    match (is_zip, entry) {
        (true, Some(name)) => NpzBundle::open(path)?.get(name),
        (true, None) => {
            let mut bundle = NpzBundle::open(path)?;
            let names = bundle.names();
            match names.as_slice() {
                [only] => bundle.get(only),
                _ => Err(AppError::format(
                    path,
                    format!("archive holds {} arrays; name one with path:entry", names.len()),
                )),
            }
        }
        (false, None) => read_npy(path),
        (false, Some(_)) => Err(AppError::format(path, "not an NPZ archive, cannot select an entry")),
    }
}

/// Accepts `file.npz:entry` as well as a plain path. The split happens only
/// when the part before the last colon names an existing file.
pub fn read_tensor_spec(spec: &str) -> Result<Tensor> {
    if let Some((file, entry)) = spec.rsplit_once(':') {
        if !entry.is_empty() && Path::new(file).is_file() {
            return read_tensor(file, Some(entry));
        }
    }
    read_tensor(spec, None)
}

/// Writes entries in name order with deflate compression and a fixed
/// modification time.
pub fn write_npz<W: Write + Seek>(writer: W, entries: &BTreeMap<String, Tensor>) -> zip::result::ZipResult<W> {
    let options = FileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default())
        .unix_permissions(0o644);
    let mut zip = ZipWriter::new(writer);
    for (name, t) in entries {
        zip.start_file(npyz::npz::file_name_from_array_name(name), options)?;
        zip.write_all(&npy_bytes(t))?;
    }
    zip.finish()
}

pub fn write_npz_file(path: impl AsRef<Path>, entries: &BTreeMap<String, Tensor>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Cursor::new(Vec::new());
    write_npz(&mut buf, entries).map_err(|e| AppError::io(path, io::Error::other(e)))?;
    std::fs::write(path, buf.into_inner()).map_err(|e| AppError::io(path, e))
}
