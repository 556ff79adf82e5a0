//! Tensor files, PNG images, padding, video reshaping and observation masks.
//!
//! The tensor format is `"CFT1"`, one `u8` rank, that many `u32` little-endian dims, then the
//! `f64` little-endian payload with the first index fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CfError, Result};
use crate::tasks::ObservationMask;
use crate::tensor::DenseTensor3;

const MAGIC: &[u8; 4] = b"CFT1";

/// A tensor of rank 1 to 4 as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CftArray {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl CftArray {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 4 {
            return Err(CfError::dim(format!("rank must be 1-4, got {}", dims.len())));
        }
        if dims.iter().product::<usize>() != data.len() {
            return Err(CfError::shape("payload length does not match dims"));
        }
        Ok(Self { dims, data })
    }

    /// Third-order view: rank-1 and rank-2 arrays get trailing unit dims, rank-4 arrays merge
    /// their last two modes.
    pub fn into_tensor3(self) -> Result<DenseTensor3> {
        let d = &self.dims;
        let dims = match d.len() {
            1 => [d[0], 1, 1],
            2 => [d[0], d[1], 1],
            3 => [d[0], d[1], d[2]],
            _ => return Ok(merge_video(&Tensor4::from_array(self)?)),
        };
        DenseTensor3::from_vec(dims, self.data)
    }
}

impl From<&DenseTensor3> for CftArray {
    fn from(t: &DenseTensor3) -> Self {
        Self {
            dims: t.dims().to_vec(),
            data: t.data().to_vec(),
        }
    }
}

pub fn write_cft(w: &mut impl Write, a: &CftArray) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[a.dims.len() as u8])?;
    for &d in &a.dims {
        let d = u32::try_from(d).map_err(|_| CfError::dim(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for v in &a.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_cft(r: &mut impl Read) -> Result<CftArray> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head)
        .map_err(|_| CfError::Decode("truncated header".into()))?;
    if &head[..4] != MAGIC {
        return Err(CfError::Decode("bad magic, expected CFT1".into()));
    }
    let ndim = head[4] as usize;
    if ndim == 0 || ndim > 4 {
        return Err(CfError::Decode(format!("unsupported rank {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)
            .map_err(|_| CfError::Decode("truncated dims".into()))?;
        dims.push(u32::from_le_bytes(b) as usize);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| CfError::Decode("dims overflow".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(CfError::Decode(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            len * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    CftArray::new(dims, data)
}

pub fn save_tensor(path: &Path, t: &DenseTensor3) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_cft(&mut w, &CftArray::from(t))?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: &Path) -> Result<DenseTensor3> {
    read_cft(&mut BufReader::new(File::open(path)?))?.into_tensor3()
}

/// Loads a `.png` image or a CFT1 file, chosen by extension.
pub fn load_any(path: &Path) -> Result<DenseTensor3> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        load_png(path)
    } else {
        load_tensor(path)
    }
}

/// 8- or 16-bit grayscale or RGB PNG as an `height x width x {1,3}` tensor in `[0, 1]`.
pub fn decode_png(r: impl Read) -> Result<DenseTensor3> {
    let mut bytes = Vec::new();
    let mut r = r;
    r.read_to_end(&mut bytes)?;
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| CfError::Decode(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| CfError::Decode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| CfError::Decode(e.to_string()))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(CfError::Decode(format!("unsupported PNG color type {other:?}"))),
    };
    let (h, w) = (info.height as usize, info.width as usize);
    let line = info.line_size;
    let value: fn(&[u8], usize) -> f64 = match info.bit_depth {
        png::BitDepth::Eight => |row, idx| row[idx] as f64 / 255.0,
        png::BitDepth::Sixteen => {
            |row, idx| u16::from_be_bytes([row[2 * idx], row[2 * idx + 1]]) as f64 / 65535.0
        }
        other => return Err(CfError::Decode(format!("unsupported PNG bit depth {other:?}"))),
    };
    Ok(DenseTensor3::from_fn([h, w, channels], |i, j, c| {
        value(&buf[i * line..(i + 1) * line], j * channels + c)
    }))
}

pub fn load_png(path: &Path) -> Result<DenseTensor3> {
    decode_png(BufReader::new(File::open(path)?))
}

/// Writes a one- or three-band tensor as an 8- or 16-bit PNG, clamping to `[0, 1]`.
pub fn encode_png(w: impl Write, t: &DenseTensor3, sixteen_bit: bool) -> Result<()> {
    let [h, wd, c] = t.dims();
    let color = match c {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        _ => return Err(CfError::dim(format!("PNG needs 1 or 3 bands, got {c}"))),
    };
    let mut enc = png::Encoder::new(w, wd as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(if sixteen_bit {
        png::BitDepth::Sixteen
    } else {
        png::BitDepth::Eight
    });
    let mut data = Vec::with_capacity(h * wd * c * if sixteen_bit { 2 } else { 1 });
    for i in 0..h {
        for j in 0..wd {
            for k in 0..c {
                let v = t.get(i, j, k).clamp(0.0, 1.0);
                if sixteen_bit {
                    data.extend_from_slice(&((v * 65535.0).round() as u16).to_be_bytes());
                } else {
                    data.push((v * 255.0).round() as u8);
                }
            }
        }
    }
    let mut writer = enc
        .write_header()
        .map_err(|e| CfError::Decode(e.to_string()))?;
    writer
        .write_image_data(&data)
        .map_err(|e| CfError::Decode(e.to_string()))?;
    Ok(())
}

pub fn save_png(path: &Path, t: &DenseTensor3, sixteen_bit: bool) -> Result<()> {
    encode_png(BufWriter::new(File::create(path)?), t, sixteen_bit)
}

fn reflect(i: usize, n: usize) -> usize {
    if i < n {
        i
    } else if n >= 2 {
        2 * n - 2 - i
    } else {
        0
    }
}

/// Pads odd spatial dims by one reflected row or column (the one before the last).
pub fn pad_even(t: &DenseTensor3) -> DenseTensor3 {
    let [n1, n2, n3] = t.dims();
    let dims = [n1 + n1 % 2, n2 + n2 % 2, n3];
    if dims == t.dims() {
        return t.clone();
    }
    DenseTensor3::from_fn(dims, |i, j, k| t.get(reflect(i, n1), reflect(j, n2), k))
}

/// Leading `dims` block; inverts [`pad_even`].
pub fn crop(t: &DenseTensor3, dims: [usize; 3]) -> Result<DenseTensor3> {
    t.leading_block(dims)
}

/// Order-4 tensor (e.g. `height x width x band x frame`), first index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub dims: [usize; 4],
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn new(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(CfError::shape("payload length does not match dims"));
        }
        Ok(Self { dims, data })
    }

    fn from_array(a: CftArray) -> Result<Self> {
        let dims: [usize; 4] = a
            .dims
            .as_slice()
            .try_into()
            .map_err(|_| CfError::dim("expected a rank-4 array"))?;
        Self::new(dims, a.data)
    }

    pub fn get(&self, i: usize, j: usize, k: usize, t: usize) -> f64 {
        let [n1, n2, n3, _] = self.dims;
        self.data[i + n1 * (j + n2 * (k + n3 * t))]
    }
}

/// Merges modes 3 and 4: entry `(i, j, k, t)` goes to `(i, j, k + n3 * t)`.
pub fn merge_video(v: &Tensor4) -> DenseTensor3 {
    let [n1, n2, n3, n4] = v.dims;
    DenseTensor3::from_vec([n1, n2, n3 * n4], v.data.clone()).expect("same length")
}

/// Inverse of [`merge_video`] for `bands` bands per frame.
pub fn split_video(t: &DenseTensor3, bands: usize) -> Result<Tensor4> {
    let [n1, n2, n3] = t.dims();
    if bands == 0 || n3 % bands != 0 {
        return Err(CfError::dim(format!("{n3} bands do not split into groups of {bands}")));
    }
    Tensor4::new([n1, n2, bands, n3 / bands], t.data().to_vec())
}

/// Uniform random mask observing exactly `round(sr * N)` entries (at least one).
pub fn random_mask(dims: [usize; 3], sr: f64, seed: u64) -> Result<ObservationMask> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(CfError::arg(format!("sampling rate must lie in (0, 1], got {sr}")));
    }
    let n: usize = dims.iter().product();
    let count = ((sr * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![false; n];
    for idx in sample(&mut rng, n, count) {
        observed[idx] = true;
    }
    ObservationMask::new(dims, observed)
}

/// Mask from an image or tensor file (nonzero = observed). A single-band mask, or the first
/// band of an RGB image, is replicated over all `dims[2]` bands.
pub fn cloud_mask(path: &Path, dims: [usize; 3]) -> Result<ObservationMask> {
    let m = load_any(path)?;
    let [m1, m2, m3] = m.dims();
    if m1 != dims[0] || m2 != dims[1] {
        return Err(CfError::shape(format!(
            "mask is {m1}x{m2}, data is {}x{}",
            dims[0], dims[1]
        )));
    }
    let per_band = m3 == dims[2] && m3 != 3;
    let observed = (0..dims[2])
        .flat_map(|k| {
            let src = if per_band { k } else { 0 };
            m.slice_data(src).iter().map(|&v| v != 0.0).collect::<Vec<_>>()
        })
        .collect();
    ObservationMask::new(dims, observed)
}
