//! Raw frame storage and the `.pcv` container.
//!
//! `.pcv` layout (little-endian):
//!
//! | bytes | field                       |
//! |-------|-----------------------------|
//! | 4     | magic `"PCBV"`              |
//! | 1     | version (`1`)               |
//! | 2     | width                       |
//! | 2     | height                      |
//! | 1     | channels                    |
//! | 4     | frame_count                 |
//! | 2     | fps numerator               |
//! | 2     | fps denominator             |
//!
//! followed by `frame_count` frames of `height × width × channels` bytes,
//! row-major with interleaved channels.

use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom, Write};
use std::ops::Range;
use std::path::Path;

use super::{io_err, PcbError, Result};

pub const PCV_MAGIC: &[u8; 4] = b"PCBV";
pub const PCV_VERSION: u8 = 1;
pub const PCV_HEADER_LEN: usize = 18;

/// Frame rate assumed for PNG frame directories.
const PNG_DIR_FPS: Fps = Fps { num: 30, den: 1 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Fps {
    pub num: u16,
    pub den: u16,
}

impl Fps {
    pub fn new(num: u16, den: u16) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(PcbError::Format(format!("fps {num}/{den} must be positive")));
        }
        Ok(Fps { num, den })
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcvHeader {
    pub width: u16,
    pub height: u16,
    pub channels: u8,
    pub frame_count: u32,
    pub fps: Fps,
}

impl PcvHeader {
    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * self.channels as usize
    }

    fn encode(&self) -> [u8; PCV_HEADER_LEN] {
        let mut b = [0u8; PCV_HEADER_LEN];
        b[..4].copy_from_slice(PCV_MAGIC);
        b[4] = PCV_VERSION;
        b[5..7].copy_from_slice(&self.width.to_le_bytes());
        b[7..9].copy_from_slice(&self.height.to_le_bytes());
        b[9] = self.channels;
        b[10..14].copy_from_slice(&self.frame_count.to_le_bytes());
        b[14..16].copy_from_slice(&self.fps.num.to_le_bytes());
        b[16..18].copy_from_slice(&self.fps.den.to_le_bytes());
        b
    }

    fn decode(b: &[u8; PCV_HEADER_LEN]) -> Result<Self> {
        if &b[..4] != PCV_MAGIC {
            return Err(PcbError::Format("bad magic, expected PCBV".into()));
        }
        if b[4] != PCV_VERSION {
            return Err(PcbError::Format(format!("unsupported version {}", b[4])));
        }
        let u16_at = |i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
        let header = PcvHeader {
            width: u16_at(5),
            height: u16_at(7),
            channels: b[9],
            frame_count: u32::from_le_bytes([b[10], b[11], b[12], b[13]]),
            fps: Fps::new(u16_at(14), u16_at(16))?,
        };
        if header.width == 0 || header.height == 0 || !(1..=4).contains(&header.channels) {
            return Err(PcbError::Format(format!(
                "invalid geometry {}x{}x{}",
                header.width, header.height, header.channels
            )));
        }
        Ok(header)
    }
}

/// Decoded 8-bit frames, stored frame after frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawVideo {
    width: u16,
    height: u16,
    channels: u8,
    fps: Fps,
    data: Vec<u8>,
}

impl RawVideo {
    pub fn new(width: u16, height: u16, channels: u8, fps: Fps, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || !(1..=4).contains(&channels) {
            return Err(PcbError::Format(format!("invalid geometry {width}x{height}x{channels}")));
        }
        let frame_len = width as usize * height as usize * channels as usize;
        if data.len() % frame_len != 0 {
            return Err(PcbError::Format(format!(
                "{} bytes is not a whole number of {frame_len}-byte frames",
                data.len()
            )));
        }
        if data.len() / frame_len > u32::MAX as usize {
            return Err(PcbError::Format("too many frames".into()));
        }
        Ok(RawVideo { width, height, channels, fps, data })
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn channels(&self) -> usize {
        self.channels as usize
    }

    pub fn fps(&self) -> Fps {
        self.fps
    }

    pub fn frame_len(&self) -> usize {
        self.width() * self.height() * self.channels()
    }

    pub fn frame_count(&self) -> usize {
        self.data.len() / self.frame_len()
    }

    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn frame(&self, n: usize) -> Option<&[u8]> {
        let len = self.frame_len();
        self.data.get(n * len..(n + 1) * len)
    }

    pub fn header(&self) -> PcvHeader {
        PcvHeader {
            width: self.width,
            height: self.height,
            channels: self.channels,
            frame_count: self.frame_count() as u32,
            fps: self.fps,
        }
    }

    /// Copy of frames `range`; an empty range gives a zero-frame video.
    pub fn slice_frames(&self, range: Range<usize>) -> Result<RawVideo> {
        if range.start > range.end || range.end > self.frame_count() {
            return Err(PcbError::Format(format!(
                "frame range {range:?} outside 0..{}",
                self.frame_count()
            )));
        }
        let len = self.frame_len();
        Ok(RawVideo {
            data: self.data[range.start * len..range.end * len].to_vec(),
            ..*self
        })
    }

    pub fn write_pcv(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(&self.header().encode())?;
        w.write_all(&self.data)
    }

    pub fn to_pcv_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PCV_HEADER_LEN + self.data.len());
        self.write_pcv(&mut out).expect("Vec write");
        out
    }

    pub fn read_pcv(r: &mut impl Read) -> Result<RawVideo> {
        let mut hb = [0u8; PCV_HEADER_LEN];
        r.read_exact(&mut hb)
            .map_err(|e| PcbError::Format(format!("truncated header: {e}")))?;
        let h = PcvHeader::decode(&hb)?;
        let mut data = vec![0u8; h.frame_len() * h.frame_count as usize];
        r.read_exact(&mut data)
            .map_err(|e| PcbError::Format(format!("truncated frame data: {e}")))?;
        RawVideo::new(h.width, h.height, h.channels, h.fps, data)
    }

    pub fn save_pcv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pcv_bytes()).map_err(io_err(path))
    }

    pub fn load_pcv(path: &Path) -> Result<RawVideo> {
        let f = File::open(path).map_err(io_err(path))?;
        RawVideo::read_pcv(&mut BufReader::new(f))
    }

    /// Reads one frame from a `.pcv` file without loading the others.
    pub fn read_pcv_frame(path: &Path, n: usize) -> Result<Option<RawVideo>> {
        let mut f = File::open(path).map_err(io_err(path))?;
        let mut hb = [0u8; PCV_HEADER_LEN];
        f.read_exact(&mut hb).map_err(io_err(path))?;
        let h = PcvHeader::decode(&hb)?;
        if n >= h.frame_count as usize {
            return Ok(None);
        }
        let len = h.frame_len();
        f.seek(SeekFrom::Start((PCV_HEADER_LEN + n * len) as u64)).map_err(io_err(path))?;
        let mut data = vec![0u8; len];
        f.read_exact(&mut data).map_err(io_err(path))?;
        Ok(Some(RawVideo::new(h.width, h.height, h.channels, h.fps, data)?))
    }

    /// Loads a directory of numbered PNG frames (`0001.png`, `frame_2.png`, ...),
    /// ordered by the number in each file name.
    pub fn load_png_dir(dir: &Path) -> Result<RawVideo> {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
            if !is_png {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
            let n: u64 = digits
                .parse()
                .map_err(|_| PcbError::Format(format!("{}: no frame number in name", path.display())))?;
            files.push((n, path));
        }
        files.sort();
        if files.is_empty() {
            return Err(PcbError::Format(format!("{}: no PNG frames", dir.display())));
        }
        let mut data = Vec::new();
        let mut geometry = None;
        for (_, path) in &files {
            let img = image::open(path).map_err(|e| PcbError::Image(format!("{}: {e}", path.display())))?;
            let (channels, bytes) = if img.color().has_color() {
                (3u8, img.to_rgb8().into_raw())
            } else {
                (1u8, img.to_luma8().into_raw())
            };
            let g = (img.width(), img.height(), channels);
            match geometry {
                None => geometry = Some(g),
                Some(prev) if prev != g => {
                    return Err(PcbError::Format(format!(
                        "{}: frame geometry {g:?} differs from {prev:?}",
                        path.display()
                    )))
                }
                _ => {}
            }
            data.extend_from_slice(&bytes);
        }
        let (w, h, c) = geometry.expect("at least one frame");
        let w = u16::try_from(w).map_err(|_| PcbError::Format("frame too wide".into()))?;
        let h = u16::try_from(h).map_err(|_| PcbError::Format("frame too tall".into()))?;
        RawVideo::new(w, h, c, PNG_DIR_FPS, data)
    }

    /// PNG encoding of frame `n` (gray, RGB, or RGBA depending on channels).
    pub fn frame_png(&self, n: usize) -> Result<Option<Vec<u8>>> {
        let Some(frame) = self.frame(n) else { return Ok(None) };
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            2 => image::ExtendedColorType::La8,
            3 => image::ExtendedColorType::Rgb8,
            _ => image::ExtendedColorType::Rgba8,
        };
        let mut out = Vec::new();
        image::ImageEncoder::write_image(
            image::codecs::png::PngEncoder::new(&mut out),
            frame,
            self.width as u32,
            self.height as u32,
            color,
        )
        .map_err(|e| PcbError::Image(e.to_string()))?;
        Ok(Some(out))
    }

    /// Frame `n` as planar `f32` in `[0, 1]`: one luma plane when
    /// `channels == 1`, otherwise RGB planes.
    pub(crate) fn frame_planes(&self, n: usize, channels: usize, out: &mut [f32]) {
        let frame = self.frame(n).expect("frame index checked by caller");
        let px = self.width() * self.height();
        let src_c = self.channels();
        debug_assert_eq!(out.len(), channels * px);
        for i in 0..px {
            let p = &frame[i * src_c..(i + 1) * src_c];
            let (r, g, b) = if src_c >= 3 {
                (p[0] as f32, p[1] as f32, p[2] as f32)
            } else {
                (p[0] as f32, p[0] as f32, p[0] as f32)
            };
            if channels == 1 {
                // BT.601 luma
                out[i] = if src_c >= 3 { (0.299 * r + 0.587 * g + 0.114 * b) / 255.0 } else { r / 255.0 };
            } else {
                out[i] = r / 255.0;
                out[px + i] = g / 255.0;
                out[2 * px + i] = b / 255.0;
            }
        }
    }
}

pub fn read_pcv_header(path: &Path) -> Result<PcvHeader> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut hb = [0u8; PCV_HEADER_LEN];
    f.read_exact(&mut hb)
        .map_err(|e| PcbError::Format(format!("{}: truncated header: {e}", path.display())))?;
    PcvHeader::decode(&hb)
}

/// Loads a `.pcv` file or a directory of PNG frames.
pub fn load_video(path: &Path) -> Result<RawVideo> {
    if path.is_dir() {
        RawVideo::load_png_dir(path)
    } else {
        RawVideo::load_pcv(path)
    }
}

/// Frame count without decoding pixel data where possible.
pub(crate) fn probe_frame_count(path: &Path) -> Result<usize> {
    if path.is_dir() {
        Ok(RawVideo::load_png_dir(path)?.frame_count())
    } else {
        Ok(read_pcv_header(path)?.frame_count as usize)
    }
}
