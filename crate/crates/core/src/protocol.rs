//! Sensor frame wire format.
//!
//! Every frame is exactly [`FRAME_LEN`] bytes:
//!
//! | offset | size | field                         | encoding      |
//! |--------|------|-------------------------------|---------------|
//! | 0      | 2    | sync `0xAA 0x55`              |               |
//! | 2      | 1    | version `0x01`                |               |
//! | 3      | 2    | `seq`                         | little-endian |
//! | 5      | 4    | `timestamp_ms`                | little-endian |
//! | 9      | 2    | `ecg_raw`                     | little-endian |
//! | 11     | 2    | `ppg_raw`                     | little-endian |
//! | 13     | 4    | `red_raw`                     | little-endian |
//! | 17     | 4    | `ir_raw`                      | little-endian |
//! | 21     | 2    | `gsr_raw`                     | little-endian |
//! | 23     | 2    | `sound_raw`                   | little-endian |
//! | 25     | 2    | CRC-16/CCITT-FALSE of `2..25` | big-endian    |
//!
//! [`FrameDecoder`] is a byte-at-a-time resynchronizing state machine; it can
//! be fed chunks split at arbitrary boundaries.

use serde::{Deserialize, Serialize};

use crate::error::EncodeError;

pub const SYNC: [u8; 2] = [0xAA, 0x55];
pub const VERSION: u8 = 0x01;
pub const FRAME_LEN: usize = 27;
/// Largest legal value of a 10-bit ADC channel.
pub const ADC_MAX: u16 = 1023;

/// Frames per second emitted by a device at nominal rate.
pub const NOMINAL_RATE_HZ: u32 = 100;

const CRC_START: usize = 2;
const CRC_END: usize = 25;

/// One raw multi-channel sample as carried on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SensorFrame {
    pub seq: u16,
    pub timestamp_ms: u32,
    pub ecg_raw: u16,
    pub ppg_raw: u16,
    pub red_raw: u32,
    pub ir_raw: u32,
    pub gsr_raw: u16,
    pub sound_raw: u16,
}

impl SensorFrame {
    /// Name of the first ADC channel above [`ADC_MAX`], if any.
    pub fn out_of_range_field(&self) -> Option<&'static str> {
        [
            ("ecg_raw", self.ecg_raw),
            ("ppg_raw", self.ppg_raw),
            ("gsr_raw", self.gsr_raw),
            ("sound_raw", self.sound_raw),
        ]
        .into_iter()
        .find(|(_, v)| *v > ADC_MAX)
        .map(|(name, _)| name)
    }
}

const fn crc_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u16) << 8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static CRC_TABLE: [u16; 256] = crc_table();

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
pub fn crc16_ccitt_false(data: &[u8]) -> u16 {
    data.iter().fold(0xFFFF, |crc, &b| {
        (crc << 8) ^ CRC_TABLE[usize::from((crc >> 8) as u8 ^ b)]
    })
}

/// Serializes a frame into its 27-byte wire representation.
pub fn encode_frame(frame: &SensorFrame) -> Result<[u8; FRAME_LEN], EncodeError> {
    if let Some(field) = frame.out_of_range_field() {
        return Err(EncodeError::OutOfRange(field));
    }
    let mut out = [0u8; FRAME_LEN];
    out[0..2].copy_from_slice(&SYNC);
    out[2] = VERSION;
    out[3..5].copy_from_slice(&frame.seq.to_le_bytes());
    out[5..9].copy_from_slice(&frame.timestamp_ms.to_le_bytes());
    out[9..11].copy_from_slice(&frame.ecg_raw.to_le_bytes());
    out[11..13].copy_from_slice(&frame.ppg_raw.to_le_bytes());
    out[13..17].copy_from_slice(&frame.red_raw.to_le_bytes());
    out[17..21].copy_from_slice(&frame.ir_raw.to_le_bytes());
    out[21..23].copy_from_slice(&frame.gsr_raw.to_le_bytes());
    out[23..25].copy_from_slice(&frame.sound_raw.to_le_bytes());
    let crc = crc16_ccitt_false(&out[CRC_START..CRC_END]);
    out[25..27].copy_from_slice(&crc.to_be_bytes());
    Ok(out)
}

/// Encodes a sequence of frames back to back.
pub fn encode_stream<'a, I>(frames: I) -> Result<Vec<u8>, EncodeError>
where
    I: IntoIterator<Item = &'a SensorFrame>,
{
    let mut out = Vec::new();
    for f in frames {
        out.extend_from_slice(&encode_frame(f)?);
    }
    Ok(out)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_body(b: &[u8; FRAME_LEN]) -> SensorFrame {
    SensorFrame {
        seq: u16_at(b, 3),
        timestamp_ms: u32_at(b, 5),
        ecg_raw: u16_at(b, 9),
        ppg_raw: u16_at(b, 11),
        red_raw: u32_at(b, 13),
        ir_raw: u32_at(b, 17),
        gsr_raw: u16_at(b, 21),
        sound_raw: u16_at(b, 23),
    }
}

/// Running counters kept by a [`FrameDecoder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParserDiagnostics {
    pub frames_ok: u64,
    pub frames_crc_fail: u64,
    pub bytes_skipped_resync: u64,
    pub frames_rejected_range: u64,
}

impl ParserDiagnostics {
    pub fn since(&self, earlier: &ParserDiagnostics) -> ParserDiagnostics {
        ParserDiagnostics {
            frames_ok: self.frames_ok - earlier.frames_ok,
            frames_crc_fail: self.frames_crc_fail - earlier.frames_crc_fail,
            bytes_skipped_resync: self.bytes_skipped_resync - earlier.bytes_skipped_resync,
            frames_rejected_range: self.frames_rejected_range - earlier.frames_rejected_range,
        }
    }

    pub fn accumulate(&mut self, delta: &ParserDiagnostics) {
        self.frames_ok += delta.frames_ok;
        self.frames_crc_fail += delta.frames_crc_fail;
        self.bytes_skipped_resync += delta.bytes_skipped_resync;
        self.frames_rejected_range += delta.frames_rejected_range;
    }
}

/// Resynchronizing stream decoder.
///
/// A candidate starts at every `0xAA 0x55` pair. Once 27 bytes are buffered
/// the candidate is checked (version, CRC, ADC ranges). A bad version or CRC
/// drops only the first sync byte and rescans, so a real frame hiding inside
/// a corrupt candidate is still found. Bytes discarded while hunting for sync
/// are counted in `bytes_skipped_resync`.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    diag: ParserDiagnostics,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn diagnostics(&self) -> ParserDiagnostics {
        self.diag
    }

    /// Bytes held back waiting for the rest of a frame.
    pub fn pending_bytes(&self) -> usize {
        self.buf.len()
    }

    /// Feeds one chunk; returns the frames completed by it and the change in
    /// diagnostics caused by this call.
    pub fn decode_stream(&mut self, chunk: &[u8]) -> (Vec<SensorFrame>, ParserDiagnostics) {
        let before = self.diag;
        let mut frames = Vec::new();
        self.push(chunk, &mut frames);
        (frames, self.diag.since(&before))
    }

    /// Like [`decode_stream`](Self::decode_stream) but appends into `out`.
    pub fn push(&mut self, chunk: &[u8], out: &mut Vec<SensorFrame>) {
        self.buf.extend_from_slice(chunk);
        let mut pos = 0;
        loop {
            // hunt for sync
            let start = pos;
            while pos < self.buf.len() {
                if self.buf[pos] == SYNC[0]
                    && (pos + 1 == self.buf.len() || self.buf[pos + 1] == SYNC[1])
                {
                    break;
                }
                pos += 1;
            }
            self.diag.bytes_skipped_resync += (pos - start) as u64;
            if self.buf.len() - pos < FRAME_LEN {
                break;
            }
            let cand: &[u8; FRAME_LEN] = self.buf[pos..pos + FRAME_LEN].try_into().unwrap();
            let crc = u16::from_be_bytes([cand[25], cand[26]]);
            if cand[2] != VERSION || crc16_ccitt_false(&cand[CRC_START..CRC_END]) != crc {
                self.diag.frames_crc_fail += 1;
                self.diag.bytes_skipped_resync += 1;
                pos += 1;
                continue;
            }
            let frame = parse_body(cand);
            pos += FRAME_LEN;
            if frame.out_of_range_field().is_some() {
                self.diag.frames_rejected_range += 1;
            } else {
                self.diag.frames_ok += 1;
                out.push(frame);
            }
        }
        self.buf.drain(..pos);
    }
}

/// One-shot decode of a complete byte buffer.
pub fn decode_all(bytes: &[u8]) -> (Vec<SensorFrame>, ParserDiagnostics) {
    FrameDecoder::new().decode_stream(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_frame() -> SensorFrame {
        SensorFrame {
            seq: 513,
            timestamp_ms: 123_456,
            ecg_raw: 700,
            ppg_raw: 401,
            red_raw: 98_765,
            ir_raw: 120_001,
            gsr_raw: 210,
            sound_raw: 512,
        }
    }

    #[test]
    fn zero_frame_layout() {
        let bytes = encode_frame(&SensorFrame::default()).unwrap();
        assert_eq!(bytes.len(), 27);
        assert_eq!(&bytes[..5], &[0xAA, 0x55, 0x01, 0x00, 0x00]);
        let mut body = [0u8; 23];
        body[0] = 0x01;
        assert_eq!(crc16_ccitt_false(&body).to_be_bytes(), [bytes[25], bytes[26]]);
    }

    #[test]
    fn empty_crc_is_init_value() {
        assert_eq!(crc16_ccitt_false(&[]), 0xFFFF);
    }

    #[test]
    fn range_guard_names_field() {
        let f = SensorFrame { ecg_raw: 2000, ..Default::default() };
        let err = encode_frame(&f).unwrap_err();
        assert_eq!(err.to_string(), "ecg_raw out of range");
        let f = SensorFrame { sound_raw: 1024, ..Default::default() };
        assert_eq!(encode_frame(&f).unwrap_err().to_string(), "sound_raw out of range");
    }

    #[test]
    fn one_byte_chunks() {
        let f = sample_frame();
        let bytes = encode_frame(&f).unwrap();
        let mut dec = FrameDecoder::new();
        let mut got = Vec::new();
        for b in bytes {
            let (frames, _) = dec.decode_stream(&[b]);
            got.extend(frames);
        }
        assert_eq!(got, vec![f]);
        assert_eq!(dec.diagnostics().frames_ok, 1);
        assert_eq!(dec.pending_bytes(), 0);
    }

    #[test]
    fn garbage_between_frames() {
        let a = sample_frame();
        let b = SensorFrame { seq: 514, timestamp_ms: 123_466, ..a };
        let mut bytes = encode_frame(&a).unwrap().to_vec();
        bytes.extend_from_slice(&[0x13, 0x37, 0x00]);
        bytes.extend_from_slice(&encode_frame(&b).unwrap());
        let (frames, diag) = decode_all(&bytes);
        assert_eq!(frames, vec![a, b]);
        assert_eq!(diag.bytes_skipped_resync, 3);
        assert_eq!(diag.frames_crc_fail, 0);
    }

    #[test]
    fn flipped_payload_byte_fails_crc() {
        let mut bytes = encode_frame(&sample_frame()).unwrap();
        bytes[10] ^= 0x01;
        let (frames, diag) = decode_all(&bytes);
        assert!(frames.is_empty());
        assert_eq!(diag.frames_crc_fail, 1);
        // the whole corrupt candidate is consumed while resyncing
        assert_eq!(diag.bytes_skipped_resync, 27);
    }

    #[test]
    fn valid_crc_but_adc_out_of_range_is_rejected() {
        let mut bytes = encode_frame(&sample_frame()).unwrap();
        bytes[9..11].copy_from_slice(&1024u16.to_le_bytes());
        let crc = crc16_ccitt_false(&bytes[2..25]);
        bytes[25..27].copy_from_slice(&crc.to_be_bytes());
        let (frames, diag) = decode_all(&bytes);
        assert!(frames.is_empty());
        assert_eq!(diag.frames_rejected_range, 1);
    }

    #[test]
    fn partial_tail_is_buffered() {
        let bytes = encode_frame(&sample_frame()).unwrap();
        let mut dec = FrameDecoder::new();
        let (frames, _) = dec.decode_stream(&bytes[..20]);
        assert!(frames.is_empty());
        assert_eq!(dec.pending_bytes(), 20);
        let (frames, _) = dec.decode_stream(&bytes[20..]);
        assert_eq!(frames.len(), 1);
    }

    #[test]
    fn trailing_sync_byte_is_kept() {
        let mut dec = FrameDecoder::new();
        dec.decode_stream(&[0x01, 0x02, 0xAA]);
        assert_eq!(dec.pending_bytes(), 1);
        assert_eq!(dec.diagnostics().bytes_skipped_resync, 2);
    }
}
