//! Encode a few frames, damage the byte stream, and watch the decoder
//! resynchronize.
//!
//!     cargo run --example frame_codec

use sleepwatch::protocol::{crc16_ccitt_false, encode_frame, encode_stream, FrameDecoder, FRAME_LEN};
use sleepwatch::SensorFrame;

fn main() {
    println!("crc16(\"123456789\") = {:#06x}", crc16_ccitt_false(b"123456789"));

    let frames: Vec<SensorFrame> = (0..8)
        .map(|i| SensorFrame {
            seq: i,
            timestamp_ms: u32::from(i) * 10,
            ecg_raw: 512,
            ppg_raw: 400 + i,
            red_raw: 95_000,
            ir_raw: 120_000,
            gsr_raw: 280,
            sound_raw: 512,
        })
        .collect();

    let one = encode_frame(&frames[0]).unwrap();
    let hex: Vec<String> = one.iter().map(|b| format!("{b:02x}")).collect();
    println!("frame 0 on the wire ({FRAME_LEN} bytes): {}", hex.join(" "));

    let mut bytes = vec![0x13, 0x37, 0xAA];
    bytes.extend(encode_stream(&frames).unwrap());
    // flip a payload byte in frame 2 and drop half of frame 5
    bytes[3 + 2 * FRAME_LEN + 12] ^= 0x40;
    let cut = 3 + 5 * FRAME_LEN;
    bytes.drain(cut..cut + 13);

    let mut dec = FrameDecoder::new();
    let mut got = Vec::new();
    // feed in awkward chunk sizes
    for chunk in bytes.chunks(11) {
        let (out, _) = dec.decode_stream(chunk);
        got.extend(out);
    }
    let seqs: Vec<u16> = got.iter().map(|f| f.seq).collect();
    println!("recovered seqs: {seqs:?}");
    println!("diagnostics: {:?}", dec.diagnostics());

    let bad = SensorFrame { ecg_raw: 2000, ..frames[0] };
    println!("encoding ecg_raw=2000: {}", encode_frame(&bad).unwrap_err());
}
