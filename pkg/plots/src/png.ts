/**
 * Minimal PNG writer: 8-bit RGB, filter 0, zlib via node's built-in
 * deflate. Text metadata goes into tEXt chunks so tests can read values
 * back verbatim.
 */

import * as zlib from "zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (let i = 0; i < buf.length; i++) {
    c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(data.length, 0);
  const body = Buffer.concat([Buffer.from(type, "latin1"), data]);
  const tail = Buffer.alloc(4);
  tail.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head, body, tail]);
}

export function encodePng(
  width: number,
  height: number,
  rgb: Uint8Array,
  text: Record<string, string> = {}
): Buffer {
  if (rgb.length !== width * height * 3) {
    throw new Error("pixel buffer size mismatch");
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // RGB
  const raw = Buffer.alloc(height * (width * 3 + 1));
  for (let y = 0; y < height; y++) {
    const rowStart = y * (width * 3 + 1);
    raw[rowStart] = 0; // filter: none
    raw.set(rgb.subarray(y * width * 3, (y + 1) * width * 3), rowStart + 1);
  }
  const chunks = [SIGNATURE, chunk("IHDR", ihdr)];
  for (const [key, value] of Object.entries(text)) {
    chunks.push(
      chunk("tEXt", Buffer.concat([
        Buffer.from(key, "latin1"),
        Buffer.from([0]),
        Buffer.from(value, "latin1"),
      ]))
    );
  }
  chunks.push(chunk("IDAT", zlib.deflateSync(raw)));
  chunks.push(chunk("IEND", Buffer.alloc(0)));
  return Buffer.concat(chunks);
}

/** Read back tEXt entries (used by the test suite). */
export function readTextChunks(png: Buffer): Record<string, string> {
  if (!png.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("not a PNG");
  }
  const out: Record<string, string> = {};
  let pos = 8;
  while (pos + 8 <= png.length) {
    const len = png.readUInt32BE(pos);
    const type = png.subarray(pos + 4, pos + 8).toString("latin1");
    if (type === "tEXt") {
      const data = png.subarray(pos + 8, pos + 8 + len);
      const sep = data.indexOf(0);
      out[data.subarray(0, sep).toString("latin1")] = data
        .subarray(sep + 1)
        .toString("latin1");
    }
    pos += 12 + len;
    if (type === "IEND") break;
  }
  return out;
}
