/**
 * EMB1 binary embedding tables, bit-compatible with the python pipeline.
 *
 * Layout (little-endian): magic "EMB1", u32 dimension, u64 record count,
 * u32 vocabulary length, then length-prefixed UTF-8 names (u16 + bytes),
 * then per record { u64 id, u32 label, u8 split, dimension x f32 }.
 */

export const SPLIT_CODES: Record<string, number> = { train: 0, test: 1, unassigned: 2 };

export interface Emb1Record {
  id: bigint;
  label: number;
  split: number;
  vector: Float32Array;
}

export interface Emb1Table {
  dimension: number;
  vocabulary: string[];
  records: Emb1Record[];
}

export function writeEmb1(table: Emb1Table): Buffer {
  const { dimension, vocabulary, records } = table;
  const names = vocabulary.map((name) => Buffer.from(name, "utf-8"));
  const headerSize = 4 + 4 + 8 + 4 + names.reduce((acc, b) => acc + 2 + b.length, 0);
  const recordSize = 8 + 4 + 1 + 4 * dimension;
  const buffer = Buffer.alloc(headerSize + recordSize * records.length);
  const view = new DataView(buffer.buffer, buffer.byteOffset, buffer.length);

  buffer.write("EMB1", 0, "latin1");
  view.setUint32(4, dimension, true);
  view.setBigUint64(8, BigInt(records.length), true);
  view.setUint32(16, vocabulary.length, true);
  let offset = 20;
  for (const name of names) {
    view.setUint16(offset, name.length, true);
    name.copy(buffer, offset + 2);
    offset += 2 + name.length;
  }
  for (const record of records) {
    if (record.vector.length !== dimension) {
      throw new Error(`record ${record.id} has ${record.vector.length} entries, expected ${dimension}`);
    }
    view.setBigUint64(offset, record.id, true);
    view.setUint32(offset + 8, record.label, true);
    view.setUint8(offset + 12, record.split);
    let cursor = offset + 13;
    for (const value of record.vector) {
      view.setFloat32(cursor, value, true);
      cursor += 4;
    }
    offset += recordSize;
  }
  return buffer;
}

/** Reader used by the tests to check what actually landed on disk. */
export function readEmb1(buffer: Buffer): Emb1Table {
  if (buffer.subarray(0, 4).toString("latin1") !== "EMB1") {
    throw new Error("not an EMB1 buffer");
  }
  const view = new DataView(buffer.buffer, buffer.byteOffset, buffer.length);
  const dimension = view.getUint32(4, true);
  const count = Number(view.getBigUint64(8, true));
  const vocabLen = view.getUint32(16, true);
  let offset = 20;
  const vocabulary: string[] = [];
  for (let i = 0; i < vocabLen; i++) {
    const nameLen = view.getUint16(offset, true);
    vocabulary.push(buffer.subarray(offset + 2, offset + 2 + nameLen).toString("utf-8"));
    offset += 2 + nameLen;
  }
  const records: Emb1Record[] = [];
  for (let r = 0; r < count; r++) {
    const id = view.getBigUint64(offset, true);
    const label = view.getUint32(offset + 8, true);
    const split = view.getUint8(offset + 12);
    const vector = new Float32Array(dimension);
    for (let c = 0; c < dimension; c++) {
      vector[c] = view.getFloat32(offset + 13 + 4 * c, true);
    }
    records.push({ id, label, split, vector });
    offset += 13 + 4 * dimension;
  }
  if (offset !== buffer.length) throw new Error("trailing bytes after last record");
  return { dimension, vocabulary, records };
}
