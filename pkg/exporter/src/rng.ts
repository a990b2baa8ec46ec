/**
 * Deterministic PRNG for projection weights. splitmix64 over BigInt keeps the
 * stream exact on every platform; normals come from an Irwin-Hall 12-sum so
 * no transcendental functions (whose last ulp varies between engines) enter
 * the weight values.
 */

const MASK64 = (1n << 64n) - 1n;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint) {
    this.state = seed & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  }

  /** Uniform double in [0, 1) from the top 53 bits. */
  nextUniform(): number {
    return Number(this.nextU64() >> 11n) / 9007199254740992;
  }

  /** Approximately standard normal (Irwin-Hall with 12 summands). */
  nextNormal(): number {
    let sum = 0;
    for (let i = 0; i < 12; i++) sum += this.nextUniform();
    return sum - 6;
  }
}

/** FNV-1a over UTF-8, widened to 64 bits; stable seed per preset name. */
export function seedFromString(text: string): bigint {
  let hash = 0xcbf29ce484222325n;
  for (const byte of Buffer.from(text, "utf-8")) {
    hash ^= BigInt(byte);
    hash = (hash * 0x100000001b3n) & MASK64;
  }
  return hash;
}
