/**
 * JSON with lexeme-preserving numbers and a canonical printer.
 *
 * Fragment documents distinguish integers from decimals (`"cost": 1.0`
 * versus `"version": 1`), a distinction `JSON.parse` erases.  This module
 * keeps the source lexeme of every non-integer number so that
 * parse -> print reproduces the server's canonical bytes exactly:
 * sorted object keys, two-space indent, `": "` / `","` separators, and a
 * trailing newline.
 */

/** A number that must serialize with a specific decimal/exponent lexeme. */
export class Num {
  constructor(readonly raw: string) {
    if (!/^-?(0|[1-9]\d*)(\.\d+)?([eE][+-]?\d+)?$/.test(raw)) {
      throw new Error(`not a JSON number lexeme: ${raw}`);
    }
  }

  get value(): number {
    return Number(this.raw);
  }
}

export type JsonValue =
  | null
  | boolean
  | number
  | Num
  | string
  | JsonValue[]
  | { [key: string]: JsonValue };

/** Decimal lexeme for a float-typed field (3 -> "3.0", 1e-9 -> "1e-09"). */
export function decimal(n: number): Num {
  if (!Number.isFinite(n)) throw new Error(`not a finite number: ${n}`);
  let raw: string;
  if (Number.isInteger(n) && Math.abs(n) < 1e16) {
    raw = n.toFixed(1);
  } else {
    raw = Math.abs(n) !== 0 && Math.abs(n) < 1e-4 ? n.toExponential() : String(n);
  }
  // normalize exponent spelling to at least two digits ("1e-9" -> "1e-09")
  const m = raw.match(/^(-?[\d.]+)e([+-]?)(\d+)$/);
  if (m) {
    const sign = m[2] === "-" ? "-" : "+";
    raw = `${m[1]}e${sign}${m[3]!.padStart(2, "0")}`;
  }
  return new Num(raw);
}

export function plainValue(v: JsonValue): unknown {
  if (v instanceof Num) return v.value;
  if (Array.isArray(v)) return v.map(plainValue);
  if (v !== null && typeof v === "object") {
    return Object.fromEntries(Object.entries(v).map(([k, x]) => [k, plainValue(x)]));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
  private pos = 0;

  constructor(private readonly text: string) {}

  parse(): JsonValue {
    const value = this.value();
    this.ws();
    if (this.pos !== this.text.length) this.fail("trailing data");
    return value;
  }

  private fail(message: string): never {
    throw new Error(`invalid JSON at offset ${this.pos}: ${message}`);
  }

  private ws(): void {
    let ch = this.text[this.pos];
    while (ch === " " || ch === "\t" || ch === "\n" || ch === "\r") {
      this.pos++;
      ch = this.text[this.pos];
    }
  }

  private value(): JsonValue {
    this.ws();
    const ch = this.text[this.pos];
    if (ch === "{") return this.object();
    if (ch === "[") return this.array();
    if (ch === '"') return this.string();
    if (ch === "t" || ch === "f" || ch === "n") return this.keyword();
    if (ch === "-" || (ch !== undefined && ch >= "0" && ch <= "9")) return this.number();
    this.fail(`unexpected ${JSON.stringify(ch ?? "end of input")}`);
  }

  private keyword(): JsonValue {
    for (const [word, value] of [["true", true], ["false", false], ["null", null]] as const) {
      if (this.text.startsWith(word, this.pos)) {
        this.pos += word.length;
        return value;
      }
    }
    this.fail("bad keyword");
  }

  private number(): number | Num {
    const m = /-?(0|[1-9]\d*)(\.\d+)?([eE][+-]?\d+)?/y;
    m.lastIndex = this.pos;
    const hit = m.exec(this.text);
    if (!hit || hit.index !== this.pos) this.fail("bad number");
    this.pos += hit[0].length;
    const integral = hit[2] === undefined && hit[3] === undefined;
    if (integral && Number.isSafeInteger(Number(hit[0]))) return Number(hit[0]);
    return new Num(hit[0]);
  }

  private string(): string {
    const start = this.pos;
    this.pos++; // opening quote
    while (true) {
      const ch = this.text[this.pos];
      if (ch === undefined) this.fail("unterminated string");
      if (ch === '"') {
        this.pos++;
        return JSON.parse(this.text.slice(start, this.pos)) as string;
      }
      this.pos += ch === "\\" ? 2 : 1;
    }
  }

  private array(): JsonValue[] {
    this.pos++; // [
    const out: JsonValue[] = [];
    this.ws();
    if (this.text[this.pos] === "]") {
      this.pos++;
      return out;
    }
    while (true) {
      out.push(this.value());
      this.ws();
      const ch = this.text[this.pos];
      this.pos++;
      if (ch === "]") return out;
      if (ch !== ",") this.fail("expected ',' or ']'");
    }
  }

  private object(): { [key: string]: JsonValue } {
    this.pos++; // {
    const out: { [key: string]: JsonValue } = {};
    this.ws();
    if (this.text[this.pos] === "}") {
      this.pos++;
      return out;
    }
    while (true) {
      this.ws();
      if (this.text[this.pos] !== '"') this.fail("expected object key");
      const key = this.string();
      this.ws();
      if (this.text[this.pos] !== ":") this.fail("expected ':'");
      this.pos++;
      out[key] = this.value();
      this.ws();
      const ch = this.text[this.pos];
      this.pos++;
      if (ch === "}") return out;
      if (ch !== ",") this.fail("expected ',' or '}'");
    }
  }
}

export function parseJson(text: string): JsonValue {
  return new Parser(text).parse();
}

// ---------------------------------------------------------------------------
// Canonical printer

function printValue(value: JsonValue, indent: string): string {
  if (value === null) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isSafeInteger(value)) {
      throw new Error(`non-integer plain number ${value}; wrap it with decimal()`);
    }
    return String(value);
  }
  if (value instanceof Num) return value.raw;
  if (typeof value === "string") return JSON.stringify(value);
  const inner = indent + "  ";
  if (Array.isArray(value)) {
    if (value.length === 0) return "[]";
    const items = value.map((v) => inner + printValue(v, inner));
    return "[\n" + items.join(",\n") + "\n" + indent + "]";
  }
  const keys = Object.keys(value).sort();
  if (keys.length === 0) return "{}";
  const items = keys.map(
    (k) => inner + JSON.stringify(k) + ": " + printValue(value[k]!, inner),
  );
  return "{\n" + items.join(",\n") + "\n" + indent + "}";
}

/** Sorted-key, 2-space-indented JSON text with a trailing newline. */
export function canonicalJson(value: JsonValue): string {
  return printValue(value, "") + "\n";
}
