import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { Num, canonicalJson, decimal, parseJson, plainValue } from "../src/jsontext.js";

const FIXTURE = fileURLToPath(
  new URL("../../fixtures/stats-avg-median.json", import.meta.url),
);

describe("canonicalJson", () => {
  it("sorts keys, indents by two, ends with a newline", () => {
    expect(canonicalJson({ b: 1, a: 2 })).toBe('{\n  "a": 2,\n  "b": 1\n}\n');
  });

  it("prints empty containers compactly", () => {
    expect(canonicalJson({ a: [], b: {} })).toBe('{\n  "a": [],\n  "b": {}\n}\n');
  });

  it("keeps decimal lexemes distinct from integers", () => {
    expect(canonicalJson({ cost: decimal(1), version: 1 })).toBe(
      '{\n  "cost": 1.0,\n  "version": 1\n}\n',
    );
  });

  it("rejects bare non-integer numbers", () => {
    expect(() => canonicalJson({ x: 0.5 })).toThrow(/decimal/);
  });
});

describe("decimal", () => {
  it.each([
    [1, "1.0"],
    [3, "3.0"],
    [2.5, "2.5"],
    [0.6, "0.6"],
    [1e-9, "1e-09"],
    [0.00001, "1e-05"],
    [0, "0.0"],
    [-2, "-2.0"],
  ])("formats %s as %s", (value, raw) => {
    expect(decimal(value).raw).toBe(raw);
    expect(decimal(value).value).toBe(value);
  });
});

describe("parseJson", () => {
  it("keeps number lexemes of non-integers", () => {
    const doc = parseJson('{"a": 1.0, "b": 1, "c": 1e-09}') as Record<string, unknown>;
    expect(doc["a"]).toBeInstanceOf(Num);
    expect((doc["a"] as Num).raw).toBe("1.0");
    expect(doc["b"]).toBe(1);
    expect((doc["c"] as Num).value).toBe(1e-9);
  });

  it("round-trips the demo fragment file byte-for-byte", () => {
    const text = readFileSync(FIXTURE, "utf-8");
    expect(canonicalJson(parseJson(text))).toBe(text);
  });

  it("rejects malformed documents", () => {
    expect(() => parseJson("{not json")).toThrow(/invalid JSON/);
    expect(() => parseJson('{"a": 1} trailing')).toThrow(/trailing/);
  });

  it("parses escapes and nested structures", () => {
    expect(parseJson('["a\\nb", {"k": [true, false, null]}]')).toEqual([
      "a\nb",
      { k: [true, false, null] },
    ]);
  });
});

describe("plainValue", () => {
  it("unwraps lexeme numbers recursively", () => {
    expect(plainValue(parseJson('{"a": [1.5, 2], "b": {"c": 0.25}}'))).toEqual({
      a: [1.5, 2],
      b: { c: 0.25 },
    });
  });
});
