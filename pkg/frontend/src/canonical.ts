/** Lexeme-preserving JSON canonicalization for digest verification.
 *
 * The corpus manifest stores a SHA-256 digest of its config serialized
 * as sorted-key, no-whitespace JSON. Re-serializing a parsed config
 * cannot reproduce that byte stream in general (a float written "1.0"
 * would re-emit as "1"), so the canonical form is rebuilt from the raw
 * manifest text instead: tokens keep their original spelling, object
 * keys are sorted, and whitespace is dropped. For any manifest the
 * generator wrote, this recovers the digested bytes exactly.
 */

import { FormatError } from "./errors.js";

type JsonNode =
  | { kind: "lexeme"; text: string }
  | { kind: "array"; items: JsonNode[] }
  | { kind: "object"; entries: { keyLexeme: string; key: string; value: JsonNode }[] };

class Parser {
  private pos = 0;

  constructor(private readonly text: string) {}

  private error(message: string): FormatError {
    return new FormatError(`manifest JSON: ${message} at offset ${this.pos}`);
  }

  private skipWhitespace(): void {
    while (this.pos < this.text.length &&
           " \t\n\r".includes(this.text[this.pos]!)) {
      this.pos += 1;
    }
  }

  private peek(): string {
    if (this.pos >= this.text.length) throw this.error("unexpected end");
    return this.text[this.pos]!;
  }

  private expect(ch: string): void {
    if (this.peek() !== ch) {
      throw this.error(`expected ${JSON.stringify(ch)}, ` +
                       `found ${JSON.stringify(this.peek())}`);
    }
    this.pos += 1;
  }

  private stringLexeme(): string {
    const start = this.pos;
    this.expect('"');
    while (this.peek() !== '"') {
      if (this.peek() === "\\") this.pos += 1;
      this.pos += 1;
    }
    this.pos += 1;
    return this.text.slice(start, this.pos);
  }

  private scalarLexeme(): string {
    const start = this.pos;
    while (this.pos < this.text.length &&
           !',}] \t\n\r'.includes(this.text[this.pos]!)) {
      this.pos += 1;
    }
    const lexeme = this.text.slice(start, this.pos);
    if (!/^(-?\d+(\.\d+)?([eE][+-]?\d+)?|true|false|null)$/.test(lexeme)) {
      throw this.error(`invalid token ${JSON.stringify(lexeme)}`);
    }
    return lexeme;
  }

  value(): JsonNode {
    this.skipWhitespace();
    const ch = this.peek();
    if (ch === "{") {
      this.pos += 1;
      const entries: { keyLexeme: string; key: string; value: JsonNode }[] = [];
      this.skipWhitespace();
      if (this.peek() === "}") {
        this.pos += 1;
        return { kind: "object", entries };
      }
      for (;;) {
        this.skipWhitespace();
        const keyLexeme = this.stringLexeme();
        this.skipWhitespace();
        this.expect(":");
        entries.push({ keyLexeme, key: JSON.parse(keyLexeme) as string,
                       value: this.value() });
        this.skipWhitespace();
        if (this.peek() === ",") {
          this.pos += 1;
          continue;
        }
        this.expect("}");
        return { kind: "object", entries };
      }
    }
    if (ch === "[") {
      this.pos += 1;
      const items: JsonNode[] = [];
      this.skipWhitespace();
      if (this.peek() === "]") {
        this.pos += 1;
        return { kind: "array", items };
      }
      for (;;) {
        items.push(this.value());
        this.skipWhitespace();
        if (this.peek() === ",") {
          this.pos += 1;
          continue;
        }
        this.expect("]");
        return { kind: "array", items };
      }
    }
    if (ch === '"') return { kind: "lexeme", text: this.stringLexeme() };
    return { kind: "lexeme", text: this.scalarLexeme() };
  }

  parseDocument(): JsonNode {
    const node = this.value();
    this.skipWhitespace();
    if (this.pos !== this.text.length) {
      throw this.error("trailing content");
    }
    return node;
  }
}

function emit(node: JsonNode): string {
  switch (node.kind) {
    case "lexeme":
      return node.text;
    case "array":
      return `[${node.items.map(emit).join(",")}]`;
    case "object": {
      // Keys in generated manifests are ASCII, where UTF-16 code unit
      // order matches the writer's code point sort.
      const sorted = [...node.entries].sort((a, b) =>
        a.key < b.key ? -1 : a.key > b.key ? 1 : 0);
      return `{${sorted.map((e) => `${e.keyLexeme}:${emit(e.value)}`).join(",")}}`;
    }
  }
}

/** Compact, key-sorted form of the value under `key` in a raw JSON
 * document, with every scalar keeping its original spelling. */
export function canonicalMemberJson(rawDocument: string, key: string): string {
  const root = new Parser(rawDocument).parseDocument();
  if (root.kind !== "object") {
    throw new FormatError("manifest JSON: top level is not an object");
  }
  const entry = root.entries.find((e) => e.key === key);
  if (entry === undefined) {
    throw new FormatError(`manifest JSON: missing member ${JSON.stringify(key)}`);
  }
  return emit(entry.value);
}
