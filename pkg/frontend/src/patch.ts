/**
 * Cell encoding for the tag PATCH body.
 *
 * The wire format is the database's cell text: single tags carry the
 * option name, multi tags the selected options joined with "; " in
 * schema order (never click order), dates ISO, and an empty string
 * clears the cell.
 */

import type { TagDef } from "./api.js";

export function encodeMulti(def: TagDef, selected: ReadonlySet<string>): string {
  return def.options.filter((option) => selected.has(option)).join("; ");
}

export function decodeMulti(text: string): Set<string> {
  if (!text) return new Set();
  return new Set(text.split("; "));
}
