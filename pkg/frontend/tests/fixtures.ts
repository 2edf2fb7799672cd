/** Shared fixture data and a recording fake fetch for the suites. */

import type {
  CrosstabJson,
  FetchLike,
  RowJson,
  SchemaJson,
} from "../src/api.js";

export const SCHEMA: SchemaJson = {
  fingerprint: "abc123",
  groups: [
    {
      name: "Methods",
      tags: [
        { name: "StudyType", kind: "single", options: ["Field", "Lab", "Model"] },
        { name: "Region", kind: "multi", options: ["Arctic", "Atlantic", "Pacific"] },
        { name: "PubDate", kind: "date", options: [] },
        { name: "Rating", kind: "text", options: [] },
      ],
    },
    {
      name: "Notes",
      tags: [{ name: "Summary", kind: "note", options: [] }],
    },
  ],
};

export const ROW: RowJson = {
  key: "ABCD1234",
  citation: {
    "Item Type": "journalArticle",
    Author: "Smith, Jane; Doe, John",
    Title: "Arctic drift revisited",
    "Publication Year": "2019",
    "Publication Title": "Polar Science",
    DOI: "10.1000/a1",
    Url: "https://example.org/a1",
    "Abstract Note": "Long abstract one",
    "Date Added": "2020-01-02 10:00:00",
  },
  tags: { StudyType: "", Region: "", PubDate: "", Rating: "", Summary: "" },
};

export const CROSSTAB: CrosstabJson = {
  row_tag: "StudyType",
  col_tag: "Region",
  row_labels: ["Field", "Lab", "Model", "(none)"],
  col_labels: ["Arctic", "Atlantic", "Pacific", "(none)"],
  counts: [
    [1, 0, 1, 0],
    [2, 0, 1, 0],
    [0, 0, 0, 1],
    [0, 1, 0, 0],
  ],
  filtered_row_count: 4,
};

export interface RecordedCall {
  url: string;
  init?: RequestInit;
}

export type Router = (
  url: string,
  init?: RequestInit,
) => unknown | Response;

/** fetch double: routes URLs to canned bodies, records every call. */
export function fakeFetch(route: Router): {
  fn: FetchLike;
  calls: RecordedCall[];
} {
  const calls: RecordedCall[] = [];
  const fn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const out = route(url, init);
    if (out instanceof Response) return out;
    return new Response(JSON.stringify(out), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fn, calls };
}

export function jsonError(status: number, error: string, detail: string): Response {
  return new Response(JSON.stringify({ error, detail }), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
