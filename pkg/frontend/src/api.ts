/**
 * Typed client for the tagbase HTTP API.
 *
 * Every screen talks to the service through this module and nowhere
 * else; the UI does no counting or filtering of its own, so each number
 * it shows can be traced to a field in one of these responses.
 */

export interface TagDef {
  name: string;
  kind: "single" | "multi" | "date" | "text" | "note";
  options: string[];
}

export interface SchemaGroup {
  name: string;
  tags: TagDef[];
}

export interface SchemaJson {
  fingerprint: string;
  groups: SchemaGroup[];
}

export interface RowJson {
  key: string;
  citation: Record<string, string>;
  tags: Record<string, string>;
}

export interface RowsPage {
  total: number;
  offset: number;
  limit: number;
  rows: RowJson[];
}

export interface DatabaseMeta {
  name: string;
  current: string;
  rows: number;
  schema_fingerprint: string;
  columns: string[];
}

export interface DatabaseDetail extends DatabaseMeta {
  schema: SchemaJson;
}

export interface CountsJson {
  rows_counted: number;
  tags: Record<string, Record<string, number>>;
}

export interface CrosstabJson {
  row_tag: string;
  col_tag: string;
  row_labels: string[];
  col_labels: string[];
  counts: number[][];
  filtered_row_count: number;
}

export interface SyncReportJson {
  added: string[];
  removed: RowJson[];
  citation_updated: Record<string, Record<string, [string, string]>>;
  current?: string;
}

export interface SchemaDeltaJson {
  added_tags: string[];
  removed_tags: string[];
  kind_changed: [string, string, string][];
  added_options: [string, string][];
  removed_options: [string, string][];
}

export interface ConformReportJson {
  policy: string;
  tags_added: string[];
  tags_removed: [string, number][];
  cells_invalidated: { key: string; tag: string; value: string }[];
  schema_delta: SchemaDeltaJson | null;
  current?: string;
}

export interface ReplaceOptionResult {
  cells_changed: number;
  schema_delta: SchemaDeltaJson;
  current?: string;
}

export interface DiffReportJson {
  keys_only_in_a: string[];
  keys_only_in_b: string[];
  columns_only_in_a: string[];
  columns_only_in_b: string[];
  changed_cells: { key: string; column: string; a: string; b: string }[];
}

export interface MergeResultJson {
  database: DatabaseMeta;
  report: {
    source_row_counts: number[];
    duplicates: { key: string; winner_index: number; policy: string }[];
  };
}

export interface RelinkReportJson {
  matched: { old_key: string; new_key: string; matched_by: string }[];
  unmatched_rows: string[];
  unmatched_records: string[];
  ambiguous: string[];
  current?: string;
}

export interface VersionsJson {
  current: string;
  versions: string[];
}

/** A non-2xx response, carrying the service's error name and detail text. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly type: string,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

function query(params: Record<string, string | number | undefined>): string {
  const search = new URLSearchParams();
  for (const [name, value] of Object.entries(params)) {
    if (value !== undefined && value !== "") search.set(name, String(value));
  }
  const text = search.toString();
  return text ? `?${text}` : "";
}

export class Api {
  constructor(
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly base = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let type = "HttpError";
      let detail = `${response.status}`;
      try {
        const body = (await response.json()) as {
          error?: string;
          detail?: string;
        };
        if (body.error) type = body.error;
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, type, detail);
    }
    return (await response.json()) as T;
  }

  listDatabases(): Promise<{ databases: DatabaseMeta[] }> {
    return this.request("/api/databases");
  }

  getDatabase(name: string): Promise<DatabaseDetail> {
    return this.request(`/api/databases/${encodeURIComponent(name)}`);
  }

  getRows(
    name: string,
    params: { filter?: string; offset?: number; limit?: number } = {},
  ): Promise<RowsPage> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/rows` + query(params),
    );
  }

  getRow(name: string, key: string): Promise<RowJson> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/rows/${encodeURIComponent(key)}`,
    );
  }

  /** One PATCH per Save press; the body holds every dirty cell at once. */
  patchTags(
    name: string,
    key: string,
    cells: Record<string, string>,
  ): Promise<RowJson> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/rows/${encodeURIComponent(key)}/tags`,
      {
        method: "PATCH",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(cells),
      },
    );
  }

  createDatabase(
    name: string,
    exportFile: File,
    categories: File[],
  ): Promise<DatabaseMeta> {
    const form = new FormData();
    form.set("name", name);
    form.set("export", exportFile);
    for (const file of categories) form.append("categories", file);
    return this.request("/api/databases", { method: "POST", body: form });
  }

  sync(name: string, exportFile: File): Promise<SyncReportJson> {
    const form = new FormData();
    form.set("export", exportFile);
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/sync`,
      { method: "POST", body: form },
    );
  }

  conform(
    name: string,
    categories: File[],
    strict: boolean,
  ): Promise<ConformReportJson> {
    const form = new FormData();
    for (const file of categories) form.append("categories", file);
    form.set("strict", strict ? "true" : "false");
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/conform`,
      { method: "POST", body: form },
    );
  }

  replaceOption(
    name: string,
    body: { tag: string; old: string; new: string },
  ): Promise<ReplaceOptionResult> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/replace-option`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
  }

  relink(name: string, exportFile: File): Promise<RelinkReportJson> {
    const form = new FormData();
    form.set("export", exportFile);
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/relink`,
      { method: "POST", body: form },
    );
  }

  merge(body: {
    names: string[];
    policy: string;
    out: string;
  }): Promise<MergeResultJson> {
    return this.request("/api/merge", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  counts(name: string, filter?: string): Promise<CountsJson> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/counts` + query({ filter }),
    );
  }

  crosstab(
    name: string,
    rows: string,
    cols: string,
    filter?: string,
  ): Promise<CrosstabJson> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/crosstab` +
        query({ rows, cols, filter }),
    );
  }

  diffAgainst(name: string, version: string): Promise<DiffReportJson> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/diff` +
        query({ against: version }),
    );
  }

  versions(name: string): Promise<VersionsJson> {
    return this.request(
      `/api/databases/${encodeURIComponent(name)}/versions`,
    );
  }

  /** Browser-download URL for the filtered CSV table. */
  tableUrl(name: string, columns?: string[], filter?: string): string {
    return (
      this.base +
      `/api/databases/${encodeURIComponent(name)}/table` +
      query({ columns: columns?.join(","), filter })
    );
  }

  /** Browser-download URL for the HTML report built from a spec. */
  reportUrl(name: string, spec: object): string {
    return (
      this.base +
      `/api/databases/${encodeURIComponent(name)}/report` +
      query({ spec: JSON.stringify(spec) })
    );
  }
}
