/**
 * Sync screen: upload a fresh Zotero export and show what changed.
 * Removed rows keep their tags in the report (and in the service's
 * sidecar file), so nothing silently disappears.
 */

import { Api, ApiError } from "./api.js";
import type { SyncReportJson } from "./api.js";
import { el, clear } from "./dom.js";
import { Session } from "./session.js";

export class SyncController {
  report: SyncReportJson | null = null;
  error: string | null = null;
  onChange: () => void = () => {};

  constructor(
    private readonly api: Api,
    readonly session: Session,
  ) {}

  async run(exportFile: File): Promise<void> {
    if (!this.session.database) return;
    this.error = null;
    try {
      this.report = await this.api.sync(this.session.database, exportFile);
    } catch (error) {
      this.report = null;
      this.error = error instanceof ApiError ? error.message : String(error);
    }
    this.onChange();
  }
}

function reportView(report: SyncReportJson): HTMLElement {
  const box = el("div", { class: "sync-report" });
  box.append(
    el("p", {},
      `${report.added.length} added, ${report.removed.length} removed, ` +
      `${Object.keys(report.citation_updated).length} citations refreshed.`),
  );
  if (report.added.length) {
    box.append(el("h4", {}, "Added"), el("p", {}, report.added.join(", ")));
  }
  if (report.removed.length) {
    const list = el("ul");
    for (const row of report.removed) {
      const kept = Object.entries(row.tags)
        .filter(([, value]) => value)
        .map(([tag, value]) => `${tag}=${value}`)
        .join(", ");
      list.append(
        el("li", {}, `${row.key} ${row.citation["Title"] ?? ""}` +
          (kept ? ` [kept tags: ${kept}]` : "")),
      );
    }
    box.append(el("h4", {}, "Removed (tags preserved in a sidecar file)"), list);
  }
  const refreshed = Object.entries(report.citation_updated);
  if (refreshed.length) {
    const list = el("ul");
    for (const [key, changes] of refreshed) {
      const parts = Object.entries(changes)
        .map(([column, [was, now]]) => `${column}: '${was}' -> '${now}'`)
        .join("; ");
      list.append(el("li", {}, `${key}: ${parts}`));
    }
    box.append(el("h4", {}, "Citation columns refreshed"), list);
  }
  return box;
}

export function renderSync(root: HTMLElement, ctl: SyncController): void {
  const draw = () => {
    clear(root);
    const file = el("input", {
      type: "file",
      accept: ".csv,text/csv",
    }) as HTMLInputElement;
    const run = el("button", { type: "button" }, "Sync");
    run.addEventListener("click", () => {
      const chosen = file.files?.[0];
      if (chosen) void ctl.run(chosen);
    });
    root.append(
      el("p", { class: "hint" },
        "Upload the current Zotero export; rows are added and removed " +
        "to match it and citation columns are refreshed. Tags follow " +
        "their papers."),
      el("div", { class: "sync-form" }, file, run),
    );
    if (ctl.error) root.append(el("p", { class: "save-error" }, ctl.error));
    if (ctl.report) root.append(reportView(ctl.report));
  };
  ctl.onChange = draw;
  draw();
}
