/**
 * Maintenance screen: option usage counts, a diff of the current state
 * against any stored version, option rename/merge, and merging whole
 * databases. The mutating actions go through a confirmation dialog
 * first; the dialog function is injectable for tests.
 */

import { Api, ApiError } from "./api.js";
import type {
  CountsJson,
  DiffReportJson,
  SchemaJson,
  TagDef,
} from "./api.js";
import { el, clear } from "./dom.js";
import { Session } from "./session.js";

export class MaintenanceController {
  counts: CountsJson | null = null;
  diffReport: DiffReportJson | null = null;
  diffVersion = "";
  versions: string[] = [];
  message: string | null = null;
  error: string | null = null;
  /** Injectable confirmation for the destructive actions. */
  confirm: (question: string) => boolean = () => true;
  onChange: () => void = () => {};

  constructor(
    private readonly api: Api,
    readonly session: Session,
    readonly schema: SchemaJson,
  ) {}

  private get database(): string {
    if (!this.session.database) throw new Error("no database selected");
    return this.session.database;
  }

  selectionTags(): TagDef[] {
    return this.schema.groups
      .flatMap((group) => group.tags)
      .filter((def) => def.kind === "single" || def.kind === "multi");
  }

  private async guard(action: () => Promise<string>): Promise<void> {
    this.error = null;
    this.message = null;
    try {
      this.message = await action();
    } catch (error) {
      this.error = error instanceof ApiError ? error.message : String(error);
    }
    this.onChange();
  }

  async loadCounts(): Promise<void> {
    await this.guard(async () => {
      this.counts = await this.api.counts(this.database);
      return "";
    });
  }

  async loadVersions(): Promise<void> {
    const body = await this.api.versions(this.database);
    // the newest entry is the current state itself; diff against older
    this.versions = body.versions.filter((v) => v !== body.current);
    this.diffVersion = this.versions[0] ?? "";
    this.onChange();
  }

  async runDiff(): Promise<void> {
    if (!this.diffVersion) return;
    await this.guard(async () => {
      this.diffReport = await this.api.diffAgainst(
        this.database,
        this.diffVersion,
      );
      return "";
    });
  }

  async replaceOption(tag: string, oldName: string, newName: string): Promise<void> {
    const question =
      `Replace option '${oldName}' of tag '${tag}' with '${newName}' ` +
      "across the whole database?";
    if (!this.confirm(question)) return;
    await this.guard(async () => {
      const result = await this.api.replaceOption(this.database, {
        tag,
        old: oldName,
        new: newName,
      });
      return `${result.cells_changed} cells updated.`;
    });
  }

  async mergeDatabases(names: string[], out: string, policy: string): Promise<void> {
    const question =
      `Merge ${names.join(", ")} into a new database '${out}'?`;
    if (!this.confirm(question)) return;
    await this.guard(async () => {
      const result = await this.api.merge({ names, policy, out });
      return `Created '${out}' with ${result.database.rows} rows.`;
    });
  }
}

function countsTable(counts: CountsJson): HTMLElement {
  const table = el("table", { class: "counts" });
  table.append(el("tr", {},
    el("th", {}, "tag"), el("th", {}, "option"), el("th", {}, "papers")));
  for (const [tag, labels] of Object.entries(counts.tags)) {
    for (const [label, count] of Object.entries(labels)) {
      table.append(el("tr", {},
        el("td", {}, tag), el("td", {}, label), el("td", {}, String(count))));
    }
  }
  return el("div", { class: "counts-box" },
    el("p", {}, `${counts.rows_counted} papers counted`), table);
}

function diffView(report: DiffReportJson): HTMLElement {
  const box = el("div", { class: "diff-box" });
  if (report.keys_only_in_a.length) {
    box.append(el("p", {}, `only now: ${report.keys_only_in_a.join(", ")}`));
  }
  if (report.keys_only_in_b.length) {
    box.append(el("p", {}, `only then: ${report.keys_only_in_b.join(", ")}`));
  }
  const list = el("ul");
  for (const cell of report.changed_cells) {
    list.append(el("li", {},
      `${cell.key} / ${cell.column}: '${cell.b}' -> '${cell.a}'`));
  }
  if (report.changed_cells.length) box.append(list);
  if (!box.childNodes.length) box.append(el("p", {}, "identical"));
  return box;
}

export function renderMaintenance(
  root: HTMLElement,
  ctl: MaintenanceController,
  databases: string[],
): void {
  const draw = () => {
    clear(root);

    const countsBtn = el("button", { type: "button" }, "Option counts");
    countsBtn.addEventListener("click", () => void ctl.loadCounts());
    root.append(el("section", {}, el("h3", {}, "Counts"), countsBtn));
    if (ctl.counts) root.append(countsTable(ctl.counts));

    const versionSelect = el("select", {}) as HTMLSelectElement;
    for (const version of ctl.versions) {
      versionSelect.append(el("option", { value: version }, version));
    }
    versionSelect.value = ctl.diffVersion;
    versionSelect.addEventListener("change", () => {
      ctl.diffVersion = versionSelect.value;
    });
    const diffBtn = el("button", { type: "button" }, "Diff");
    diffBtn.addEventListener("click", () => void ctl.runDiff());
    root.append(el("section", {},
      el("h3", {}, "Compare with a version"), versionSelect, diffBtn));
    if (ctl.diffReport) root.append(diffView(ctl.diffReport));

    const tagSelect = el("select", {}) as HTMLSelectElement;
    for (const def of ctl.selectionTags()) {
      tagSelect.append(el("option", { value: def.name }, def.name));
    }
    const oldSelect = el("select", {}) as HTMLSelectElement;
    const fillOld = () => {
      clear(oldSelect);
      const def = ctl.selectionTags().find((d) => d.name === tagSelect.value);
      for (const option of def?.options ?? []) {
        oldSelect.append(el("option", { value: option }, option));
      }
    };
    tagSelect.addEventListener("change", fillOld);
    fillOld();
    const newInput = el("input", {
      type: "text", placeholder: "new name",
    }) as HTMLInputElement;
    const renameBtn = el("button", { type: "button" }, "Replace option");
    renameBtn.addEventListener("click", () => {
      if (tagSelect.value && oldSelect.value && newInput.value) {
        void ctl.replaceOption(tagSelect.value, oldSelect.value, newInput.value);
      }
    });
    root.append(el("section", {},
      el("h3", {}, "Rename or merge an option"),
      tagSelect, oldSelect, newInput, renameBtn));

    const boxes: HTMLInputElement[] = [];
    const mergeList = el("div", { class: "merge-list" });
    for (const name of databases) {
      const box = el("input", {
        type: "checkbox", value: name,
      }) as HTMLInputElement;
      boxes.push(box);
      mergeList.append(el("label", {}, box, name));
    }
    const outInput = el("input", {
      type: "text", placeholder: "merged name",
    }) as HTMLInputElement;
    const policySelect = el("select", {}) as HTMLSelectElement;
    for (const policy of ["error", "first", "last"]) {
      policySelect.append(el("option", { value: policy }, policy));
    }
    const mergeBtn = el("button", { type: "button" }, "Merge");
    mergeBtn.addEventListener("click", () => {
      const chosen = boxes.filter((b) => b.checked).map((b) => b.value);
      if (chosen.length >= 2 && outInput.value) {
        void ctl.mergeDatabases(chosen, outInput.value, policySelect.value);
      }
    });
    root.append(el("section", {},
      el("h3", {}, "Merge databases"),
      mergeList, outInput, policySelect, mergeBtn));

    if (ctl.message) root.append(el("p", { class: "ok-note" }, ctl.message));
    if (ctl.error) root.append(el("p", { class: "save-error" }, ctl.error));
  };
  ctl.onChange = draw;
  draw();
}
