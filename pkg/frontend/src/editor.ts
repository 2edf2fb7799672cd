/**
 * Tag edit screen: paper list on the left, citation details and note
 * fields in the middle, one control per tag on the right, grouped the
 * way the categories file groups them.
 *
 * Edits accumulate as dirty cells in the session; the Save button
 * issues a single PATCH carrying all of them, and the response row
 * replaces the local copy. Nothing is written on individual clicks.
 */

import { Api, ApiError } from "./api.js";
import type { RowJson, SchemaJson, TagDef } from "./api.js";
import { el, clear } from "./dom.js";
import { encodeMulti, decodeMulti } from "./patch.js";
import { filterPapers } from "./search.js";
import type { PaperItem } from "./search.js";
import { Session } from "./session.js";

const CITATION_ORDER = [
  "Item Type", "Author", "Title", "Publication Year",
  "Publication Title", "DOI", "Url", "Abstract Note", "Date Added",
];

/** Which tag a service error complains about, if it names one. */
export function offendingTag(detail: string, tags: string[]): string | null {
  for (const tag of tags) {
    if (detail.includes(`'${tag}'`)) return tag;
  }
  return null;
}

export class EditorController {
  row: RowJson | null = null;
  /** tag name -> message, shown inline next to that tag's control */
  fieldErrors = new Map<string, string>();
  saveError: string | null = null;
  /** Set when a save hit the writer-lock timeout; offer a retry. */
  retryNeeded = false;
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

  tagDefs(): TagDef[] {
    return this.schema.groups.flatMap((group) => group.tags);
  }

  noteDefs(): TagDef[] {
    return this.tagDefs().filter((def) => def.kind === "note");
  }

  async openPaper(key: string): Promise<boolean> {
    if (!this.session.selectPaper(key)) return false;
    this.fieldErrors.clear();
    this.saveError = null;
    this.retryNeeded = false;
    this.row = await this.api.getRow(this.database, key);
    this.onChange();
    return true;
  }

  /** Current cell text: the unsaved draft if present, else the row's. */
  cellText(tag: string): string {
    const draft = this.session.dirtyValue(tag);
    if (draft !== undefined) return draft;
    return this.row?.tags[tag] ?? "";
  }

  multiSelection(tag: string): Set<string> {
    return decodeMulti(this.cellText(tag));
  }

  private stage(tag: string, encoded: string): void {
    if (encoded === (this.row?.tags[tag] ?? "")) {
      this.session.unmarkDirty(tag);
    } else {
      this.session.markDirty(tag, encoded);
    }
    this.onChange();
  }

  setSingle(def: TagDef, option: string): void {
    this.stage(def.name, option);
  }

  clearCell(def: TagDef): void {
    this.stage(def.name, "");
  }

  toggleMulti(def: TagDef, option: string): void {
    const selected = this.multiSelection(def.name);
    if (selected.has(option)) selected.delete(option);
    else selected.add(option);
    this.stage(def.name, encodeMulti(def, selected));
  }

  setValue(def: TagDef, text: string): void {
    this.stage(def.name, text);
  }

  async save(): Promise<void> {
    if (!this.session.isDirty() || !this.session.selectedKey) return;
    const patch = this.session.dirtyPatch();
    this.saveError = null;
    this.retryNeeded = false;
    this.fieldErrors.clear();
    try {
      this.row = await this.api.patchTags(
        this.database,
        this.session.selectedKey,
        patch,
      );
      this.session.clearDirty();
    } catch (error) {
      if (error instanceof ApiError) {
        if (error.status === 409) {
          this.retryNeeded = true;
          this.saveError = "The database is busy; retry the save?";
        } else {
          const tag = offendingTag(error.message, Object.keys(patch));
          if (tag) this.fieldErrors.set(tag, error.message);
          else this.saveError = error.message;
        }
      } else {
        this.saveError = String(error);
      }
    }
    this.onChange();
  }
}

function paperListPanel(ctl: EditorController): HTMLElement {
  const session = ctl.session;
  const list = el("ul", { class: "paper-list" });

  const redrawList = () => {
    clear(list);
    for (const paper of filterPapers(session.search, session.papers)) {
      const item = el(
        "li",
        {
          class: paper.key === session.selectedKey ? "selected" : "",
          "data-key": paper.key,
        },
        `${paper.author} (${paper.year}) ${paper.title}`,
      );
      item.addEventListener("click", () => void ctl.openPaper(paper.key));
      list.appendChild(item);
    }
  };

  const search = el("input", {
    type: "search",
    placeholder: "author, title, year",
    value: session.search,
  });
  // narrowing is purely client-side; no request on input
  search.addEventListener("input", () => {
    session.search = search.value;
    redrawList();
  });

  redrawList();
  return el("div", { class: "panel papers" }, search, list);
}

function citationPanel(ctl: EditorController): HTMLElement {
  const panel = el("div", { class: "panel citation" });
  if (!ctl.row) {
    panel.append(el("p", { class: "hint" }, "Select a paper."));
    return panel;
  }
  const dl = el("dl");
  for (const column of CITATION_ORDER) {
    const value = ctl.row.citation[column] ?? "";
    if (!value) continue;
    dl.append(el("dt", {}, column), el("dd", {}, value));
  }
  panel.append(el("h3", {}, ctl.row.key), dl);

  for (const def of ctl.noteDefs()) {
    const area = el("textarea", {
      rows: "4",
      "data-tag": def.name,
    }) as HTMLTextAreaElement;
    area.value = ctl.cellText(def.name);
    // commit on blur; a redraw per keystroke would drop focus
    area.addEventListener("change", () => ctl.setValue(def, area.value));
    panel.append(el("label", { class: "note-label" }, def.name), area);
    const problem = ctl.fieldErrors.get(def.name);
    if (problem) panel.append(el("p", { class: "field-error" }, problem));
  }
  return panel;
}

function controlFor(ctl: EditorController, def: TagDef): HTMLElement {
  const wrap = el("div", { class: `tag-control kind-${def.kind}` });
  wrap.append(el("span", { class: "tag-name" }, def.name));

  if (def.kind === "single") {
    // options exactly as the schema lists them; no free text
    for (const option of def.options) {
      const input = el("input", {
        type: "radio",
        name: `tag-${def.name}`,
        value: option,
      }) as HTMLInputElement;
      input.checked = ctl.cellText(def.name) === option;
      input.addEventListener("change", () => ctl.setSingle(def, option));
      wrap.append(el("label", {}, input, option));
    }
    const clearBtn = el("button", { type: "button", class: "clear" }, "clear");
    clearBtn.addEventListener("click", () => ctl.clearCell(def));
    wrap.append(clearBtn);
  } else if (def.kind === "multi") {
    const selected = ctl.multiSelection(def.name);
    for (const option of def.options) {
      const input = el("input", {
        type: "checkbox",
        name: `tag-${def.name}`,
        value: option,
      }) as HTMLInputElement;
      input.checked = selected.has(option);
      input.addEventListener("change", () => ctl.toggleMulti(def, option));
      wrap.append(el("label", {}, input, option));
    }
  } else if (def.kind === "date") {
    const input = el("input", {
      type: "date",
      name: `tag-${def.name}`,
    }) as HTMLInputElement;
    input.value = ctl.cellText(def.name);
    input.addEventListener("change", () => ctl.setValue(def, input.value));
    wrap.append(input);
  } else if (def.kind === "text") {
    const input = el("input", {
      type: "text",
      name: `tag-${def.name}`,
    }) as HTMLInputElement;
    input.value = ctl.cellText(def.name);
    input.addEventListener("change", () => ctl.setValue(def, input.value));
    wrap.append(input);
  }

  const problem = ctl.fieldErrors.get(def.name);
  if (problem) wrap.append(el("p", { class: "field-error" }, problem));
  return wrap;
}

function tagPanel(ctl: EditorController): HTMLElement {
  const panel = el("div", { class: "panel tags" });
  if (!ctl.row) return panel;
  for (const group of ctl.schema.groups) {
    const dataTags = group.tags.filter((def) => def.kind !== "note");
    if (!dataTags.length) continue;
    const box = el("fieldset", {}, el("legend", {}, group.name));
    for (const def of dataTags) box.append(controlFor(ctl, def));
    panel.append(box);
  }

  const save = el("button", { type: "button", class: "save" }, "Save");
  save.addEventListener("click", () => void ctl.save());
  panel.append(save);
  if (ctl.session.isDirty()) {
    panel.append(el("span", { class: "dirty-note" }, "unsaved changes"));
  }
  if (ctl.saveError) {
    panel.append(el("p", { class: "save-error" }, ctl.saveError));
    if (ctl.retryNeeded) {
      const retry = el("button", { type: "button", class: "retry" }, "Retry");
      retry.addEventListener("click", () => void ctl.save());
      panel.append(retry);
    }
  }
  return panel;
}

export function renderTagEditor(
  root: HTMLElement,
  ctl: EditorController,
): void {
  const draw = () => {
    clear(root);
    root.append(
      paperListPanel(ctl),
      citationPanel(ctl),
      tagPanel(ctl),
    );
  };
  ctl.onChange = draw;
  draw();
}
