/**
 * Per-browser-tab UI state: which database and paper are open, the
 * paper-list search text, the active screen, and the dirty tag cells
 * awaiting a Save.
 *
 * Dirty cells exist only for the selected paper. Any action that would
 * move away from them (picking another paper, switching screens)
 * first runs the discard prompt; declining keeps the selection.
 */

import type { PaperItem } from "./search.js";

export type Tab = "new" | "edit" | "sync" | "maintenance" | "viewer";

export const TAB_TITLES: Record<Tab, string> = {
  new: "New database",
  edit: "Tag edit",
  sync: "Sync",
  maintenance: "Maintenance",
  viewer: "Viewer",
};

export class Session {
  database: string | null = null;
  papers: PaperItem[] = [];
  search = "";
  selectedKey: string | null = null;
  activeTab: Tab = "edit";

  /** Injectable so tests (and the app shell) decide how to ask. */
  confirmDiscard: () => boolean = () => true;

  private dirtyCells = new Map<string, string>();

  isDirty(): boolean {
    return this.dirtyCells.size > 0;
  }

  dirtyValue(tag: string): string | undefined {
    return this.dirtyCells.get(tag);
  }

  markDirty(tag: string, encoded: string): void {
    this.dirtyCells.set(tag, encoded);
  }

  unmarkDirty(tag: string): void {
    this.dirtyCells.delete(tag);
  }

  clearDirty(): void {
    this.dirtyCells.clear();
  }

  /** The PATCH body: every dirty cell of the selected paper, at once. */
  dirtyPatch(): Record<string, string> {
    return Object.fromEntries(this.dirtyCells);
  }

  /**
   * Select a paper. Returns false (selection unchanged) when unsaved
   * edits exist and the discard prompt is declined.
   */
  selectPaper(key: string | null): boolean {
    if (key === this.selectedKey) return true;
    if (this.isDirty() && !this.confirmDiscard()) return false;
    this.dirtyCells.clear();
    this.selectedKey = key;
    return true;
  }

  /** Same guard for leaving the editor screen entirely. */
  switchTab(tab: Tab): boolean {
    if (tab === this.activeTab) return true;
    if (this.isDirty() && !this.confirmDiscard()) return false;
    this.dirtyCells.clear();
    this.activeTab = tab;
    return true;
  }

  setDatabase(name: string | null): boolean {
    if (name === this.database) return true;
    if (this.isDirty() && !this.confirmDiscard()) return false;
    this.dirtyCells.clear();
    this.database = name;
    this.selectedKey = null;
    this.papers = [];
    this.search = "";
    return true;
  }
}
