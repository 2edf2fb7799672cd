import { describe, expect, it } from "vitest";

import { Session } from "../src/session.js";

function dirtySession(): Session {
  const session = new Session();
  session.database = "papers";
  session.selectedKey = "ABCD1234";
  session.markDirty("StudyType", "Lab");
  return session;
}

describe("dirty tracking", () => {
  it("collects the PATCH body from dirty cells only", () => {
    const session = dirtySession();
    session.markDirty("Region", "Arctic; Pacific");
    expect(session.dirtyPatch()).toEqual({
      StudyType: "Lab",
      Region: "Arctic; Pacific",
    });
  });

  it("unmarking a cell removes it from the patch", () => {
    const session = dirtySession();
    session.unmarkDirty("StudyType");
    expect(session.isDirty()).toBe(false);
    expect(session.dirtyPatch()).toEqual({});
  });
});

describe("switching away from unsaved edits", () => {
  it("prompts before selecting another paper and can be declined", () => {
    const session = dirtySession();
    let asked = 0;
    session.confirmDiscard = () => {
      asked += 1;
      return false;
    };
    expect(session.selectPaper("EFGH5678")).toBe(false);
    expect(asked).toBe(1);
    expect(session.selectedKey).toBe("ABCD1234");
    expect(session.isDirty()).toBe(true);
  });

  it("accepting the prompt discards the edits and switches", () => {
    const session = dirtySession();
    session.confirmDiscard = () => true;
    expect(session.selectPaper("EFGH5678")).toBe(true);
    expect(session.selectedKey).toBe("EFGH5678");
    expect(session.isDirty()).toBe(false);
  });

  it("re-selecting the same paper never prompts", () => {
    const session = dirtySession();
    session.confirmDiscard = () => {
      throw new Error("should not ask");
    };
    expect(session.selectPaper("ABCD1234")).toBe(true);
    expect(session.isDirty()).toBe(true);
  });

  it("guards tab switches and database switches the same way", () => {
    const session = dirtySession();
    session.confirmDiscard = () => false;
    expect(session.switchTab("viewer")).toBe(false);
    expect(session.activeTab).toBe("edit");
    expect(session.setDatabase("other")).toBe(false);
    expect(session.database).toBe("papers");

    session.confirmDiscard = () => true;
    expect(session.switchTab("viewer")).toBe(true);
    expect(session.activeTab).toBe("viewer");
    expect(session.isDirty()).toBe(false);
  });

  it("clean sessions switch without prompting", () => {
    const session = new Session();
    session.confirmDiscard = () => {
      throw new Error("should not ask");
    };
    expect(session.selectPaper("X")).toBe(true);
    expect(session.switchTab("sync")).toBe(true);
    expect(session.setDatabase("papers")).toBe(true);
  });
});
