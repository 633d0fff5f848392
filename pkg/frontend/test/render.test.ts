import { describe, expect, it } from "vitest";
import { feedbackBanner, resultTables, textTable } from "../src/render";
import type { ResponseEnvelope } from "../src/types";

const SELECT_ENVELOPE: ResponseEnvelope = {
  Results: [
    {
      ExecutedSQL: "SELECT name, surname FROM children;",
      RequestedSQL: "SELECT name, surname FROM children;",
      Rows: [
        [
          { Name: "name", Value: "Loys" },
          { Name: "surname", Value: "Novak" },
        ],
        [
          { Name: "name", Value: "Ana" },
          { Name: "surname", Value: null },
        ],
      ],
    },
    {
      ExecutedSQL: "SHOW TABLES;",
      RequestedSQL: "SHOW TABLES;",
      Rows: [[{ Name: "Tables_in_playground", Value: "children" }]],
    },
  ],
  Feedback: "OK: statement 1: 2 row(s) returned; statement 2: 1 row(s) returned",
  GenerationDate: "2012-07-15T12:00:00Z",
  OK: true,
};

describe("render", () => {
  it("produces one column-ordered table per result entry", () => {
    const tables = resultTables(SELECT_ENVELOPE);
    expect(tables).toHaveLength(2);
    expect(tables[0].columns).toEqual(["name", "surname"]);
    expect(tables[0].rows).toEqual([
      ["Loys", "Novak"],
      ["Ana", null],
    ]);
    expect(tables[1].columns).toEqual(["Tables_in_playground"]);
  });

  it("splits feedback into a banner code and detail", () => {
    const banner = feedbackBanner({
      ...SELECT_ENVELOPE,
      OK: false,
      Feedback: "NoPermission: no SELECT permission for playground.children.birthday (statement 1)",
    });
    expect(banner.ok).toBe(false);
    expect(banner.code).toBe("NoPermission");
    expect(banner.detail).toContain("children.birthday");
  });

  it("renders a plain-text table with NULL markers", () => {
    const text = textTable(resultTables(SELECT_ENVELOPE)[0]);
    expect(text).toContain("name");
    expect(text.split("\n")).toHaveLength(4);
    expect(text).toContain("NULL");
  });

  it("renders an empty relation placeholder", () => {
    const text = textTable({ requestedSql: "", executedSql: "", columns: [], rows: [] });
    expect(text).toBe("(no rows)");
  });
});
