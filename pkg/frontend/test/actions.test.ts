import { describe, expect, it } from "vitest";
import { actionToSql } from "../src/actions";

describe("actionToSql", () => {
  it("builds the place-child INSERT from the drop position", () => {
    expect(
      actionToSql({ kind: "place-child", ninu: "N", posx: 120, posy: 80 }),
    ).toBe("INSERT INTO sandbox (ninu, posx, posy) VALUES ('N', 120, 80);");
  });

  it("builds a parenthesizable move-child UPDATE", () => {
    expect(
      actionToSql({ kind: "move-child", ninu: "N", posx: 10, posy: 20 }),
    ).toBe("UPDATE sandbox SET posx = 10, posy = 20 WHERE ninu = 'N';");
  });

  it("builds the give-toy UPDATE", () => {
    expect(actionToSql({ kind: "give-toy", ninu: "N", item: 3 })).toBe(
      "UPDATE sandbox SET item = 3 WHERE ninu = 'N';",
    );
  });

  it("builds the return-toy UPDATE", () => {
    expect(actionToSql({ kind: "return-toy", ninu: "N" })).toBe(
      "UPDATE sandbox SET item = NULL WHERE ninu = 'N';",
    );
  });

  it("builds the remove-child DELETE", () => {
    expect(actionToSql({ kind: "remove-child", ninu: "N" })).toBe(
      "DELETE FROM sandbox WHERE ninu = 'N';",
    );
  });

  it("passes raw SQL through unchanged", () => {
    expect(actionToSql({ kind: "raw-sql", sql: "SHOW TABLES;" })).toBe("SHOW TABLES;");
  });

  it("escapes quotes in identifiers destined for string literals", () => {
    expect(actionToSql({ kind: "remove-child", ninu: "O'Neil" })).toBe(
      "DELETE FROM sandbox WHERE ninu = 'O''Neil';",
    );
  });

  it("refuses an action missing its parameters", () => {
    expect(() => actionToSql({ kind: "give-toy", ninu: "N" })).toThrow(/item/);
  });
});
