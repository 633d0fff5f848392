import { describe, expect, it } from "vitest";
import { actionRequest, actionToSql, type UiAction } from "../src/actions";
import { consoleRequest } from "../src/envelope";

const ACTIONS: UiAction[] = [
  { kind: "place-child", ninu: "5002020500991", posx: 120, posy: 80 },
  { kind: "remove-child", ninu: "5002020500991" },
  { kind: "move-child", ninu: "5002020500991", posx: 7, posy: 9 },
  { kind: "give-toy", ninu: "5002020500991", item: 3 },
  { kind: "return-toy", ninu: "5002020500991" },
  { kind: "raw-sql", sql: "SELECT name, surname FROM children;" },
];

describe("console/GUI parity", () => {
  it("produces byte-identical envelopes for every action kind", () => {
    for (const action of ACTIONS) {
      const viaGui = actionRequest(action);
      const viaConsole = consoleRequest(actionToSql(action));
      expect(viaGui).toBe(viaConsole);
    }
  });

  it("holds with a signature and a comment attached", () => {
    for (const action of ACTIONS) {
      const viaGui = actionRequest(action, "c2lnbmF0dXJl", "note");
      const viaConsole = consoleRequest(actionToSql(action), "c2lnbmF0dXJl", "note");
      expect(viaGui).toBe(viaConsole);
    }
  });

  it("serializes the documented field names in a fixed order", () => {
    const body = consoleRequest("SHOW TABLES;", "sig", "why");
    expect(body).toBe('{"SQL":"SHOW TABLES;","Pkcs7":"sig","Comment":"why"}');
    expect(consoleRequest("SHOW TABLES;")).toBe('{"SQL":"SHOW TABLES;"}');
  });
});
